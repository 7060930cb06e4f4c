#pragma once

#include <chrono>
#include <json.hpp>
#include <string>
#include <vector>

#include "spherical.hpp"

namespace bdr {

struct ExecOptions {
  unsigned threads = default_threads();
  std::uint64_t chunk = 2048;  // sphere words per reduction chunk; fixes the summation order
};

struct ConvergenceRow {
  int n = 0;
  Complex lhs;
  Complex rhs;
  double abs_error = 0.0;
  double rel_error = 0.0;
  double wall_ms = 0.0;
  std::uint64_t work = 0;  // grouped coefficient cells visited
};

struct Verdict {
  bool pass = true;
  std::string detail;
};

struct ExperimentReport {
  std::string id;
  nlohmann::json params = nlohmann::json::object();
  std::vector<ConvergenceRow> rows;
  Verdict verdict;
  nlohmann::json extra = nlohmann::json::object();
};

struct VerdictRule {
  double tol = 0.05;
  int window = 4;  // trailing rows whose relative error may not increase
};

inline ConvergenceRow make_row(int n, Complex lhs, Complex rhs) {
  ConvergenceRow r;
  r.n = n;
  r.lhs = lhs;
  r.rhs = rhs;
  r.abs_error = std::abs(lhs - rhs);
  r.rel_error = std::abs(rhs) > 0.0 ? r.abs_error / std::abs(rhs) : r.abs_error;
  return r;
}

inline Verdict convergence_verdict(const std::vector<ConvergenceRow>& rows, const VerdictRule& rule) {
  if (rows.empty()) return {false, "no rows"};
  const ConvergenceRow& last = rows.back();
  if (!(last.rel_error < rule.tol))
    return {false, "relative error " + std::to_string(last.rel_error) + " at n=" + std::to_string(last.n) +
                       " is not below " + std::to_string(rule.tol)};
  const std::size_t from = rows.size() > static_cast<std::size_t>(rule.window) ? rows.size() - rule.window : 0;
  for (std::size_t i = from + 1; i < rows.size(); ++i)
    if (rows[i].rel_error > rows[i - 1].rel_error * (1.0 + 1e-9) + 1e-15)
      return {false, "relative error increases at n=" + std::to_string(rows[i].n)};
  return {true, "relative error " + std::to_string(last.rel_error) + " at n=" + std::to_string(last.n)};
}

struct ChunkAccumulator {
  ComplexSum sum;
  std::uint64_t work = 0;
};

// Sums body(g, ginv, acc) over S_n in fixed chunks; chunk sums are combined in rank order.
template <class Body>
ChunkAccumulator sphere_sum(const GroupContext& ctx, int n, const ExecOptions& opt, Body&& body) {
  const std::uint64_t count = ctx.sphere_size(n);
  ctx.check_budget(count);
  const std::uint64_t chunks = (count + opt.chunk - 1) / opt.chunk;
  std::vector<ChunkAccumulator> parts(chunks);
  for_each_chunk(count, opt.chunk, opt.threads, [&](std::uint64_t c, std::uint64_t b, std::uint64_t e) {
    std::vector<Letter> ginv(n);
    ChunkAccumulator& acc = parts[c];
    for_each_in_sphere(ctx, n, b, e, [&](std::span<const Letter> g, std::uint64_t) {
      for (int j = 0; j < n; ++j) ginv[j] = ctx.inverse_letter(g[n - 1 - j]);
      body(g, std::span<const Letter>(ginv), acc);
    });
  });
  ChunkAccumulator total;
  for (const auto& p : parts) {
    total.sum.add(p.sum);
    total.work += p.work;
  }
  return total;
}

template <class Fn>
double timed_ms(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

inline double tree_sup_norm(const TreeTestFunction& f) {
  double m = sup_norm(f.boundary);
  for (const auto& x : f.interior) m = std::max(m, std::abs(x));
  return m;
}

inline nlohmann::json context_params(const GroupContext& ctx) {
  return {{"rank", ctx.rank()}, {"epsilon", ctx.epsilon()}};
}

// Grouped coefficient <pi_t(g)v, w> together with <pi_t(g)1, 1> from the same cells,
// so that normalized coefficients of constants are exactly 1.
struct NormalizedCoefficient {
  Complex value;
  double phi;
};

inline NormalizedCoefficient coefficient_with_phi(const GroupContext& ctx, std::span<const Letter> g,
                                                  std::span<const Letter> ginv, const std::vector<double>& weights,
                                                  const CylinderFunction& v, const CylinderFunction& w,
                                                  std::uint64_t& work) {
  const int n = static_cast<int>(g.size());
  ComplexSum s;
  CompensatedSum p;
  work += for_each_coefficient_cell(ctx, g, ginv, v.level, w.level,
                                    [&](int beta, double mass, std::uint64_t vi, std::uint64_t wi) {
                                      const double x = weights[beta + n] * mass;
                                      p.add(x);
                                      s.add(x * v.values[vi] * std::conj(w.values[wi]));
                                    });
  return {s.value(), p.value()};
}

// Sphere averages of f(g o) g(g^{-1} o), or of the boundary values at the hat/check rays.
inline ExperimentReport equi_experiment(const GroupContext& ctx, const TreeTestFunction& f,
                                        const TreeTestFunction& g, int n_max, bool boundary_points = false,
                                        const ExecOptions& opt = {}, const VerdictRule& rule = {}) {
  require(n_max >= 1, "n_max must be positive");
  ExperimentReport rep;
  rep.id = boundary_points ? "equi-boundary" : "equi";
  rep.params = context_params(ctx);
  rep.params["n_max"] = n_max;
  rep.params["f_level"] = f.level;
  rep.params["g_level"] = g.level;
  const Complex rhs = integral(ctx, f.boundary) * integral(ctx, g.boundary);
  for (int n = 1; n <= n_max; ++n) {
    ChunkAccumulator acc;
    const double ms = timed_ms([&] {
      acc = sphere_sum(ctx, n, opt, [&](std::span<const Letter> x, std::span<const Letter> xinv, ChunkAccumulator& a) {
        if (!boundary_points) {
          a.sum.add(eval_tree_function(ctx, f, x) * eval_tree_function(ctx, g, xinv));
          return;
        }
        const ReducedWord hx = ray_prefix(hat_extension(ReducedWord{{x.begin(), x.end()}}), f.level);
        const ReducedWord cx = ray_prefix(hat_extension(ReducedWord{{xinv.begin(), xinv.end()}}), g.level);
        a.sum.add(f.boundary.values[word_index(ctx, hx.span())] * g.boundary.values[word_index(ctx, cx.span())]);
      });
    });
    ConvergenceRow row = make_row(n, acc.sum.value() / static_cast<double>(ctx.sphere_size(n)), rhs);
    row.wall_ms = ms;
    rep.rows.push_back(row);
  }
  rep.verdict = convergence_verdict(rep.rows, rule);
  return rep;
}

// Pair test function of the Gromov product only.
using RadialPairFunction = std::function<double(int)>;

inline double radial_pair_limit(const GroupContext& ctx, double t, const RadialPairFunction& F) {
  CompensatedSum s;
  for (int m = 0; m < 100000; ++m) {
    const double term = annulus_profile_d(ctx, -1, m) * F(m) * ctx.qpow((1.0 - 2.0 * t) * m);
    s.add(term);
    if (m > 0 && std::abs(term) < 1e-18 * std::abs(s.value())) return s.value();
  }
  throw ConvergenceError("radial pair limit did not converge");
}

// Sphere pair averages of F(g,h) k_t(g,h), computed from the closed-form pair counts.
// `counts(N)` may supply the pair counts for m = 0..N (e.g. from a cache).
using PairCountSource = std::function<std::vector<BigInt>(int)>;

inline ExperimentReport pair_kernel_experiment_radial(const GroupContext& ctx, double t, const RadialPairFunction& F,
                                                      int n_max, const VerdictRule& rule = {},
                                                      const PairCountSource& counts = {}) {
  require(t > 0.0 && t < 0.5, "pair kernel experiment needs 0 < t < 1/2");
  ExperimentReport rep;
  rep.id = "pairs-radial";
  rep.params = context_params(ctx);
  rep.params["t"] = t;
  rep.params["n_max"] = n_max;
  const Complex rhs = radial_pair_limit(ctx, t, F);
  for (int N = 1; N <= n_max; ++N) {
    CompensatedSum s;
    const Rational total = exact_sphere_size(ctx, N) * exact_sphere_size(ctx, N);
    double ms = timed_ms([&] {
      const std::vector<BigInt> c = counts ? counts(N) : std::vector<BigInt>{};
      require(!counts || c.size() == static_cast<std::size_t>(N + 1), "pair count source returned the wrong size");
      for (int m = 0; m <= N; ++m) {
        const double frac = static_cast<double>(Rational(counts ? c[m] : pair_count_sphere(ctx, N, m)) / total);
        s.add(frac * F(m) * ctx.qpow((1.0 - 2.0 * t) * m));
      }
    });
    ConvergenceRow row = make_row(N, s.value(), rhs);
    row.wall_ms = ms;
    rep.rows.push_back(row);
  }
  rep.verdict = convergence_verdict(rep.rows, rule);
  return rep;
}

// Pair test function constant on level-k cylinder pairs: F[u * dim + v].
struct CylinderPairFunction {
  int level = 1;
  std::vector<Complex> values;
};

inline CylinderPairFunction tensor_pair(const CylinderFunction& a, const CylinderFunction& b) {
  require(a.level >= 1 && a.level == b.level, "tensor factors must share a positive level");
  const std::size_t dim = a.values.size();
  CylinderPairFunction F{a.level, std::vector<Complex>(dim * dim)};
  for (std::size_t u = 0; u < dim; ++u)
    for (std::size_t v = 0; v < dim; ++v) F.values[u * dim + v] = a.values[u] * b.values[v];
  return F;
}

inline Complex cylinder_pair_limit(const GroupContext& ctx, double t, const CylinderPairFunction& F) {
  const GramMatrix G = gram_matrix(ctx, t, F.level);
  const auto dim = static_cast<std::size_t>(G.entries.rows());
  ComplexSum s;
  for (std::size_t u = 0; u < dim; ++u)
    for (std::size_t v = 0; v < dim; ++v) s.add(F.values[u * dim + v] * G.entries(u, v));
  return s.value();
}

// Same averages by the explicit double loop over S_N x S_N.
inline ExperimentReport pair_kernel_experiment_cylinder(const GroupContext& ctx, double t, const CylinderPairFunction& F,
                                                        int n_min, int n_max, const ExecOptions& opt = {},
                                                        const VerdictRule& rule = {}) {
  require(t > 0.0 && t < 0.5, "pair kernel experiment needs 0 < t < 1/2");
  require(n_min >= F.level, "sphere radius below the pair function level");
  ExperimentReport rep;
  rep.id = "pairs-cylinder";
  rep.params = context_params(ctx);
  rep.params["t"] = t;
  rep.params["level"] = F.level;
  rep.params["n_max"] = n_max;
  const Complex rhs = cylinder_pair_limit(ctx, t, F);
  const std::size_t dim = level_dimension(ctx, F.level);
  for (int N = n_min; N <= n_max; ++N) {
    const std::uint64_t count = ctx.sphere_size(N);
    ctx.check_budget(count * count);
    std::vector<Letter> words(count * N);
    std::vector<std::uint32_t> cyl(count);
    for_each_in_sphere(ctx, N, 0, count, [&](std::span<const Letter> w, std::uint64_t i) {
      std::copy(w.begin(), w.end(), words.begin() + i * N);
      cyl[i] = static_cast<std::uint32_t>(prefix_index(ctx, i, N, F.level));
    });
    std::vector<double> kern(N + 1);
    for (int m = 0; m <= N; ++m) kern[m] = ctx.qpow((1.0 - 2.0 * t) * m);
    ChunkAccumulator total;
    const double ms = timed_ms([&] {
      const std::uint64_t chunks = (count + opt.chunk - 1) / opt.chunk;
      std::vector<ComplexSum> parts(chunks);
      for_each_chunk(count, opt.chunk, opt.threads, [&](std::uint64_t c, std::uint64_t b, std::uint64_t e) {
        for (std::uint64_t i = b; i < e; ++i) {
          const Letter* gi = &words[i * N];
          const Complex* Frow = &F.values[cyl[i] * dim];
          ComplexSum row;
          for (std::uint64_t j = 0; j < count; ++j) {
            const Letter* hj = &words[j * N];
            int m = 0;
            while (m < N && gi[m] == hj[m]) ++m;
            row.add(Frow[cyl[j]] * kern[m]);
          }
          parts[c].add(row);
        }
      });
      for (const auto& p : parts) total.sum.add(p);
    });
    const double denom = static_cast<double>(count) * static_cast<double>(count);
    ConvergenceRow row = make_row(N, total.sum.value() / denom, rhs);
    row.wall_ms = ms;
    row.work = count * count;
    rep.rows.push_back(row);
  }
  rep.verdict = convergence_verdict(rep.rows, rule);
  return rep;
}

// Pairing <a, b>_i: L^2 for i = 0, <I_t a, b> for i = 1, <I_t a, I_t b> for i = 2.
inline Complex graded_pairing(const GroupContext& ctx, double t, int i, const CylinderFunction& a,
                              const CylinderFunction& b, double tol) {
  switch (i) {
    case 0: return l2_inner(ctx, a, b);
    case 1: return ht_inner(ctx, t, a, b);
    case 2: return kt_inner(ctx, t, a, b, tol);
    default: throw PreconditionError("pairing index must be 0, 1 or 2");
  }
}

inline void check_pairing(double t, int i) {
  require(i >= 0 && i <= 2, "pairing index must be 0, 1 or 2");
  require(t > 0.0, "experiment needs t > 0");
  if (i == 1) require(t <= 0.5, "H_t pairing needs t <= 1/2");
}

inline CylinderFunction pointwise_product(const GroupContext& ctx, const CylinderFunction& a, const CylinderFunction& b) {
  return combine(ctx, a, b, [](Complex x, Complex y) { return x * y; });
}

// Sphere averages of f(g o) g(g^{-1} o) <pi_t(g)v, w>_i / phi_t(g).
inline ExperimentReport bml_experiment(const GroupContext& ctx, double t, int i, const CylinderFunction& v,
                                       const CylinderFunction& w, const TreeTestFunction& f,
                                       const TreeTestFunction& g, int n_max, double tol = 1e-8,
                                       const ExecOptions& opt = {}, const VerdictRule& rule = {}) {
  check_pairing(t, i);
  ExperimentReport rep;
  rep.id = "bml";
  rep.params = context_params(ctx);
  rep.params.update({{"t", t}, {"i", i}, {"n_max", n_max}, {"v_level", v.level}, {"w_level", w.level},
                     {"f_level", f.level}, {"g_level", g.level}, {"tol", tol}});
  const CylinderFunction W = knapp_stein_power(ctx, t, w, i);
  const Complex first = kernel_form(ctx, t, v, conj(g.boundary)) / sigma(ctx, t);
  const Complex second = std::conj(graded_pairing(ctx, t, i, w, f.boundary, tol));
  const Complex rhs = first * second;
  for (int n = 1; n <= n_max; ++n) {
    const auto weights = rn_weights(ctx, t, n);
    ChunkAccumulator acc;
    const double ms = timed_ms([&] {
      acc = sphere_sum(ctx, n, opt, [&](std::span<const Letter> x, std::span<const Letter> xinv, ChunkAccumulator& a) {
        const auto c = coefficient_with_phi(ctx, x, xinv, weights, v, W, a.work);
        a.sum.add(eval_tree_function(ctx, f, x) * eval_tree_function(ctx, g, xinv) * (c.value / c.phi));
      });
    });
    ConvergenceRow row = make_row(n, acc.sum.value() / static_cast<double>(ctx.sphere_size(n)), rhs);
    row.wall_ms = ms;
    row.work = acc.work;
    rep.rows.push_back(row);
  }
  rep.verdict = convergence_verdict(rep.rows, rule);
  return rep;
}

// Evaluates value(K) at K, 2K, ... until two successive values agree within tol.
template <class Fn>
Complex refine_until_stable(int K, int max_level, double tol, Fn&& value, const std::string& what) {
  Complex prev = value(K);
  while (K < max_level) {
    const int next = std::min(2 * K, max_level);
    const Complex cur = value(next);
    if (std::abs(cur - prev) < tol) return cur;
    prev = cur;
    K = next;
  }
  throw ConvergenceError(what + " did not settle within level " + std::to_string(max_level));
}

struct SchurInputs {
  CylinderFunction v, w, v2, w2;
  TreeTestFunction f, g;
};

inline ExperimentReport schur_experiment(const GroupContext& ctx, double t, double t2, int i, int j,
                                         const SchurInputs& in, int n_max, double tol = 1e-8,
                                         const ExecOptions& opt = {}, const VerdictRule& rule = {}) {
  check_pairing(t, i);
  check_pairing(t2, j);
  ExperimentReport rep;
  rep.id = "schur";
  rep.params = context_params(ctx);
  rep.params.update({{"t", t}, {"t_prime", t2}, {"i", i}, {"j", j}, {"n_max", n_max}, {"tol", tol},
                     {"v_level", in.v.level}, {"w_level", in.w.level}, {"v_prime_level", in.v2.level},
                     {"w_prime_level", in.w2.level}, {"f_level", in.f.level}, {"g_level", in.g.level}});
  const CylinderFunction W = knapp_stein_power(ctx, t, in.w, i);
  const CylinderFunction W2 = knapp_stein_power(ctx, t2, in.w2, j);

  const int base1 = std::max({in.v.level, in.v2.level, in.g.level, 1});
  const Complex first = refine_until_stable(base1, 12, tol, [&](int K) {
    const CylinderFunction Rv = riesz_boundary_avg(ctx, t, refine(ctx, in.v, K), K);
    const CylinderFunction Rv2 = riesz_boundary_avg(ctx, t2, refine(ctx, in.v2, K), K);
    return l2_inner(ctx, pointwise_product(ctx, in.g.boundary, Rv), Rv2);
  }, "Riesz pairing");
  const int base2 = std::max({in.w.level, in.w2.level, in.f.level, 1});
  const Complex second = std::conj(refine_until_stable(base2, 12, tol, [&](int K) {
    const CylinderFunction a = knapp_stein_power(ctx, t, refine(ctx, in.w, K), i);
    const CylinderFunction b = knapp_stein_power(ctx, t2, refine(ctx, in.w2, K), j);
    return l2_inner(ctx, a, pointwise_product(ctx, in.f.boundary, b));
  }, "intertwiner pairing"));
  const Complex rhs = first * second;

  // |c_t(g)| <= |v|_inf |W|_inf phi_t(g), so the normalized sums stay below this product.
  const double guard = tree_sup_norm(in.f) * tree_sup_norm(in.g) * sup_norm(in.v) * sup_norm(W) *
                       sup_norm(in.v2) * sup_norm(W2) * (1.0 + 1e-9);
  bool tripped = false;
  for (int n = 1; n <= n_max; ++n) {
    const auto w1 = rn_weights(ctx, t, n), w2 = rn_weights(ctx, t2, n);
    ChunkAccumulator acc;
    const double ms = timed_ms([&] {
      acc = sphere_sum(ctx, n, opt, [&](std::span<const Letter> x, std::span<const Letter> xinv, ChunkAccumulator& a) {
        const auto c1 = coefficient_with_phi(ctx, x, xinv, w1, in.v, W, a.work);
        const auto c2 = coefficient_with_phi(ctx, x, xinv, w2, in.v2, W2, a.work);
        a.sum.add(eval_tree_function(ctx, in.f, x) * eval_tree_function(ctx, in.g, xinv) * (c1.value / c1.phi) *
                  std::conj(c2.value / c2.phi));
      });
    });
    ConvergenceRow row = make_row(n, acc.sum.value() / static_cast<double>(ctx.sphere_size(n)), rhs);
    row.wall_ms = ms;
    row.work = acc.work;
    if (std::abs(row.lhs) > guard) tripped = true;
    rep.rows.push_back(row);
  }
  rep.extra["bound_guard"] = guard;
  rep.extra["guard_tripped"] = tripped;
  rep.verdict = convergence_verdict(rep.rows, rule);
  if (tripped) rep.verdict = {false, "uniform bound exceeded"};
  return rep;
}

enum class Pairing { L2 = 0, H = 1, K = 2 };

inline const char* pairing_name(Pairing p) {
  switch (p) {
    case Pairing::L2: return "L2";
    case Pairing::H: return "H";
    case Pairing::K: return "K";
  }
  return "?";
}

// Compression M[u][v] = <pi_t(f_n) 1_{C_v}, 1_{C_u}> for the uniform probability f_n on S_n.
inline Eigen::MatrixXd averaged_compression(const GroupContext& ctx, double t, int n, int level, const ExecOptions& opt) {
  const auto dim = static_cast<Eigen::Index>(level_dimension(ctx, level));
  const std::uint64_t count = ctx.sphere_size(n);
  const std::uint64_t chunks = (count + opt.chunk - 1) / opt.chunk;
  std::vector<Eigen::MatrixXd> parts(chunks, Eigen::MatrixXd::Zero(dim, dim));
  const auto weights = rn_weights(ctx, t, n);
  for_each_chunk(count, opt.chunk, opt.threads, [&](std::uint64_t c, std::uint64_t b, std::uint64_t e) {
    std::vector<Letter> ginv(n);
    Eigen::MatrixXd& M = parts[c];
    for_each_in_sphere(ctx, n, b, e, [&](std::span<const Letter> g, std::uint64_t) {
      for (int j = 0; j < n; ++j) ginv[j] = ctx.inverse_letter(g[n - 1 - j]);
      for_each_coefficient_cell(ctx, g, std::span<const Letter>(ginv), level, level,
                                [&](int beta, double mass, std::uint64_t vi, std::uint64_t wi) {
                                  M(wi, vi) += weights[beta + n] * mass;
                                });
    });
  });
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& p : parts) M += p;
  return M / static_cast<double>(count);
}

// Largest normalized pairing |<pi(f_n)x, y>_H| / (|x|_H |y|_H) over level-`level` vectors.
inline double rd_lower_bound(const GroupContext& ctx, double t, const Eigen::MatrixXd& M, int level, Pairing p) {
  const auto dim = M.rows();
  const double nu = cylinder_measure_d(ctx, level);
  Eigen::MatrixXd H;
  if (p == Pairing::L2) {
    H = Eigen::MatrixXd::Identity(dim, dim) * nu;
  } else {
    const Eigen::MatrixXd G = gram_matrix(ctx, t, level).entries;
    H = p == Pairing::H ? G : Eigen::MatrixXd(G * G / nu);
  }
  const Eigen::MatrixXd B = H * M / nu;
  const Eigen::MatrixXd S = pseudo_inverse_sqrt(H);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(S * B * S);
  return svd.singularValues()(0);
}

// omega_{|t|}(n) |f_n|_2 with |f_n|_2 = |S_n|^{-1/2}; at n = 0 the operator is the identity
// and the envelope is 1.
inline double rd_envelope(const GroupContext& ctx, double t, int n) {
  if (n == 0) return 1.0;
  return omega(ctx, std::abs(t), n) / std::sqrt(static_cast<double>(ctx.sphere_size(n)));
}

struct RdRow {
  int n;
  Pairing pairing;
  double lower_bound;
  double envelope;
  double ratio;
};

struct RdReport {
  double t = 0.0;
  int level = 2;
  std::vector<RdRow> rows;
  nlohmann::json constants = nlohmann::json::object();  // per pairing, frozen on the calibration rows
  Verdict verdict;
};

inline std::pair<double, double> rd_consistency(const GroupContext& ctx, double t, int n, int probe_level,
                                                Pairing p = Pairing::L2, const ExecOptions& opt = {}) {
  const Eigen::MatrixXd M = averaged_compression(ctx, t, n, probe_level, opt);
  return {rd_lower_bound(ctx, t, M, probe_level, p), rd_envelope(ctx, t, n)};
}

// Calibrates C on 1 <= n <= calibrate_max and validates lower <= C * envelope on the remaining rows.
// The n = 0 row must satisfy the bound with C = 1.
inline RdReport rd_experiment(const GroupContext& ctx, double t, int probe_level, int n_max, int calibrate_max = 5,
                              const ExecOptions& opt = {}) {
  require(n_max > calibrate_max, "validation rows needed beyond the calibration range");
  RdReport rep;
  rep.t = t;
  rep.level = probe_level;
  std::vector<Pairing> pairings{Pairing::L2};
  if (t > 0.0 && t <= 0.5) pairings.push_back(Pairing::H);
  if (t > 0.0) pairings.push_back(Pairing::K);
  for (int n = 0; n <= n_max; ++n) {
    const Eigen::MatrixXd M = averaged_compression(ctx, t, n, probe_level, opt);
    const double env = rd_envelope(ctx, t, n);
    for (Pairing p : pairings) {
      const double lb = rd_lower_bound(ctx, t, M, probe_level, p);
      rep.rows.push_back({n, p, lb, env, lb / env});
    }
  }
  rep.verdict = {true, "all validation rows inside the calibrated envelope"};
  for (Pairing p : pairings) {
    double C = 0.0;
    for (const auto& r : rep.rows)
      if (r.pairing == p && r.n >= 1 && r.n <= calibrate_max) C = std::max(C, r.ratio);
    rep.constants[pairing_name(p)] = C;
    for (const auto& r : rep.rows) {
      if (r.pairing == p && r.n == 0 && r.ratio > 1.0 + 1e-12)
        rep.verdict = {false, std::string("pairing ") + pairing_name(p) + " exceeds the identity bound at n=0"};
      if (r.pairing == p && r.n > calibrate_max && r.ratio > C * (1.0 + 1e-9))
        rep.verdict = {false, std::string("pairing ") + pairing_name(p) + " exceeds C at n=" + std::to_string(r.n)};
    }
  }
  return rep;
}

struct MixingRow {
  int n;
  double min_product;
  std::string witness;
};

struct MixingReport {
  std::vector<MixingRow> rows;
  int first_n = -1;
  std::string first_witness;
  Verdict verdict;
};

// min over S_n of |<pi_t(g)v,w> <pi_{-t}(g)v2,w2>| and the first g below eps.
inline MixingReport weak_mixing_probe(const GroupContext& ctx, double t, const CylinderFunction& v,
                                      const CylinderFunction& w, const CylinderFunction& v2,
                                      const CylinderFunction& w2, int n_max, double eps) {
  require(std::abs(t) < 0.5, "weak mixing needs |t| < 1/2");
  MixingReport rep;
  for (int n = 0; n <= n_max; ++n) {
    const auto wp = rn_weights(ctx, t, n), wm = rn_weights(ctx, -t, n);
    double best = INFINITY;
    std::string arg;
    ctx.check_budget(ctx.sphere_size(n));
    std::vector<Letter> ginv(n);
    for_each_in_sphere(ctx, n, 0, ctx.sphere_size(n), [&](std::span<const Letter> g, std::uint64_t) {
      for (int j = 0; j < n; ++j) ginv[j] = ctx.inverse_letter(g[n - 1 - j]);
      const double prod = std::abs(matrix_coefficient_prepared(ctx, g, ginv, wp, v, w) *
                                   matrix_coefficient_prepared(ctx, g, ginv, wm, v2, w2));
      if (prod < best) {
        best = prod;
        arg = to_string(ctx, g);
      }
    });
    rep.rows.push_back({n, best, arg});
    if (rep.first_n < 0 && best < eps) {
      rep.first_n = n;
      rep.first_witness = arg;
    }
  }
  rep.verdict = rep.first_n >= 0 ? Verdict{true, "product below eps at n=" + std::to_string(rep.first_n)}
                                 : Verdict{false, "product never dropped below eps"};
  return rep;
}

}  // namespace bdr
