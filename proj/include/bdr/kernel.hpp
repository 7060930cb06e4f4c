#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cylinder.hpp"

namespace bdr {

constexpr int kUnbounded = std::numeric_limits<int>::max();

// Sum over common-prefix strata m in [lo, hi) of nu{(xi,eta)_o = m} q^{(1-2t)m}.
// Any t for finite hi; hi = kUnbounded needs t > 0.
inline double stratum_sum(const GroupContext& ctx, double t, int lo, int hi) {
  require(lo >= 0 && hi >= lo, "bad stratum range");
  double total = 0.0;
  const int finite_hi = hi == kUnbounded ? std::max(lo, 1) : hi;
  CompensatedSum s;
  for (int m = lo; m < finite_hi; ++m)
    s.add(annulus_profile_d(ctx, -1, m) * ctx.qpow((1.0 - 2.0 * t) * m));
  total = s.value();
  if (hi == kUnbounded) {
    if (t <= 0.0)
      throw DivergenceError("kernel mass diverges for t <= 0");
    const int start = std::max(lo, 1);
    const double one_minus = -std::expm1(-2.0 * t * ctx.critical_exponent());
    total += (2.0 * ctx.rank() - 2.0) / (2.0 * ctx.rank()) * ctx.qpow(-2.0 * t * start) / one_minus;
  }
  return total;
}

inline double sigma(const GroupContext& ctx, double t) { return stratum_sum(ctx, t, 0, kUnbounded); }

inline int strata_cut(double A) {
  require(A >= 0.0, "truncation parameter must be nonnegative");
  return static_cast<int>(std::ceil(A));
}

// Part of the mass with (xi,eta)_o < A.
inline double sigma_truncated_below(const GroupContext& ctx, double t, double A) {
  return stratum_sum(ctx, t, 0, strata_cut(A));
}

// Part of the mass with (xi,eta)_o >= A.
inline double sigma_truncated_above(const GroupContext& ctx, double t, double A) {
  return stratum_sum(ctx, t, strata_cut(A), kUnbounded);
}

// Mass function at an interior point x: finite for every t.
inline double sigma_interior(const GroupContext& ctx, double t, const ReducedWord& x) {
  CompensatedSum s;
  for (int m = 0; m <= x.length(); ++m)
    s.add(annulus_profile_d(ctx, x.length(), m) * ctx.qpow((1.0 - 2.0 * t) * m));
  return s.value();
}

// Double integral of the kernel over C_u x C_u for a level-k cylinder.
inline double self_energy(const GroupContext& ctx, double t, int k) {
  require(k >= 1, "self energy needs level >= 1");
  return cylinder_measure_d(ctx, k) * stratum_sum(ctx, t, k, kUnbounded);
}

inline int common_prefix_of_indices(const GroupContext& ctx, std::uint64_t u, std::uint64_t v, int level) {
  int m = 0;
  while (m < level && prefix_index(ctx, u, level, m + 1) == prefix_index(ctx, v, level, m + 1)) ++m;
  return m;
}

struct GramMatrix {
  int rank = 2;
  double epsilon = 1.0;
  double t = 0.0;
  int level = 1;
  Eigen::MatrixXd entries;
};

constexpr std::size_t kDefaultGramBudget = 4096;

inline GramMatrix gram_matrix(const GroupContext& ctx, double t, int k,
                              std::size_t dim_budget = kDefaultGramBudget) {
  require(t > 0.0, "Gram matrix needs t > 0");
  require(k >= 1, "Gram matrix needs level >= 1");
  const std::size_t dim = level_dimension(ctx, k);
  if (dim > dim_budget)
    throw BudgetError("Gram dimension " + std::to_string(dim) + " exceeds budget " +
                      std::to_string(dim_budget));
  const double nu = cylinder_measure_d(ctx, k);
  std::vector<double> off(k);
  for (int m = 0; m < k; ++m) off[m] = nu * nu * ctx.qpow((1.0 - 2.0 * t) * m);
  GramMatrix G{ctx.rank(), ctx.epsilon(), t, k, Eigen::MatrixXd(dim, dim)};
  const double diag = self_energy(ctx, t, k);
  for (std::size_t u = 0; u < dim; ++u) {
    G.entries(u, u) = diag;
    for (std::size_t v = u + 1; v < dim; ++v) {
      const double x = off[common_prefix_of_indices(ctx, u, v, k)];
      G.entries(u, v) = x;
      G.entries(v, u) = x;
    }
  }
  return G;
}

// W^{-1/2} G W^{-1/2}: the matrix of the form on L^2 in the orthonormal indicator basis.
inline Eigen::MatrixXd normalized_gram(const GramMatrix& G, const GroupContext& ctx) {
  return G.entries / cylinder_measure_d(ctx, G.level);
}

inline Complex gram_form(const GramMatrix& G, const GroupContext& ctx, const CylinderFunction& a,
                         const CylinderFunction& b) {
  const CylinderFunction ra = refine(ctx, a, G.level), rb = refine(ctx, b, G.level);
  ComplexSum s;
  const auto dim = static_cast<std::size_t>(G.entries.rows());
  for (std::size_t u = 0; u < dim; ++u)
    for (std::size_t v = 0; v < dim; ++v) s.add(ra.values[v] * std::conj(rb.values[u]) * G.entries(u, v));
  return s.value();
}

// Cylinder integrals A(w) = int_{C_w} a for every prefix w, by level.
inline std::vector<std::vector<Complex>> prefix_integrals(const GroupContext& ctx, const CylinderFunction& a) {
  const int k = a.level;
  std::vector<std::vector<Complex>> S(k + 1);
  const double nu = cylinder_measure_d(ctx, k);
  S[k].resize(a.values.size());
  for (std::size_t u = 0; u < a.values.size(); ++u) S[k][u] = a.values[u] * nu;
  for (int j = k - 1; j >= 0; --j) {
    S[j].assign(level_dimension(ctx, j), 0.0);
    for (std::size_t c = 0; c < S[j + 1].size(); ++c) S[j][prefix_index(ctx, c, j + 1, j)] += S[j + 1][c];
  }
  return S;
}

// Integral operator with the kernel restricted to strata [lo, hi), applied to a.
// The result is constant on the level-k cylinders of a, so it is returned at that level.
inline CylinderFunction truncated_knapp_stein_apply(const GroupContext& ctx, double t,
                                                    const CylinderFunction& a, int lo, int hi) {
  check_rank(ctx, a);
  const int k = a.level;
  const auto S = prefix_integrals(ctx, a);
  const double diag = stratum_sum(ctx, t, std::max(lo, k), std::max(hi, k));
  std::vector<double> c(k);
  for (int m = 0; m < k; ++m) c[m] = (m >= lo && m < hi) ? ctx.qpow((1.0 - 2.0 * t) * m) : 0.0;
  CylinderFunction out{ctx.rank(), k, std::vector<Complex>(a.values.size())};
  for (std::size_t u = 0; u < a.values.size(); ++u) {
    Complex v = a.values[u] * diag;
    for (int m = 0; m < k; ++m) {
      if (c[m] == 0.0) continue;
      v += c[m] * (S[m][prefix_index(ctx, u, k, m)] - S[m + 1][prefix_index(ctx, u, k, m + 1)]);
    }
    out.values[u] = v;
  }
  return out;
}

inline CylinderFunction knapp_stein_apply(const GroupContext& ctx, double t, const CylinderFunction& a) {
  require(t > 0.0, "Knapp-Stein operator diverges for t <= 0");
  return truncated_knapp_stein_apply(ctx, t, a, 0, kUnbounded);
}

inline CylinderFunction knapp_stein_power(const GroupContext& ctx, double t, const CylinderFunction& a, int power) {
  require(power >= 0, "negative operator power");
  CylinderFunction out = a;
  for (int i = 0; i < power; ++i) out = knapp_stein_apply(ctx, t, out);
  return out;
}

// B_t(a,b) = <I_t a, b>.
inline Complex kernel_form(const GroupContext& ctx, double t, const CylinderFunction& a,
                           const CylinderFunction& b) {
  if (t <= 0.0) throw DivergenceError("kernel form diverges for t <= 0");
  const int k = std::max(a.level, b.level);
  return l2_inner(ctx, knapp_stein_apply(ctx, t, refine(ctx, a, k)), b);
}

// E_t(a,b) = 1/2 sum over distinct cylinder pairs of differences times the kernel.
// Finite for every real t since equal-cylinder pairs contribute nothing.
inline Complex dirichlet_form(const GroupContext& ctx, double t, const CylinderFunction& a,
                              const CylinderFunction& b) {
  const int k = std::max(a.level, b.level);
  if (k == 0) return 0.0;
  const CylinderFunction ra = refine(ctx, a, k), rb = refine(ctx, b, k);
  const auto Sa = prefix_integrals(ctx, ra), Sb = prefix_integrals(ctx, rb);
  std::vector<Complex> P(k + 1);
  for (int j = 0; j <= k; ++j) {
    ComplexSum s;
    for (std::size_t w = 0; w < Sa[j].size(); ++w) s.add(Sa[j][w] * std::conj(Sb[j][w]));
    P[j] = s.value();
  }
  const double row = stratum_sum(ctx, t, 0, k);
  ComplexSum e;
  e.add(row * l2_inner(ctx, ra, rb));
  for (int m = 0; m < k; ++m) e.add(-ctx.qpow((1.0 - 2.0 * t) * m) * (P[m] - P[m + 1]));
  return e.value();
}

inline double besov_seminorm(const GroupContext& ctx, double t, const CylinderFunction& v) {
  return 2.0 * dirichlet_form(ctx, t, v, v).real();
}

// Level-K averages of I_t a / sigma_t.
inline CylinderFunction riesz_boundary_avg(const GroupContext& ctx, double t, const CylinderFunction& a, int K) {
  require(t > 0.0, "Riesz operator needs t > 0");
  require(K >= a.level, "averaging level below the function level");
  return refine(ctx, scale(knapp_stein_apply(ctx, t, a), 1.0 / sigma(ctx, t)), K);
}

struct RefinementResult {
  Complex value;
  int level;
  Complex previous;
};

// <P_K I_t a, P_K I_t b> with K doubled until two successive values agree within tol.
inline RefinementResult kt_inner_detail(const GroupContext& ctx, double t, const CylinderFunction& a,
                                        const CylinderFunction& b, double tol = 1e-8, int max_level = 12) {
  require(t > 0.0, "K_t pairing needs t > 0");
  int K = std::max({a.level, b.level, 1});
  auto at = [&](int level) {
    return l2_inner(ctx, knapp_stein_apply(ctx, t, refine(ctx, a, level)),
                    knapp_stein_apply(ctx, t, refine(ctx, b, level)));
  };
  Complex prev = at(K);
  while (K < max_level) {
    const int next = std::min(2 * K, max_level);
    const Complex cur = at(next);
    if (std::abs(cur - prev) < tol) return {cur, next, prev};
    prev = cur;
    K = next;
  }
  throw ConvergenceError("K_t pairing did not settle within level " + std::to_string(max_level) +
                         ", last value " + std::to_string(prev.real()));
}

inline Complex kt_inner(const GroupContext& ctx, double t, const CylinderFunction& a,
                        const CylinderFunction& b, double tol = 1e-8, int max_level = 12) {
  return kt_inner_detail(ctx, t, a, b, tol, max_level).value;
}

inline Complex ht_inner(const GroupContext& ctx, double t, const CylinderFunction& a, const CylinderFunction& b) {
  if (t <= 0.0 || t > 0.5)
    throw PreconditionError("H_t pairing is only positive for 0 < t <= 1/2 on the tree");
  return kernel_form(ctx, t, a, b);
}

struct SpectralDecomp {
  Eigen::VectorXd eigenvalues;   // descending by magnitude
  Eigen::MatrixXd eigenvectors;  // columns
};

inline SpectralDecomp spectral_decomposition(const Eigen::MatrixXd& M) {
  require(M.rows() == M.cols(), "matrix must be square");
  require((M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff()),
          "matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  const Eigen::Index n = M.rows();
  std::vector<Eigen::Index> order(n);
  for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    return std::abs(es.eigenvalues()(x)) > std::abs(es.eigenvalues()(y));
  });
  SpectralDecomp d{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    d.eigenvalues(i) = es.eigenvalues()(order[i]);
    d.eigenvectors.col(i) = es.eigenvectors().col(order[i]);
  }
  return d;
}

struct PseudoInverse {
  SpectralDecomp spectrum;
  Eigen::MatrixXd inverse;    // sum of P_k / lambda_k over retained eigenvalues
  Eigen::MatrixXd projector;  // onto the retained span
  Eigen::Index rank = 0;
  double threshold = 0.0;
};

constexpr double kKernelThreshold = 1e-12;

inline PseudoInverse spectral_pseudo_inverse(const Eigen::MatrixXd& M) {
  PseudoInverse p;
  p.spectrum = spectral_decomposition(M);
  const Eigen::Index n = M.rows();
  const double norm = n == 0 ? 0.0 : std::abs(p.spectrum.eigenvalues(0));
  p.threshold = kKernelThreshold * norm;
  p.inverse = Eigen::MatrixXd::Zero(n, n);
  p.projector = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lam = p.spectrum.eigenvalues(i);
    if (std::abs(lam) <= p.threshold) continue;
    const Eigen::VectorXd v = p.spectrum.eigenvectors.col(i);
    p.inverse += (v * v.transpose()) / lam;
    p.projector += v * v.transpose();
    ++p.rank;
  }
  return p;
}

// Inverse square root on the retained span (for positive semidefinite input).
inline Eigen::MatrixXd pseudo_inverse_sqrt(const Eigen::MatrixXd& M) {
  const SpectralDecomp d = spectral_decomposition(M);
  const Eigen::Index n = M.rows();
  const double thr = kKernelThreshold * (n == 0 ? 0.0 : std::abs(d.eigenvalues(0)));
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lam = d.eigenvalues(i);
    if (lam <= thr) continue;
    const Eigen::VectorXd v = d.eigenvectors.col(i);
    out += (v * v.transpose()) / std::sqrt(lam);
  }
  return out;
}

struct PseudoInverseChecks {
  double left_inverse_residual;   // |S T u - u| on the retained span, relative
  double shift;                   // c in S = c P + D
  double shift_remainder_min_eig; // smallest eigenvalue of D on the span (>= 0 when T >= 0)
  double squared_residual;        // |S^2 T^2 u - u| on the retained span, relative
};

inline PseudoInverseChecks check_pseudo_inverse(const Eigen::MatrixXd& T, const PseudoInverse& p) {
  const Eigen::MatrixXd& P = p.projector;
  const Eigen::MatrixXd& S = p.inverse;
  const double scale = std::max(1.0, P.norm());
  PseudoInverseChecks c{};
  c.left_inverse_residual = (S * T * P - P).norm() / scale;
  c.squared_residual = (S * S * T * T * P - P).norm() / scale;
  const double top = p.rank == 0 ? 1.0 : std::abs(p.spectrum.eigenvalues(0));
  c.shift = 1.0 / top;
  const Eigen::MatrixXd D = S - c.shift * P;
  if (p.rank == 0) return c;
  const Eigen::MatrixXd V = p.spectrum.eigenvectors.leftCols(p.rank);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(V.transpose() * D * V, Eigen::EigenvaluesOnly);
  c.shift_remainder_min_eig = es.eigenvalues().minCoeff();
  return c;
}

inline double min_normalized_eigenvalue(const GroupContext& ctx, const GramMatrix& G) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(normalized_gram(G, ctx), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

struct PositivityRow {
  double t;
  int level;
  double min_eigenvalue;
};

inline std::vector<PositivityRow> positivity_scan(const GroupContext& ctx, const std::vector<double>& t_grid,
                                                  const std::vector<int>& levels) {
  std::vector<PositivityRow> rows;
  for (double t : t_grid)
    for (int k : levels) rows.push_back({t, k, min_normalized_eigenvalue(ctx, gram_matrix(ctx, t, k))});
  return rows;
}

}  // namespace bdr
