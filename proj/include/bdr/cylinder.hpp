#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "boundary_measure.hpp"
#include "free_group.hpp"
#include "summation.hpp"

namespace bdr {

using Complex = std::complex<double>;

// Locally constant boundary function: one value per level-k cylinder, lexicographic order.
struct CylinderFunction {
  int rank = 2;
  int level = 0;
  std::vector<Complex> values{Complex(1.0)};

  std::size_t dimension() const { return values.size(); }
};

inline std::size_t level_dimension(const GroupContext& ctx, int level) {
  return static_cast<std::size_t>(ctx.sphere_size(level));
}

inline CylinderFunction make_function(const GroupContext& ctx, int level, std::vector<Complex> values) {
  require(level >= 0, "negative level");
  require(values.size() == level_dimension(ctx, level), "value count does not match the level");
  return CylinderFunction{ctx.rank(), level, std::move(values)};
}

inline CylinderFunction constant_function(const GroupContext& ctx, Complex c = 1.0) {
  return CylinderFunction{ctx.rank(), 0, {c}};
}

inline CylinderFunction indicator(const GroupContext& ctx, const ReducedWord& u) {
  std::vector<Complex> v(level_dimension(ctx, u.length()), 0.0);
  v[word_index(ctx, u.span())] = 1.0;
  return CylinderFunction{ctx.rank(), u.length(), std::move(v)};
}

inline void check_rank(const GroupContext& ctx, const CylinderFunction& f) {
  require(f.rank == ctx.rank(), "function built for a different rank");
  require(f.values.size() == level_dimension(ctx, f.level), "corrupt cylinder function");
}

inline CylinderFunction refine(const GroupContext& ctx, const CylinderFunction& v, int k) {
  check_rank(ctx, v);
  require(k >= v.level, "refinement below the current level");
  if (k == v.level) return v;
  const std::size_t dim = level_dimension(ctx, k);
  ctx.check_budget(dim);
  CylinderFunction out{ctx.rank(), k, std::vector<Complex>(dim)};
  for (std::size_t u = 0; u < dim; ++u) out.values[u] = v.values[prefix_index(ctx, u, k, v.level)];
  return out;
}

inline CylinderFunction conj(const CylinderFunction& v) {
  CylinderFunction out = v;
  for (auto& x : out.values) x = std::conj(x);
  return out;
}

inline CylinderFunction scale(const CylinderFunction& v, Complex c) {
  CylinderFunction out = v;
  for (auto& x : out.values) x *= c;
  return out;
}

inline CylinderFunction abs_values(const CylinderFunction& v) {
  CylinderFunction out = v;
  for (auto& x : out.values) x = std::abs(x);
  return out;
}

// Pointwise combination at the common level.
inline CylinderFunction combine(const GroupContext& ctx, const CylinderFunction& a,
                                const CylinderFunction& b,
                                const std::function<Complex(Complex, Complex)>& op) {
  const int k = std::max(a.level, b.level);
  const CylinderFunction ra = refine(ctx, a, k), rb = refine(ctx, b, k);
  CylinderFunction out{ctx.rank(), k, std::vector<Complex>(ra.values.size())};
  for (std::size_t i = 0; i < ra.values.size(); ++i) out.values[i] = op(ra.values[i], rb.values[i]);
  return out;
}

inline double sup_norm(const CylinderFunction& v) {
  double m = 0.0;
  for (const auto& x : v.values) m = std::max(m, std::abs(x));
  return m;
}

// Sum over level-k cylinders of nu(C_u) v(u) conj(w(u)).
inline Complex l2_inner(const GroupContext& ctx, const CylinderFunction& v, const CylinderFunction& w) {
  const int k = std::max(v.level, w.level);
  const CylinderFunction rv = refine(ctx, v, k), rw = refine(ctx, w, k);
  ComplexSum s;
  for (std::size_t i = 0; i < rv.values.size(); ++i) s.add(rv.values[i] * std::conj(rw.values[i]));
  return s.value() * cylinder_measure_d(ctx, k);
}

inline double l2_norm(const GroupContext& ctx, const CylinderFunction& v) {
  return std::sqrt(std::max(0.0, l2_inner(ctx, v, v).real()));
}

inline Complex integral(const GroupContext& ctx, const CylinderFunction& v) {
  return l2_inner(ctx, v, constant_function(ctx));
}

// pi_t(g)v at level level(v) + |g|, by direct evaluation on every output cylinder.
inline CylinderFunction apply_pi(const GroupContext& ctx, double t, const ReducedWord& g,
                                 const CylinderFunction& v) {
  check_rank(ctx, v);
  const int n = g.length();
  const int L = v.level + n;
  const std::size_t dim = level_dimension(ctx, L);
  ctx.check_budget(dim);
  const ReducedWord ginv = inverse(ctx, g);
  std::vector<double> weight(2 * n + 1);
  for (int b = -n; b <= n; ++b) weight[b + n] = ctx.qpow((0.5 + t) * b);
  CylinderFunction out{ctx.rank(), L, std::vector<Complex>(dim)};
  std::vector<Letter> u;
  for (std::size_t i = 0; i < dim; ++i) {
    word_at_into(ctx, L, i, u);
    const int m = common_prefix(u, g.span());
    // g^{-1}u cancels exactly the common prefix.
    std::span<const Letter> head(ginv.letters.data(), n - m);
    std::span<const Letter> tail(u.data() + m, L - m);
    const std::uint64_t src = concat_index(ctx, head, tail, v.level);
    out.values[i] = weight[2 * m] * v.values[src];
  }
  return out;
}

// Enumerates the reduced words y of length d with y[0] = first, calling fn(span).
template <class Fn>
void for_each_extension(const GroupContext& ctx, Letter first, int d, std::vector<Letter>& buf, Fn&& fn) {
  buf.resize(d);
  buf[0] = first;
  for (int i = 1; i < d; ++i) buf[i] = first_allowed(ctx, buf[i - 1]);
  do {
    fn(std::span<const Letter>(buf));
  } while (next_word(ctx, buf, 1));
}

// Splits the boundary into cells on which pi_t(g)1, the source cylinder of v (level kv)
// and the target cylinder of w (level kw) are all constant. Cells are grouped by the
// depth m = (xi, g)_o; for m < |g| the cell is g_1..g_m y, for m = |g| it is g y.
// visit(beta, mass, v_index, w_index) receives the Busemann exponent 2m - |g|.
template <class Visit>
std::uint64_t for_each_coefficient_cell(const GroupContext& ctx, std::span<const Letter> g,
                                        std::span<const Letter> ginv, int kv, int kw, Visit&& visit) {
  const int n = static_cast<int>(g.size());
  std::uint64_t cells = 0;
  std::vector<Letter> y;
  for (int m = 0; m < n; ++m) {
    const int d = std::max({1, kv - (n - m), kw - m});
    const double mass = cylinder_measure_d(ctx, m + d);
    std::span<const Letter> vhead = ginv.subspan(0, n - m);
    std::span<const Letter> whead = g.subspan(0, m);
    for (int x = 0; x < ctx.alphabet(); ++x) {
      if (x == g[m]) continue;
      if (m >= 1 && x == ctx.inverse_letter(g[m - 1])) continue;
      for_each_extension(ctx, static_cast<Letter>(x), d, y, [&](std::span<const Letter> tail) {
        visit(2 * m - n, mass, concat_index(ctx, vhead, tail, kv), concat_index(ctx, whead, tail, kw));
        ++cells;
      });
    }
  }
  const int d = std::max({kv, kw - n, 0});
  if (d == 0) {
    visit(n, cylinder_measure_d(ctx, n), std::uint64_t{0}, concat_index(ctx, g, {}, kw));
    return cells + 1;
  }
  const double mass = cylinder_measure_d(ctx, n + d);
  for (int x = 0; x < ctx.alphabet(); ++x) {
    if (n >= 1 && x == ctx.inverse_letter(g[n - 1])) continue;
    for_each_extension(ctx, static_cast<Letter>(x), d, y, [&](std::span<const Letter> tail) {
      visit(n, mass, concat_index(ctx, {}, tail, kv), concat_index(ctx, g, tail, kw));
      ++cells;
    });
  }
  return cells;
}

// Table of q^{(1/2+t) b} for b in [-n, n].
inline std::vector<double> rn_weights(const GroupContext& ctx, double t, int n) {
  std::vector<double> w(2 * n + 1);
  for (int b = -n; b <= n; ++b) w[b + n] = ctx.qpow((0.5 + t) * b);
  return w;
}

// <pi_t(g)v, w> by the grouped cell sum; inverse word and weights precomputed by the caller.
inline Complex matrix_coefficient_prepared(const GroupContext& ctx, std::span<const Letter> g,
                                           std::span<const Letter> ginv,
                                           const std::vector<double>& weights,
                                           const CylinderFunction& v, const CylinderFunction& w,
                                           std::uint64_t* cells = nullptr) {
  const int n = static_cast<int>(g.size());
  ComplexSum s;
  const std::uint64_t c = for_each_coefficient_cell(
      ctx, g, ginv, v.level, w.level,
      [&](int beta, double mass, std::uint64_t vi, std::uint64_t wi) {
        s.add(weights[beta + n] * mass * v.values[vi] * std::conj(w.values[wi]));
      });
  if (cells) *cells += c;
  return s.value();
}

inline Complex matrix_coefficient(const GroupContext& ctx, double t, const ReducedWord& g,
                                  const CylinderFunction& v, const CylinderFunction& w) {
  check_rank(ctx, v);
  check_rank(ctx, w);
  const ReducedWord ginv = inverse(ctx, g);
  return matrix_coefficient_prepared(ctx, g.span(), ginv.span(), rn_weights(ctx, t, g.length()), v, w);
}

// Same value through the explicit translate; the reference for the grouped sum.
inline Complex matrix_coefficient_naive(const GroupContext& ctx, double t, const ReducedWord& g,
                                        const CylinderFunction& v, const CylinderFunction& w) {
  return l2_inner(ctx, apply_pi(ctx, t, g, v), w);
}

inline double lipschitz_norm(const GroupContext& ctx, const CylinderFunction& w) {
  check_rank(ctx, w);
  require(w.level >= 1, "Lipschitz norm needs level >= 1");
  double semi = 0.0;
  const std::size_t dim = w.values.size();
  for (std::size_t u = 0; u < dim; ++u)
    for (std::size_t v = u + 1; v < dim; ++v) {
      const double diff = std::abs(w.values[u] - w.values[v]);
      if (diff == 0.0) continue;
      int m = 0;
      while (m < w.level && prefix_index(ctx, u, w.level, m + 1) == prefix_index(ctx, v, w.level, m + 1)) ++m;
      semi = std::max(semi, diff * std::exp(ctx.epsilon() * m));
    }
  return sup_norm(w) + semi;
}

// Function on the closed ball compactification: interior values on words shorter than
// `level`, boundary values (by level-k prefix) beyond.
struct TreeTestFunction {
  int level = 0;
  CylinderFunction boundary;
  std::vector<Complex> interior;  // by length, then lexicographic rank
};

inline TreeTestFunction make_tree_function(const GroupContext& ctx, CylinderFunction boundary,
                                           std::vector<Complex> interior) {
  check_rank(ctx, boundary);
  const int k = boundary.level;
  require(interior.size() == (k == 0 ? 0 : ctx.ball_size(k - 1)), "interior value count mismatch");
  return TreeTestFunction{k, std::move(boundary), std::move(interior)};
}

// Extension of a boundary function by its own prefix values inside the ball.
inline TreeTestFunction extend_inward(const GroupContext& ctx, const CylinderFunction& boundary,
                                      Complex interior_value) {
  const int k = boundary.level;
  std::vector<Complex> interior(k == 0 ? 0 : ctx.ball_size(k - 1), interior_value);
  return make_tree_function(ctx, boundary, std::move(interior));
}

inline Complex eval_tree_function(const GroupContext& ctx, const TreeTestFunction& f,
                                  std::span<const Letter> x) {
  const int n = static_cast<int>(x.size());
  if (n >= f.level) return f.boundary.values[word_index(ctx, x.first(f.level))];
  const std::uint64_t offset = n == 0 ? 0 : ctx.ball_size(n - 1);
  return f.interior[offset + word_index(ctx, x)];
}

inline Complex eval_tree_function(const GroupContext& ctx, const TreeTestFunction& f,
                                  const ReducedWord& x) {
  return eval_tree_function(ctx, f, x.span());
}

inline const CylinderFunction& restrict_boundary(const TreeTestFunction& f) { return f.boundary; }

}  // namespace bdr
