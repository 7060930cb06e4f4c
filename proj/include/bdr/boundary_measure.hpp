#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <utility>

#include "free_group.hpp"

namespace bdr {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline BigInt big_pow(int base, int exp) {
  BigInt out = 1;
  for (int i = 0; i < exp; ++i) out *= base;
  return out;
}

inline Rational exact_sphere_size(const GroupContext& ctx, int n) {
  return n == 0 ? Rational(1) : Rational(BigInt(2 * ctx.rank()) * big_pow(ctx.q(), n - 1));
}

// Mass of a level-k cylinder.
inline Rational cylinder_measure(const GroupContext& ctx, int level) {
  require(level >= 0, "negative level");
  return Rational(1) / exact_sphere_size(ctx, level);
}

inline double cylinder_measure_d(const GroupContext& ctx, int level) {
  if (level == 0) return 1.0;
  return 1.0 / (2.0 * ctx.rank()) * std::exp(-(level - 1) * ctx.critical_exponent());
}

// Mass of {xi : (xi, y)_o = m}. y_length < 0 means y is a boundary point.
inline Rational annulus_profile(const GroupContext& ctx, int y_length, int m) {
  require(m >= 0, "negative annulus index");
  const bool boundary = y_length < 0;
  require(boundary || m <= y_length, "annulus index beyond the word length");
  if (!boundary && m == y_length) return cylinder_measure(ctx, m);
  if (m == 0) return Rational(ctx.q(), 2 * ctx.rank());
  return Rational(BigInt(2 * ctx.rank() - 2), BigInt(2 * ctx.rank()) * big_pow(ctx.q(), m));
}

inline Rational annulus_profile(const GroupContext& ctx, const Ray&, int m) {
  return annulus_profile(ctx, -1, m);
}

inline Rational annulus_profile(const GroupContext& ctx, const ReducedWord& y, int m) {
  return annulus_profile(ctx, y.length(), m);
}

inline double annulus_profile_d(const GroupContext& ctx, int y_length, int m) {
  if (y_length >= 0 && m == y_length) return cylinder_measure_d(ctx, m);
  if (m == 0) return double(ctx.q()) / (2.0 * ctx.rank());
  return (2.0 * ctx.rank() - 2) / (2.0 * ctx.rank()) * std::exp(-m * ctx.critical_exponent());
}

// Extreme values of nu(A_k) e^{Qk} for k = 0..k_max (y_length < 0: boundary point).
inline std::pair<double, double> ahlfors_partition_check(const GroupContext& ctx, int y_length,
                                                         int k_max) {
  require(k_max >= 1, "k_max must be positive");
  const int top = y_length < 0 ? k_max : std::min(k_max, y_length);
  double lo = INFINITY, hi = 0.0;
  for (int k = 0; k <= top; ++k) {
    const Rational scaled = annulus_profile(ctx, y_length, k) * Rational(big_pow(ctx.q(), k));
    const double v = static_cast<double>(scaled);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

inline int rn_exponent(const ReducedWord& g, const ReducedWord& u) {
  return busemann_on_cylinder(u, g);
}

// d(g_* nu)/d nu on the cylinder of u, exactly.
inline Rational rn_derivative(const GroupContext& ctx, const ReducedWord& g, const ReducedWord& u) {
  const int b = rn_exponent(g, u);
  return b >= 0 ? Rational(big_pow(ctx.q(), b)) : Rational(BigInt(1), big_pow(ctx.q(), -b));
}

inline double visual_distance(const GroupContext& ctx, const ReducedWord& u, const ReducedWord& v) {
  require(u.length() == v.length(), "cylinders of different levels");
  require(u != v, "visual distance is not constant on a single cylinder");
  return std::exp(-ctx.epsilon() * common_prefix(u.span(), v.span()));
}

// Ordered pairs (g,h) in S_n x S_n with (g,h)_o = m.
inline BigInt pair_count_sphere(const GroupContext& ctx, int n, int m) {
  require(n >= 0 && m >= 0 && m <= n, "pair count index out of range");
  const BigInt s = n == 0 ? BigInt(1) : BigInt(2 * ctx.rank()) * big_pow(ctx.q(), n - 1);
  if (m == n) return s;
  if (m == 0) return s * big_pow(ctx.q(), n);
  return s * (2 * ctx.rank() - 2) * big_pow(ctx.q(), n - m - 1);
}

}  // namespace bdr
