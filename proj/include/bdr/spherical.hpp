#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <ostream>
#include <vector>

#include "kernel.hpp"

namespace bdr {

// phi_t(n) = <pi_t(g)1, 1> for |g| = n; a finite sum over the annuli around g.
inline double phi(const GroupContext& ctx, double t, int n) {
  require(n >= 0, "negative length");
  CompensatedSum s;
  for (int m = 0; m <= n; ++m)
    s.add(annulus_profile_d(ctx, n, m) * ctx.qpow((0.5 + t) * (2 * m - n)));
  return s.value();
}

inline double omega(const GroupContext& ctx, double t, double x) {
  if (t == 0.0) return x;
  const double Q = ctx.critical_exponent();
  return 2.0 * std::sinh(t * Q * x) / std::expm1(2.0 * t * Q);
}

// e^{-Qn/2}(1 + omega_{|t|}(n)).
inline double spherical_envelope(const GroupContext& ctx, double t, double n) {
  return std::exp(-0.5 * ctx.critical_exponent() * n) * (1.0 + omega(ctx, std::abs(t), n));
}

struct SphericalRow {
  int n;
  double phi;
  double envelope_low;
  double envelope_high;
  double ratio;
};

struct SphericalTable {
  double t = 0.0;
  double c_min = 0.0;
  double c_max = 0.0;
  std::vector<SphericalRow> rows;
};

// Ratios phi_t(n) / envelope for n = 0..n_max. The band constant C = max(c_max, 1/c_min)
// gives the printed envelope_low = envelope / C and envelope_high = C * envelope.
inline SphericalTable envelope_table(const GroupContext& ctx, double t, int n_max) {
  require(n_max >= 1, "n_max must be positive");
  SphericalTable tab;
  tab.t = t;
  tab.c_min = INFINITY;
  std::vector<double> env(n_max + 1), ph(n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    env[n] = spherical_envelope(ctx, t, n);
    ph[n] = phi(ctx, t, n);
    const double r = ph[n] / env[n];
    tab.c_min = std::min(tab.c_min, r);
    tab.c_max = std::max(tab.c_max, r);
  }
  const double C = std::max(tab.c_max, 1.0 / tab.c_min);
  for (int n = 0; n <= n_max; ++n) tab.rows.push_back({n, ph[n], env[n] / C, C * env[n], ph[n] / env[n]});
  return tab;
}

inline std::pair<double, double> envelope_band(const GroupContext& ctx, double t, int n_max) {
  const SphericalTable tab = envelope_table(ctx, t, n_max);
  return {tab.c_min, tab.c_max};
}


// <pi_t(g)1, I_t 1> / sigma_t, computed through the operator rather than the closed form.
inline double spherical_varphi(const GroupContext& ctx, double t, const ReducedWord& g) {
  require(t > 0.0, "needs t > 0");
  const CylinderFunction one = constant_function(ctx);
  const Complex c = matrix_coefficient(ctx, t, g, one, knapp_stein_apply(ctx, t, one));
  return c.real() / sigma(ctx, t);
}

// Smallest eigenvalue of [phi_t(|h^{-1} g|)] over the closed ball of the given radius.
inline double pd_gram_phi(const GroupContext& ctx, double t, int radius) {
  require(radius >= 0, "negative radius");
  const auto ball = enumerate_ball(ctx, radius);
  std::vector<double> table(2 * radius + 1);
  for (int n = 0; n <= 2 * radius; ++n) table[n] = phi(ctx, t, n);
  const auto N = static_cast<Eigen::Index>(ball.size());
  Eigen::MatrixXd M(N, N);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < N; ++j) {
      const int d = ball[i].length() + ball[j].length() - 2 * common_prefix(ball[i].span(), ball[j].span());
      M(i, j) = table[d];
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// P_t(f)(x) = <pi_t(x)1, conj f> / phi_t(|x|).
inline Complex poisson_transform(const GroupContext& ctx, double t, const CylinderFunction& f, const ReducedWord& x) {
  require(t > 0.0, "Poisson transform needs t > 0");
  return matrix_coefficient(ctx, t, x, constant_function(ctx), conj(f)) / phi(ctx, t, x.length());
}

// Explicit form of the decay rate: e^{-tQx}/sinh(tQ) + e^{-x}.
inline double decay_rate(const GroupContext& ctx, double t, double x) {
  const double Q = ctx.critical_exponent();
  return std::exp(-t * Q * x) / std::sinh(t * Q) + std::exp(-x);
}

// Normalized coefficient of |w - w(g_hat)| against pi_t(g)1.
inline double decay_lhs(const GroupContext& ctx, double t, const ReducedWord& g, const CylinderFunction& w) {
  require(t > 0.0 && g.length() >= 1, "needs t > 0 and |g| >= 1");
  const ReducedWord end = ray_prefix(hat_extension(g), w.level);
  const Complex at_end = w.values[word_index(ctx, end.span())];
  CylinderFunction dev = w;
  for (auto& x : dev.values) x = std::abs(x - at_end);
  return matrix_coefficient(ctx, t, g, constant_function(ctx), dev).real() / phi(ctx, t, g.length());
}

// Shape of the decay bound without its constant.
inline double decay_envelope(const GroupContext& ctx, double t, int n, double A, double lip) {
  const double Q = ctx.critical_exponent();
  return lip * (decay_rate(ctx, t, n) * std::exp(2.0 * t * Q * A) + std::exp(-A));
}

struct DecayCheck {
  double lhs;
  double bound;
};

inline DecayCheck coefficient_decay_check(const GroupContext& ctx, double t, const ReducedWord& g,
                                          const CylinderFunction& w, double A, double C) {
  return {decay_lhs(ctx, t, g, w), C * decay_envelope(ctx, t, g.length(), A, lipschitz_norm(ctx, w))};
}

// Normalized mass of pi_t(g)1 on {xi : (xi, g)_o < A}.
inline double tail_lhs(const GroupContext& ctx, double t, int n, double A) {
  CompensatedSum s;
  for (int m = 0; m <= n && m < A; ++m)
    s.add(annulus_profile_d(ctx, n, m) * ctx.qpow((0.5 + t) * (2 * m - n)));
  return s.value() / phi(ctx, t, n);
}

inline double tail_envelope(const GroupContext& ctx, double t, int n, double A) {
  const double Q = ctx.critical_exponent();
  return std::exp(-t * Q * n) * std::exp(2.0 * t * Q * A) / std::sinh(t * Q);
}

// Smallest C with lhs <= C * envelope over a calibration set.
inline double calibrate_constant(const std::vector<double>& lhs, const std::vector<double>& envelope) {
  require(lhs.size() == envelope.size(), "calibration sizes differ");
  double c = 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i)
    if (envelope[i] > 0.0) c = std::max(c, lhs[i] / envelope[i]);
  return c;
}

}  // namespace bdr
