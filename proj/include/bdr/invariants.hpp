#pragma once

#include <string>
#include <vector>

#include "experiments.hpp"

namespace bdr {

struct Check {
  std::string name;
  double value;      // worst measured deviation (or the measured quantity)
  double threshold;
  bool pass;
};

inline Check upper_check(std::string name, double value, double threshold) {
  return {std::move(name), value, threshold, value <= threshold};
}

// Deterministic complex probe vector of the given level; `salt` varies the pattern.
inline CylinderFunction probe_vector(const GroupContext& ctx, int level, int salt = 0) {
  const std::size_t dim = level_dimension(ctx, level);
  std::vector<Complex> values(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const std::size_t j = i + 3 * static_cast<std::size_t>(salt);
    values[i] = Complex(1.0 + 0.3 * static_cast<double>((j * 7) % 5), 0.2 * static_cast<double>((j * 3) % 4) - 0.3);
  }
  return make_function(ctx, level, std::move(values));
}

inline double max_abs_diff(const GroupContext& ctx, const CylinderFunction& a, const CylinderFunction& b) {
  const int k = std::max(a.level, b.level);
  const CylinderFunction ra = refine(ctx, a, k), rb = refine(ctx, b, k);
  double m = 0.0;
  for (std::size_t i = 0; i < ra.values.size(); ++i) m = std::max(m, std::abs(ra.values[i] - rb.values[i]));
  return m;
}

// pi_t(gh) = pi_t(g) pi_t(h), sup-norm relative.
inline double cocycle_defect(const GroupContext& ctx, const std::vector<double>& ts, int radius, int max_level) {
  const auto ball = enumerate_ball(ctx, radius);
  double worst = 0.0;
  for (double t : ts)
    for (int L = 0; L <= max_level; ++L) {
      const CylinderFunction v = probe_vector(ctx, L);
      for (const auto& h : ball) {
        const CylinderFunction hv = apply_pi(ctx, t, h, v);
        for (const auto& g : ball) {
          const CylinderFunction lhs = apply_pi(ctx, t, multiply(ctx, g, h), v);
          const CylinderFunction rhs = apply_pi(ctx, t, g, hv);
          worst = std::max(worst, max_abs_diff(ctx, lhs, rhs) / sup_norm(rhs));
        }
      }
    }
  return worst;
}

// <pi_t(g)a, b> = <a, pi_{-t}(g^{-1})b>, relative to |pi_t(g)a| |b|.
inline double duality_defect(const GroupContext& ctx, const std::vector<double>& ts, int radius, int max_level) {
  const auto ball = enumerate_ball(ctx, radius);
  double worst = 0.0;
  for (double t : ts)
    for (int La = 0; La <= max_level; ++La)
      for (int Lb = 0; Lb <= max_level; ++Lb) {
        const CylinderFunction a = probe_vector(ctx, La, 1), b = probe_vector(ctx, Lb, 2);
        for (const auto& g : ball) {
          const CylinderFunction ga = apply_pi(ctx, t, g, a);
          const Complex lhs = l2_inner(ctx, ga, b);
          const Complex rhs = l2_inner(ctx, a, apply_pi(ctx, -t, inverse(ctx, g), b));
          worst = std::max(worst, std::abs(lhs - rhs) / (l2_norm(ctx, ga) * l2_norm(ctx, b)));
        }
      }
  return worst;
}

// B_t(pi_t(g)a, b) = B_t(a, pi_t(g^{-1})b), relative to sigma_t |pi_t(g)a| |b| (the L^2 bound of I_t).
inline double intertwining_defect(const GroupContext& ctx, const std::vector<double>& ts, int radius, int max_level) {
  const auto ball = enumerate_ball(ctx, radius);
  double worst = 0.0;
  for (double t : ts) {
    const double s = sigma(ctx, t);
    for (int La = 0; La <= max_level; ++La)
      for (int Lb = 0; Lb <= max_level; ++Lb) {
        const CylinderFunction a = probe_vector(ctx, La, 3), b = probe_vector(ctx, Lb, 4);
        for (const auto& g : ball) {
          const CylinderFunction ga = apply_pi(ctx, t, g, a);
          const Complex lhs = kernel_form(ctx, t, ga, b);
          const Complex rhs = kernel_form(ctx, t, a, apply_pi(ctx, t, inverse(ctx, g), b));
          worst = std::max(worst, std::abs(lhs - rhs) / (s * l2_norm(ctx, ga) * l2_norm(ctx, b)));
        }
      }
  }
  return worst;
}

// <I_t a, b> = sigma_t <a, b> - E_t(a, b).
inline double form_split_defect(const GroupContext& ctx, const std::vector<double>& ts, int max_level) {
  double worst = 0.0;
  for (double t : ts) {
    const double s = sigma(ctx, t);
    for (int La = 0; La <= max_level; ++La)
      for (int Lb = 0; Lb <= max_level; ++Lb) {
        const CylinderFunction a = probe_vector(ctx, La, 5), b = probe_vector(ctx, Lb, 6);
        const Complex lhs = kernel_form(ctx, t, a, b);
        const Complex rhs = s * l2_inner(ctx, a, b) - dirichlet_form(ctx, t, a, b);
        worst = std::max(worst, std::abs(lhs - rhs) / (s * l2_norm(ctx, a) * l2_norm(ctx, b)));
      }
  }
  return worst;
}

// Sum of all Gram entries equals sigma_t.
inline double gram_sum_defect(const GroupContext& ctx, const std::vector<double>& ts, int max_level) {
  double worst = 0.0;
  for (double t : ts)
    for (int k = 1; k <= max_level; ++k) {
      const GramMatrix G = gram_matrix(ctx, t, k);
      CompensatedSum s;
      for (Eigen::Index i = 0; i < G.entries.size(); ++i) s.add(G.entries.data()[i]);
      worst = std::max(worst, std::abs(s.value() - sigma(ctx, t)) / sigma(ctx, t));
    }
  return worst;
}

// |pi_0(g)v|_2 = |v|_2.
inline double l2_isometry_defect(const GroupContext& ctx, int radius, int max_level) {
  double worst = 0.0;
  for (int L = 0; L <= max_level; ++L) {
    const CylinderFunction v = probe_vector(ctx, L, 7);
    const double n0 = l2_norm(ctx, v);
    for (const auto& g : enumerate_ball(ctx, radius))
      worst = std::max(worst, std::abs(l2_norm(ctx, apply_pi(ctx, 0.0, g, v)) - n0) / n0);
  }
  return worst;
}

// Besov seminorm at t = -1/2 is invariant under pi_{-1/2}.
inline double besov_isometry_defect(const GroupContext& ctx, int radius, int max_level) {
  double worst = 0.0;
  for (int L = 1; L <= max_level; ++L) {
    const CylinderFunction v = probe_vector(ctx, L, 8);
    const double b0 = besov_seminorm(ctx, -0.5, v);
    for (const auto& g : enumerate_ball(ctx, radius))
      worst = std::max(worst, std::abs(besov_seminorm(ctx, -0.5, apply_pi(ctx, -0.5, g, v)) - b0) / b0);
  }
  return worst;
}

// Grouped cell sum against the explicit translate, relative to |pi_t(g)v| |w|.
inline double grouped_coefficient_defect(const GroupContext& ctx, const std::vector<double>& ts, int radius,
                                          int max_level) {
  double worst = 0.0;
  for (double t : ts)
    for (int kv = 0; kv <= max_level; ++kv)
      for (int kw = 0; kw <= max_level; ++kw) {
        const CylinderFunction v = probe_vector(ctx, kv, 9), w = probe_vector(ctx, kw, 10);
        for (const auto& g : enumerate_ball(ctx, radius)) {
          const CylinderFunction gv = apply_pi(ctx, t, g, v);
          const Complex naive = l2_inner(ctx, gv, w);
          worst = std::max(worst, std::abs(matrix_coefficient(ctx, t, g, v, w) - naive) /
                                      (l2_norm(ctx, gv) * l2_norm(ctx, w)));
        }
      }
  return worst;
}

// Direct partial sums of p_m q^{(1-2t)m} until the terms vanish in double precision.
inline double sigma_series(const GroupContext& ctx, double t) {
  require(t > 0.0, "series diverges for t <= 0");
  CompensatedSum s;
  for (int m = 0;; ++m) {
    const double term = annulus_profile_d(ctx, -1, m) * ctx.qpow((1.0 - 2.0 * t) * m);
    s.add(term);
    if (m > 0 && term < 1e-20 * s.value()) return s.value();
    if (m > 1'000'000) throw ConvergenceError("sigma series did not converge");
  }
}

struct PositivitySummary {
  double worst_nonnegative;  // smallest eigenvalue over t <= 1/2
  double best_negative;      // smallest eigenvalue over t > 1/2
};

inline PositivitySummary positivity_summary(const GroupContext& ctx, const std::vector<double>& ts,
                                            const std::vector<int>& levels) {
  PositivitySummary s{INFINITY, INFINITY};
  for (const auto& row : positivity_scan(ctx, ts, levels)) {
    double& slot = row.t <= 0.5 ? s.worst_nonnegative : s.best_negative;
    slot = std::min(slot, row.min_eigenvalue);
  }
  return s;
}

// Identities that hold exactly; used by `selftest` and the acceptance run.
inline std::vector<Check> identity_suite(const GroupContext& ctx) {
  const std::string tag = "r=" + std::to_string(ctx.rank()) + " ";
  const double tol = 1e-12;
  return {
      upper_check(tag + "cocycle", cocycle_defect(ctx, {0.0, 0.25, -0.25, 0.5, -0.5}, 2, 2), tol),
      upper_check(tag + "duality", duality_defect(ctx, {0.0, 0.25, -0.25, 0.5, -0.5}, 2, 2), tol),
      upper_check(tag + "intertwining", intertwining_defect(ctx, {0.25, 0.5}, 2, 2), tol),
      upper_check(tag + "form split", form_split_defect(ctx, {0.1, 0.25, 0.5}, 3), tol),
      upper_check(tag + "gram sum", gram_sum_defect(ctx, {0.1, 0.25, 0.4, 0.5}, 3), tol),
      upper_check(tag + "L2 isometry", l2_isometry_defect(ctx, 2, 2), tol),
      upper_check(tag + "Besov isometry", besov_isometry_defect(ctx, 2, 2), tol),
  };
}

}  // namespace bdr
