#include <gtest/gtest.h>

#include <bdr/kernel.hpp>
#include <cmath>
#include <random>

using namespace bdr;

namespace {

CylinderFunction random_function(const GroupContext& ctx, int level, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<Complex> v(level_dimension(ctx, level));
  for (auto& x : v) x = Complex(U(rng), U(rng));
  return make_function(ctx, level, v);
}

// Half the double sum of differences against the kernel over distinct level-k cylinder pairs.
Complex dirichlet_by_pairs(const GroupContext& ctx, double t, const CylinderFunction& a, const CylinderFunction& b) {
  const int k = std::max(a.level, b.level);
  const auto ra = refine(ctx, a, k), rb = refine(ctx, b, k);
  const double nu = cylinder_measure_d(ctx, k);
  Complex s = 0.0;
  for (std::size_t u = 0; u < ra.values.size(); ++u)
    for (std::size_t v = 0; v < ra.values.size(); ++v) {
      if (u == v) continue;
      const int m = common_prefix_of_indices(ctx, u, v, k);
      s += 0.5 * nu * nu * std::pow(ctx.q(), (1.0 - 2.0 * t) * m) * (ra.values[u] - ra.values[v]) *
           std::conj(rb.values[u] - rb.values[v]);
    }
  return s;
}

}  // namespace

TEST(Kernel, SigmaQuarterValue) {
  GroupContext ctx(2);
  EXPECT_NEAR(sigma(ctx, 0.25), 1.4330127018922194, 1e-14);
  // self energy of a level-1 cylinder
  EXPECT_NEAR(self_energy(ctx, 0.25, 1), 0.17075317547305485, 1e-15);
}

TEST(Kernel, SigmaAgainstPartialSums) {
  for (int r : {2, 3})
    for (double t : {0.05, 0.1, 0.25, 0.5, 0.9}) {
      GroupContext ctx(r);
      const double q = ctx.q();
      double s = q / (2.0 * r);
      for (int m = 1; m < 20000; ++m) s += (2.0 * r - 2) / (2.0 * r) * std::pow(q, -2.0 * t * m);
      EXPECT_NEAR(sigma(ctx, t), s, 1e-10 * s) << r << " " << t;
    }
}

TEST(Kernel, SigmaDivergesAtNonpositiveT) {
  GroupContext ctx(2);
  EXPECT_THROW(sigma(ctx, 0.0), DivergenceError);
  EXPECT_THROW(sigma(ctx, -0.25), DivergenceError);
  EXPECT_NO_THROW(stratum_sum(ctx, -0.25, 0, 10));
}

TEST(Kernel, TruncationSplitsMass) {
  GroupContext ctx(3);
  for (double A : {0.0, 0.5, 1.0, 2.5, 7.0}) {
    const double t = 0.3;
    EXPECT_NEAR(sigma_truncated_below(ctx, t, A) + sigma_truncated_above(ctx, t, A), sigma(ctx, t), 1e-14);
  }
  EXPECT_EQ(sigma_truncated_below(ctx, 0.3, 0.0), 0.0);
}

// The tail beyond A is comparable to e^{-2tQA}.
TEST(Kernel, TailDecay) {
  GroupContext ctx(2);
  for (double t : {0.1, 0.25, 0.5})
    for (int A = 1; A <= 20; ++A) {
      const double scaled = sigma_truncated_above(ctx, t, A) * (1.0 - ctx.qpow(-2.0 * t)) / ctx.qpow(-2.0 * t * A);
      EXPECT_NEAR(scaled, 0.5, 1e-12);
    }
}

// Monte-Carlo pair oracle for the level-1 self energy: random rays in C_a, kernel q^{(1-2t)m}.
TEST(Kernel, SelfEnergyMonteCarlo) {
  GroupContext ctx(2);
  const double t = 0.25;
  const std::uint64_t seed = 20240607;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, ctx.q() - 1);
  const int depth = 60;
  const int samples = 1'000'000;
  double sum = 0.0, sum2 = 0.0;
  for (int s = 0; s < samples; ++s) {
    // both rays start with 'a'; they agree until the first step at which the choices differ
    int m = 1;
    while (m < depth && pick(rng) == pick(rng)) ++m;
    const double k = std::pow(3.0, (1.0 - 2.0 * t) * m);
    sum += k;
    sum2 += k * k;
  }
  const double nu2 = 1.0 / 16.0;
  const double mean = sum / samples;
  const double se = std::sqrt((sum2 / samples - mean * mean) / samples);
  const double expect = self_energy(ctx, t, 1);
  EXPECT_LE(std::abs(mean * nu2 - expect), 3.0 * se * nu2) << "seed " << seed;
}

TEST(Kernel, GramEntriesSumToSigma) {
  for (int r : {2, 3}) {
    GroupContext ctx(r);
    for (double t : {0.1, 0.5, 0.75})
      for (int k = 1; k <= 3; ++k) {
        const GramMatrix G = gram_matrix(ctx, t, k);
        EXPECT_NEAR(G.entries.sum(), sigma(ctx, t), 1e-12 * sigma(ctx, t));
        EXPECT_EQ((G.entries - G.entries.transpose()).cwiseAbs().maxCoeff(), 0.0);
      }
  }
  EXPECT_THROW(gram_matrix(GroupContext(2), 0.25, 8), BudgetError);
}

TEST(Kernel, OperatorMatchesGram) {
  GroupContext ctx(2);
  std::mt19937_64 rng(11);
  for (double t : {0.1, 0.25, 0.5, 0.8}) {
    const GramMatrix G = gram_matrix(ctx, t, 3);
    const auto a = random_function(ctx, 3, rng), b = random_function(ctx, 2, rng);
    const Complex x = kernel_form(ctx, t, a, b), y = gram_form(G, ctx, a, b);
    EXPECT_LE(std::abs(x - y), 1e-13 * sigma(ctx, t) * l2_norm(ctx, a) * l2_norm(ctx, b));
  }
}

TEST(Kernel, ConstantsAreEigenfunctions) {
  GroupContext ctx(3);
  const auto f = knapp_stein_apply(ctx, 0.3, refine(ctx, constant_function(ctx), 2));
  for (const auto& x : f.values) EXPECT_NEAR(std::abs(x - sigma(ctx, 0.3)), 0.0, 1e-14);
}

TEST(Kernel, FormIsHermitian) {
  GroupContext ctx(2);
  std::mt19937_64 rng(12);
  const auto a = random_function(ctx, 2, rng), b = random_function(ctx, 3, rng);
  EXPECT_NEAR(std::abs(kernel_form(ctx, 0.2, a, b) - std::conj(kernel_form(ctx, 0.2, b, a))), 0.0, 1e-14);
}

TEST(Kernel, DirichletAgainstPairSum) {
  std::mt19937_64 rng(13);
  for (int r : {2, 3}) {
    GroupContext ctx(r);
    for (double t : {-0.5, 0.0, 0.25, 0.5, 0.75}) {
      const auto a = random_function(ctx, 2, rng), b = random_function(ctx, 2, rng);
      const Complex x = dirichlet_form(ctx, t, a, b), y = dirichlet_by_pairs(ctx, t, a, b);
      EXPECT_LE(std::abs(x - y), 1e-12 * std::max(1.0, std::abs(y))) << r << " " << t;
    }
  }
}

TEST(Kernel, DirichletOfHalfIndicator) {
  GroupContext ctx(2);
  const auto f = indicator(ctx, parse_word(ctx, "a"));
  EXPECT_NEAR(dirichlet_form(ctx, 0.5, f, f).real(), 0.1875, 1e-15);
  EXPECT_NEAR(besov_seminorm(ctx, 0.5, f), 0.375, 1e-15);
}

TEST(Kernel, DirichletVanishesOnConstants) {
  GroupContext ctx(2);
  const auto one = refine(ctx, constant_function(ctx), 3);
  EXPECT_NEAR(std::abs(dirichlet_form(ctx, 0.3, one, one)), 0.0, 1e-15);
}

TEST(Kernel, TruncatedOperatorsAddUp) {
  GroupContext ctx(2);
  std::mt19937_64 rng(14);
  const auto a = random_function(ctx, 3, rng);
  const auto lo = truncated_knapp_stein_apply(ctx, 0.25, a, 0, 2);
  const auto hi = truncated_knapp_stein_apply(ctx, 0.25, a, 2, kUnbounded);
  const auto all = knapp_stein_apply(ctx, 0.25, a);
  for (std::size_t i = 0; i < a.values.size(); ++i)
    EXPECT_NEAR(std::abs(lo.values[i] + hi.values[i] - all.values[i]), 0.0, 1e-14);
}

TEST(Kernel, RieszFixesConstants) {
  GroupContext ctx(2);
  const auto r = riesz_boundary_avg(ctx, 0.4, constant_function(ctx), 3);
  for (const auto& x : r.values) EXPECT_NEAR(std::abs(x - 1.0), 0.0, 1e-14);
}

TEST(Kernel, PairingsAndPreconditions) {
  GroupContext ctx(2);
  std::mt19937_64 rng(15);
  const auto a = random_function(ctx, 2, rng), b = random_function(ctx, 2, rng);
  EXPECT_THROW(ht_inner(ctx, 0.75, a, b), PreconditionError);
  EXPECT_THROW(ht_inner(ctx, 0.0, a, b), PreconditionError);
  const auto d = kt_inner_detail(ctx, 0.25, a, b);
  const Complex direct = l2_inner(ctx, knapp_stein_apply(ctx, 0.25, a), knapp_stein_apply(ctx, 0.25, b));
  EXPECT_NEAR(std::abs(d.value - direct), 0.0, 1e-13);
  EXPECT_GE(ht_inner(ctx, 0.5, a, a).real(), 0.0);
}

TEST(Kernel, PositivityDichotomy) {
  for (int r : {2, 3}) {
    GroupContext ctx(r);
    for (double t : {0.05, 0.2, 0.35, 0.5})
      for (int k = 1; k <= 3; ++k) EXPECT_GE(min_normalized_eigenvalue(ctx, gram_matrix(ctx, t, k)), -1e-10);
    double worst = 0.0;
    for (int k = 1; k <= 3; ++k) worst = std::min(worst, min_normalized_eigenvalue(ctx, gram_matrix(ctx, 0.75, k)));
    EXPECT_LT(worst, -1e-6);
  }
}

TEST(Kernel, PseudoInverseProperties) {
  GroupContext ctx(2);
  for (int k = 1; k <= 3; ++k) {
    const Eigen::MatrixXd T = gram_matrix(ctx, 0.25, k).entries;
    const PseudoInverse p = spectral_pseudo_inverse(T);
    const auto c = check_pseudo_inverse(T, p);
    EXPECT_LE(c.left_inverse_residual, 1e-9);
    EXPECT_LE(c.squared_residual, 1e-9);
    EXPECT_GE(c.shift_remainder_min_eig, -1e-9 * p.inverse.norm());
    EXPECT_NEAR(c.shift * std::abs(p.spectrum.eigenvalues(0)), 1.0, 1e-12);
  }
  // rank deficiency is detected
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(3, 3);
  M(0, 0) = 2.0;
  M(1, 1) = 1.0;
  const PseudoInverse p = spectral_pseudo_inverse(M);
  EXPECT_EQ(p.rank, 2);
  EXPECT_NEAR(p.inverse(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(p.inverse(2, 2), 0.0, 1e-15);
  EXPECT_THROW(spectral_decomposition(Eigen::MatrixXd::Random(3, 2)), PreconditionError);
}
