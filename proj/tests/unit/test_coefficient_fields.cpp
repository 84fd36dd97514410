#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "hslift/catalog.hpp"
#include "hslift/errors.hpp"
#include "hslift/fields.hpp"

using namespace hslift;

namespace {

SobolevVector expand1(const std::function<double(double)>& f, const BasisPtr& b, double tag) {
  return expand_function([f](std::span<const double> x) { return f(x[0]); }, b, tag);
}

SobolevVector gaussian(const BasisPtr& b, double var, double tag) {
  return expand1([var](double t) { return catalog::gaussian_density(t, var); }, b, tag);
}

// int t^k e^{-t^2/(2v)} / sqrt(2 pi v) = (k-1)!! v^{k/2} for even k
double gaussian_moment(int k, double var) {
  if (k % 2) return 0.0;
  double m = 1.0;
  for (int j = k - 1; j > 0; j -= 2) m *= j;
  return m * std::pow(var, k / 2.0);
}

}  // namespace

TEST(Polynomial, Evaluation) {
  const auto p = Polynomial::univariate({1.0, 0.0, -2.0});
  EXPECT_EQ(p.degree(), 2);
  const double x = 3.0;
  EXPECT_DOUBLE_EQ(p(std::span(&x, 1)), -17.0);
  const auto q = Polynomial::monomial(2, {1, 2}, 0.5) + Polynomial::constant(2, 1.0);
  const std::vector<double> y{2.0, 3.0};
  EXPECT_DOUBLE_EQ(q(y), 10.0);
}

TEST(MonomialDistribution, Thresholds) {
  EXPECT_DOUBLE_EQ(monomial_threshold(1, 0), 0.25);
  EXPECT_DOUBLE_EQ(monomial_threshold(1, 1), 0.75);
  EXPECT_DOUBLE_EQ(monomial_threshold(1, 3), 1.75);
  EXPECT_DOUBLE_EQ(monomial_threshold(2, 1), 1.0);
}

TEST(MonomialDistribution, PairingGivesMoments) {
  // <x^k, g> against a Gaussian density must reproduce its moments. The
  // coefficients of a variance-v Gaussian decay like (|v-1|/(v+1))^{n/2},
  // 0.6^{n/2} at v = 1/4, so N = 160 leaves nothing visible.
  const auto b = Basis::make(1, 160);
  for (double var : {0.25, 1.0}) {
    const auto g = gaussian(b, var, 4.0);
    for (int k = 0; k <= 6; ++k) {
      const auto m = monomial_distribution(b, {k}, -4.0);
      EXPECT_NEAR(pairing(m, g), gaussian_moment(k, var), 1e-9 * std::max(1.0, gaussian_moment(k, var)));
    }
  }
}

TEST(MonomialDistribution, FiniteAboveThreshold) {
  // the x-distribution at tag -1 (> 3/4): norms stabilize in N
  const double a = sobolev_norm(monomial_distribution(Basis::make(1, 500), {1}, -1.0), -1.0);
  const double c = sobolev_norm(monomial_distribution(Basis::make(1, 2000), {1}, -1.0), -1.0);
  EXPECT_LT((c - a) / c, 0.02);
}

TEST(SigmaBar, ConstantFieldOnMembers) {
  const auto b = Basis::make(1, 40);
  const auto field = ou_field(b, -1.0);
  for (auto psi : {expand1(catalog::psi1, b, 1.0), expand1(catalog::psi2, b, 1.0)}) {
    for (double x : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
      EXPECT_NEAR(sigma_bar(std::span(&x, 1), psi, field)(0, 0), 1.0, 1e-6) << x;
    }
  }
}

TEST(SigmaBar, AtOriginIsThePairing) {
  const auto b = Basis::make(1, 30);
  const auto field = quartic_field(b, -2.0);
  const auto psi = gaussian(b, 0.5, 2.0);
  const double x = 0.0;
  EXPECT_NEAR(b_bar(std::span(&x, 1), psi, field)[0], drift_pairing(field, psi)[0], 1e-12);
  EXPECT_NEAR(sigma_bar(std::span(&x, 1), psi, field)(0, 0), sigma_pairing(field, psi)(0, 0), 1e-12);
}

TEST(BBar, OrnsteinUhlenbeckWithGaussian) {
  const auto b = Basis::make(1, 100);
  const auto field = ou_field(b, -1.0);
  const auto psi = gaussian(b, 0.25, 1.0);
  for (double x : {-2.0, -0.5, 0.0, 1.0, 2.0}) EXPECT_NEAR(b_bar(std::span(&x, 1), psi, field)[0], -x, 1e-6);
}

TEST(BBar, QuarticWithPsi1) {
  const auto b = Basis::make(1, 64);
  const auto field = quartic_field(b, -2.0);
  const auto psi = expand1(catalog::psi1, b, 2.0);
  for (double x = -2.0; x <= 2.0; x += 0.25) {
    EXPECT_NEAR(b_bar(std::span(&x, 1), psi, field)[0], -x * x * x, 1e-6) << x;
  }
}

TEST(BBar, QuarticOffTheSet) {
  // psi = N(0,1) density: m0 = 1, m1 = 0, m2 = 1, m3 = 0, so
  // int -(u+x)^3 psi(u) du = -x^3 - 3x
  const auto b = Basis::make(1, 64);
  const auto field = quartic_field(b, -2.0);
  const auto psi = gaussian(b, 1.0, 2.0);
  for (double x : {-1.5, -0.5, 0.5, 2.0}) {
    EXPECT_NEAR(b_bar(std::span(&x, 1), psi, field)[0], -x * x * x - 3 * x, 1e-6) << x;
  }
}

TEST(BBar, EvaluatorMatchesTranslation) {
  const auto b = Basis::make(1, 40);
  const auto field = quartic_field(b, -2.0);
  const auto psi = gaussian(b, 0.7, 2.0);
  const FieldEvaluator ev(field, psi);
  for (double x : {-3.0, -0.2, 1.1, 2.9}) {
    EXPECT_NEAR(ev.b_bar(std::span(&x, 1))[0], b_bar(std::span(&x, 1), psi, field)[0], 1e-9);
  }
}

TEST(BBar, TagMismatchBelowDualIndex) {
  const auto b = Basis::make(1, 20);
  const auto field = quartic_field(b, -2.0);
  const auto psi = expand1(catalog::psi1, b, 1.0);
  const double x = 0.0;
  EXPECT_THROW(b_bar(std::span(&x, 1), psi, field), TagMismatch);
}

TEST(Moment, Psi1VanishingMoments) {
  const auto psi = expand1(catalog::psi1, Basis::make(1, 64), 2.0);
  EXPECT_NEAR(moment(psi, 0), 1.0, 1e-10);
  for (int k = 1; k <= 3; ++k) EXPECT_NEAR(moment(psi, k), 0.0, 1e-10) << k;
}

TEST(Moment, ParityAndGaussian) {
  const auto b = Basis::make(1, 64);
  const auto g = gaussian(b, 1.0, 3.0);
  EXPECT_NEAR(moment(g, 2), 1.0, 1e-9);
  for (int k : {1, 3, 5}) EXPECT_NEAR(moment(g, k), 0.0, 1e-12);
}

TEST(Moment, TagThreshold) {
  const auto psi = expand1(catalog::psi1, Basis::make(1, 30), 1.0);
  EXPECT_NO_THROW(moment(psi, 1));
  EXPECT_THROW(moment(psi, 3), TagMismatch);  // x^3 needs a tag above 7/4
}

TEST(SetC, Psi1AndPsi2AreQuarticMembers) {
  const auto b = Basis::make(1, 96);
  const auto spec = quartic_set_c();
  for (auto f : {catalog::psi1, catalog::psi2}) {
    const auto v = set_c_check(expand1(f, b, 2.0), spec);
    EXPECT_TRUE(v.member);
    EXPECT_LE(v.max_residual, 1e-10);
  }
}

TEST(SetC, PrintedSecondFunctionIsNotAMember) {
  const auto b = Basis::make(1, 96);
  const auto v = set_c_check(expand1(catalog::psi2_printed, b, 2.0), quartic_set_c());
  EXPECT_FALSE(v.member);
  EXPECT_NEAR(moment(expand1(catalog::psi2_printed, b, 2.0), 0), 0.5, 1e-10);
}

TEST(SetC, GaussianIsNotAQuarticMember) {
  const auto v = set_c_check(gaussian(Basis::make(1, 96), 0.5, 2.0), quartic_set_c());
  EXPECT_FALSE(v.member);
}

TEST(SetC, ConvexCombination) {
  const auto b = Basis::make(1, 96);
  const auto mid = 0.5 * (expand1(catalog::psi1, b, 2.0) + expand1(catalog::psi2, b, 2.0));
  EXPECT_TRUE(set_c_check(mid, quartic_set_c()).member);
  const auto off = 0.7 * expand1(catalog::psi1, b, 2.0) + 0.7 * expand1(catalog::psi2, b, 2.0);
  EXPECT_FALSE(set_c_check(off, quartic_set_c()).member);  // mass 1.4
}

TEST(SetC, OuConditionsFromExpansion) {
  const auto spec = ou_set_c();
  // sigma = f = 1 gives m0 = 1; b = g = -x gives m0 = 1 and m1 = 0
  EXPECT_EQ(spec.max_moment_order(), 1);
  EXPECT_TRUE(set_c_check(gaussian(Basis::make(1, 64), 0.25, 1.0), spec).member);
}

TEST(SetC, DirectModeAgrees) {
  const auto b = Basis::make(1, 64);
  const auto field = quartic_field(b, -2.0);
  const std::vector<ScalarField> f{[](std::span<const double>) { return 1.0; }};
  const std::vector<ScalarField> g{[](std::span<const double> x) { return -x[0] * x[0] * x[0]; }};
  std::vector<double> grid;
  for (double x = -2.0; x <= 2.0; x += 0.5) grid.push_back(x);
  EXPECT_TRUE(set_c_check_direct(expand1(catalog::psi1, b, 2.0), field, f, g, grid, 1e-6).member);
  EXPECT_FALSE(set_c_check_direct(gaussian(b, 1.0, 2.0), field, f, g, grid, 1e-6).member);
}

TEST(Lipschitz, ConstantAndCubic) {
  const auto b = Basis::make(1, 64);
  const auto psi = expand1(catalog::psi1, b, 2.0);
  const auto r = lipschitz_probe(psi, quartic_field(b, -2.0), 2.0, 81);
  EXPECT_LT(r.sigma_estimate, 1e-6);
  EXPECT_NEAR(r.drift_estimate, 12.0, 1.2);
  EXPECT_LE(r.drift_estimate, r.drift_bound);
  const auto r2 = lipschitz_probe(2.0 * psi, quartic_field(b, -2.0), 2.0, 81);
  EXPECT_NEAR(r2.drift_estimate / r.drift_estimate, 2.0, 1e-9);
}

TEST(Lipschitz, TwoDimensionalOu) {
  const auto b = Basis::make(2, 12);
  const auto field = ou_field(b, -1.0);
  const auto psi = expand_function(
      [](std::span<const double> x) { return catalog::gaussian_density(x[0], 1.0) * catalog::gaussian_density(x[1], 1.0); },
      b, 1.0);
  const auto r = lipschitz_probe(psi, field, 1.5, 200, 5);
  EXPECT_NEAR(r.drift_estimate, 1.0, 0.05);  // b_bar = -x
}
