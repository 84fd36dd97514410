#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "hslift/catalog.hpp"
#include "hslift/experiments.hpp"
#include "hslift/spde.hpp"

using namespace hslift;

namespace {

SobolevVector expand1(double (*f)(double), const BasisPtr& b, double tag) {
  return expand_function([f](std::span<const double> x) { return f(x[0]); }, b, tag);
}

double max_abs(const SobolevVector& v) { return v.coeffs().cwiseAbs().maxCoeff(); }

}  // namespace

TEST(ApplyA, VanishesWhenThePairingDoes) {
  const auto b = Basis::make(1, 30);
  const SpdeOperators ops(ou_field(b, -1.0));
  // h_1 has zero mass, so <1, h_1> = 0
  const auto phi = SobolevVector::unit(b, MultiIndex({1}), 1.0);
  EXPECT_LT(max_abs(ops.apply_A(phi, 0)), 1e-13);
}

TEST(ApplyA, UnitDiffusionOnMember) {
  const auto b = Basis::make(1, 64);
  const SpdeOperators ops(ou_field(b, -1.0));
  const auto psi = expand1(catalog::psi1, b, 1.0);
  const auto a = ops.apply_A(psi, 0);
  const auto expect = -1.0 * derivative_matrix(b, 0).apply(psi);
  EXPECT_LT((a.coeffs() - expect.coeffs()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_DOUBLE_EQ(a.tag(), 0.5);
}

TEST(ApplyA, QuadraticHomogeneity) {
  const auto b = Basis::make(1, 30);
  const SpdeOperators ops(ou_field(b, -1.0));
  const auto psi = expand1(catalog::psi2, b, 1.0);
  const auto a1 = ops.apply_A(psi, 0);
  const auto a2 = ops.apply_A(2.0 * psi, 0);
  EXPECT_LT((a2.coeffs() - 4.0 * a1.coeffs()).cwiseAbs().maxCoeff(), 1e-12);
  // frozen pairings turn A linear
  const auto s = sigma_pairing(ops.field(), psi);
  EXPECT_LT((ops.apply_A_frozen(2.0 * psi, 0, s).coeffs() - 2.0 * a1.coeffs()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ApplyL, ZeroPairingsGiveZero) {
  const auto b = Basis::make(1, 30);
  const SpdeOperators ops(ou_field(b, -1.0));
  // odd functions have zero mass; cancel the first moment of h_3 with h_1
  const auto h1 = SobolevVector::unit(b, MultiIndex({1}), 1.0);
  const auto h3 = SobolevVector::unit(b, MultiIndex({3}), 1.0);
  const auto phi = h3 - (moment(h3, 1) / moment(h1, 1)) * h1;
  EXPECT_NEAR(drift_pairing(ops.field(), phi)[0], 0.0, 1e-14);
  EXPECT_LT(max_abs(ops.apply_L(phi)), 1e-13);
  const SpdeOperators zero(zero_field(b, -1.0));
  EXPECT_EQ(max_abs(zero.apply_L(h3)), 0.0);
}

TEST(ApplyL, OuOnPsi1IsHalfTheLaplacian) {
  const auto b = Basis::make(1, 64);
  const SpdeOperators ops(ou_field(b, -1.0));
  const auto psi = expand1(catalog::psi1, b, 1.0);
  const auto D = derivative_matrix(b, 0).matrix;
  const Eigen::VectorXd expect = 0.5 * D * (D * psi.coeffs());
  EXPECT_LT((ops.apply_L(psi).coeffs() - expect).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_DOUBLE_EQ(ops.apply_L(psi).tag(), 0.0);
}

TEST(ApplyL, TagMismatchRejected) {
  const auto b = Basis::make(1, 10);
  const SpdeOperators ops(quartic_field(b, -2.0));
  EXPECT_THROW(ops.apply_L(SobolevVector::unit(b, MultiIndex({0}), 1.0)), TagMismatch);
}

TEST(ApplyL, HeatSemigroupOracle) {
  // dY = 1/2 Y'' dt with frozen unit diffusion and no drift; psi2 is a
  // combination of Gaussians, whose heat evolution is closed form:
  // e^{-t^2/(2s)} spreads to sqrt(s/(s+t)) e^{-x^2/(2(s+t))} and
  // t^2 e^{-t^2/(2s)} to its second-moment analogue.
  const auto b = Basis::make(1, 60);
  const SpdeOperators ops(ou_field(b, -1.0));
  const auto psi = expand1(catalog::psi2, b, 1.0);
  const double t = 0.1, dt = 1e-4;
  Eigen::MatrixXd S(1, 1);
  S(0, 0) = 1.0;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  auto y = psi;
  for (int k = 0; k < static_cast<int>(std::lround(t / dt)); ++k) y = y + dt * ops.apply_L_frozen(y, S, zero).with_tag(1.0);
  const double s = 1.0, u = s + t;
  const double a = 3.0 / (2.0 * std::sqrt(2.0 * std::numbers::pi)), c = 1.0 / (2.0 * std::sqrt(2.0 * std::numbers::pi));
  for (double x = -4.0; x <= 4.0; x += 0.5) {
    const double g = std::sqrt(s / u) * std::exp(-x * x / (2 * u));
    const double exact = a * g - c * g * (s * t / u + x * x * s * s / (u * u));
    EXPECT_NEAR(reconstruct(y, std::span(&x, 1)), exact, 1e-3) << x;
  }
}

TEST(Lift, ZeroPathIsConstant) {
  const auto b = Basis::make(1, 30);
  const auto xi = expand1(catalog::psi1, b, 1.0);
  PathResult z;
  z.dt = 0.1;
  z.states.assign(11, 0.0);
  const auto l = lift(xi, z, {0, 5, 10});
  for (const auto& y : l.realized) {
    ASSERT_TRUE(y.has_value());
    EXPECT_LT((y->coeffs() - xi.coeffs()).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Lift, IsometryAndPointwiseShift) {
  const auto b = Basis::make(1, 60);
  const auto xi = expand1(catalog::psi1, b, 1.0);
  const auto path = BrownianPath::make(1, 0.01, 200, 4);
  const double z0 = 0.2;
  const auto z = simulate_em(ou_problem(1), path, std::span(&z0, 1));
  std::vector<std::size_t> steps;
  for (std::size_t k = 0; k <= 200; k += 20) steps.push_back(k);
  const auto l = lift(xi, z, steps);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& y = *l.realized[i];
    EXPECT_NEAR(sobolev_norm(y, 0.0), sobolev_norm(xi, 0.0), 1e-10);
    const double zt = z.state(steps[i])[0];
    if (std::abs(zt) > 2.0) continue;
    for (double x = -3.0; x <= 3.0; x += 0.75) {
      EXPECT_NEAR(reconstruct(y, std::span(&x, 1)), catalog::psi1(x - zt), 1e-5);
    }
  }
}

TEST(Lift, CemeteryAfterExit) {
  const auto b = Basis::make(1, 10);
  PathResult z;
  z.dt = 0.1;
  z.states = {0.0, 0.5, 2.0, std::nan("")};
  z.exploded = true;
  z.exit_step = 2;
  const auto l = lift(SobolevVector::unit(b, MultiIndex({0}), 1.0), z, {0, 1, 2, 3});
  EXPECT_TRUE(l.realized[1].has_value());
  EXPECT_FALSE(l.realized[2].has_value());
  EXPECT_FALSE(l.realized[3].has_value());
}

TEST(ZFromY, LiftedOuRoundTrip) {
  const auto b = Basis::make(1, 40);
  const auto field = ou_field(b, -1.0);
  const auto xi = expand1(catalog::psi2, b, 1.0);
  const double dt = 1e-3;
  const auto path = BrownianPath::make(1, dt, 1000, 8);
  const double z0 = 0.1;
  const auto z = simulate_em(ou_problem(1), path, std::span(&z0, 1));
  std::vector<std::size_t> all(1001);
  for (std::size_t k = 0; k <= 1000; ++k) all[k] = k;
  const auto l = lift(xi, z, all);
  std::vector<SobolevVector> ys;
  for (const auto& y : l.realized) ys.push_back(*y);
  const auto back = z_from_y(ys, field, path, std::span(&z0, 1));
  double err = 0.0;
  for (std::size_t k = 0; k <= 1000; ++k) err = std::max(err, std::abs(back[k] - z.state(k)[0]));
  EXPECT_LT(err, 5.0 * std::sqrt(dt));
}

TEST(Galerkin, ZeroFieldKeepsXi) {
  const auto b = Basis::make(1, 20);
  const SpdeOperators ops(zero_field(b, -1.0));
  const auto xi = expand1(catalog::psi1, b, 1.0);
  const auto r = galerkin_simulate(xi, ops, BrownianPath::make(1, 0.01, 50, 1), 1.0);
  for (const auto& y : r.states) EXPECT_EQ((y.coeffs() - xi.coeffs()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(r.states.back().tag(), 0.0);
}

TEST(Galerkin, GuardTrips) {
  const auto b = Basis::make(1, 40);
  const SpdeOperators ops(ou_field(b, -1.0));
  const auto xi = expand1(catalog::psi2, b, 1.0);
  GalerkinOptions opts;
  opts.guard_factor = 0.5;
  try {
    galerkin_simulate(xi, ops, BrownianPath::make(1, 0.01, 100, 1), 1.0, opts);
    FAIL() << "guard did not trip";
  } catch (const GuardTripped& e) {
    EXPECT_LT(e.step(), 100u);
  }
}

TEST(Galerkin, CorrespondenceWithTheLift) {
  CorrespondenceConfig c;
  c.n_paths = 8;
  const auto r = correspondence_ladder(c);
  ASSERT_EQ(r.levels.size(), 4u);
  EXPECT_LE(r.levels.front().mean_error, 0.05);
  EXPECT_TRUE(r.monotone);
}

TEST(Galerkin, ZeroFieldCorrespondenceIsExact) {
  CorrespondenceConfig c;
  c.example = "zero";
  c.n_paths = 2;
  c.halvings = 1;
  for (const auto& l : correspondence_ladder(c).levels) EXPECT_EQ(l.mean_error, 0.0);
}

TEST(ItoResidual, LinearPathHasFirstOrderResidual) {
  const auto b = Basis::make(1, 40);
  const auto xi = expand1(catalog::psi1, b, 1.0);
  std::vector<double> dts, maxes;
  for (int e : {6, 8, 10}) {
    PathResult z;
    z.dt = std::ldexp(1.0, -e);
    for (std::size_t k = 0; k <= (std::size_t{1} << e); ++k) z.states.push_back(0.7 * z.dt * static_cast<double>(k));
    dts.push_back(z.dt);
    maxes.push_back(ito_residual(xi, z, 1.0).max);
  }
  // at least first order; with the realized (dZ)^2 term included the
  // per-step remainder is cubic and the sum comes out second order
  EXPECT_GE(loglog_slope(dts, maxes), 0.9);
}

TEST(ItoResidual, OuDrivenSlope) {
  ItoConfig c;
  c.n_paths = 16;
  c.seed = 3;
  const auto r = ito_ladder(c);
  EXPECT_GE(r.slope, 0.35);
  EXPECT_LE(r.slope, 0.65);
}

TEST(ItoResidual, BracketAndRealizedAgreeForConstantXi) {
  // with xi = h_0 both covariation modes drive the same deterministic-phi
  // expansion; they differ only by the sum of (dB^2 - dt), which is O(sqrt dt)
  const auto b = Basis::make(1, 40);
  const auto xi = SobolevVector::unit(b, MultiIndex({0}), 1.0);
  const auto prob = ou_problem(1);
  const auto path = BrownianPath::make(1, 1.0 / 2048, 2048, 6);
  const double z0 = 0.0;
  const auto z = simulate_em(prob, path, std::span(&z0, 1));
  const auto a = ito_residual(xi, z, 1.0, Covariation::realized);
  const auto c = ito_residual(xi, z, 1.0, Covariation::bracket, &prob);
  EXPECT_LT(a.max, 0.05);
  EXPECT_LT(c.max, 0.2);
  ASSERT_EQ(a.norms.size(), c.norms.size());
  EXPECT_EQ(a.norms.front(), 0.0);
}

TEST(MonotonicityGap, ZeroPairings) {
  const auto b = Basis::make(1, 30);
  const SpdeOperators ops(zero_field(b, -1.0));
  EXPECT_EQ(monotonicity_gap(expand1(catalog::psi1, b, 1.0), ops, 1.0), 0.0);
}

TEST(MonotonicityGap, FrozenGapIsScaleInvariant) {
  const auto b = Basis::make(1, 40);
  const SpdeOperators ops(ou_field(b, -1.0));
  const auto phi = expand1(catalog::psi2, b, 1.0) + 0.3 * SobolevVector::unit(b, MultiIndex({1}), 1.0);
  const auto s = sigma_pairing(ops.field(), phi);
  const auto d = drift_pairing(ops.field(), phi);
  for (double p : {1.0, 2.0}) {
    const double g1 = monotonicity_gap_frozen(phi, ops, p, s, d);
    const double g2 = monotonicity_gap_frozen(2.0 * phi, ops, p, s, d);
    EXPECT_NEAR(g1, g2, 1e-10 * std::max(1.0, std::abs(g1)));
    // the state-dependent gap is not: pairings double with phi
    if (p == 2.0) {
      EXPECT_GT(std::abs(monotonicity_gap(2.0 * phi, ops, p) - monotonicity_gap(phi, ops, p)), 1e-6);
    }
  }
}

TEST(MonotonicityGap, CorpusIsFinite) {
  const auto b = Basis::make(1, 40);
  const SpdeOperators ops(ou_field(b, -1.0));
  const auto r = monotonicity_corpus(ops, 1.0, 200, 1);
  EXPECT_TRUE(r.finite);
  EXPECT_EQ(r.samples, 200u);
  // at p = 1 the weight is (2n+1)^0 and the two terms cancel exactly by skew-symmetry
  EXPECT_LE(std::abs(r.max), 1e-12 * r.scale);
}

TEST(TrajectoryCsv, Columns) {
  const auto b = Basis::make(1, 5);
  const auto y = SobolevVector::unit(b, MultiIndex({0}), 1.0);
  std::ostringstream os;
  write_trajectory_csv(os, {0.0, 0.5}, {y, y}, {1.0}, {{"h0", y}});
  const auto s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "t,observable,value,std_err");
  EXPECT_NE(s.find("0.5,h0,1,0"), std::string::npos);
}
