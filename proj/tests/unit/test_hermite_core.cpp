#include <cmath>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "hslift/basis.hpp"
#include "hslift/catalog.hpp"
#include "hslift/errors.hpp"
#include "hslift/hermite.hpp"
#include "hslift/sobolev.hpp"

using namespace hslift;

namespace {

// Physicists' Hermite polynomial by the plain three-term recurrence; fine
// for small n where nothing overflows.
double hermite_poly(int n, double x) {
  double a = 1.0, b = 2.0 * x;
  if (n == 0) return a;
  for (int k = 1; k < n; ++k) {
    const double c = 2.0 * x * b - 2.0 * k * a;
    a = b;
    b = c;
  }
  return b;
}

double naive_h(int n, double x) {
  const double norm = std::sqrt(std::pow(2.0, n) * std::tgamma(n + 1.0) * std::sqrt(std::numbers::pi));
  return hermite_poly(n, x) * std::exp(-x * x / 2) / norm;
}

// trapezoid on a wide grid, exponentially accurate for Gaussian-decay integrands
double trapezoid(const std::function<double(double)>& f, double a = -20.0, double b = 20.0, int n = 8000) {
  const double h = (b - a) / n;
  double s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n; ++i) s += f(a + i * h);
  return s * h;
}

}  // namespace

TEST(MultiIndex, ShiftBelowZeroIsNull) {
  const MultiIndex n({0, 2});
  EXPECT_FALSE(n.shifted(0, -1).has_value());
  ASSERT_TRUE(n.shifted(1, -1).has_value());
  EXPECT_EQ(n.shifted(1, -1)->entries(), (std::vector<int>{0, 1}));
  EXPECT_EQ(n.order(), 2);
}

TEST(MultiIndex, NegativeEntriesRejected) { EXPECT_THROW(MultiIndex({1, -1}), ConfigError); }

TEST(Basis, OneDimensionalEnumeration) {
  const auto b = Basis::make(1, 5);
  ASSERT_EQ(b->size(), 6u);
  for (int k = 0; k <= 5; ++k) EXPECT_EQ(b->index(static_cast<std::size_t>(k))[0], k);
}

TEST(Basis, TwoDimensionalSize) {
  EXPECT_EQ(Basis::make(2, 2)->size(), 6u);
  EXPECT_EQ(enumerate_shell(2, 3).size(), 4u);
}

TEST(Basis, SizeIsBinomial) {
  for (int d = 1; d <= 4; ++d) {
    for (int N = 0; N <= 8; ++N) {
      EXPECT_EQ(static_cast<double>(Basis::make(d, N)->size()), binomial(N + d, d)) << d << "," << N;
      EXPECT_EQ(static_cast<double>(enumerate_shell(d, N).size()), binomial(N + d - 1, d - 1));
    }
  }
}

TEST(Basis, OrderingIsGradedAndStable) {
  const auto a = enumerate_basis({3, 4});
  const auto b = enumerate_basis({3, 4});
  EXPECT_EQ(a, b);
  std::set<std::vector<int>> seen;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i > 0) EXPECT_LE(a[i - 1].order(), a[i].order());
    EXPECT_TRUE(seen.insert(a[i].entries()).second);
  }
  const auto basis = Basis::make(3, 4);
  for (std::size_t r = 0; r < basis->size(); ++r) EXPECT_EQ(basis->rank_of(basis->index(r)), r);
  EXPECT_FALSE(basis->rank_of(MultiIndex({5, 0, 0})).has_value());
}

TEST(HermiteEval, ValuesAtOrigin) {
  EXPECT_NEAR(hermite_eval(MultiIndex({1}), std::vector<double>{0.0}), 0.0, 1e-15);
  EXPECT_NEAR(hermite_eval(MultiIndex({0}), std::vector<double>{0.0}), 0.7511255444649425, 1e-13);
  // normalization oracle: a e^{-x^2/2} with unit L2 norm
  const double a = 1.0 / std::sqrt(trapezoid([](double x) { return std::exp(-x * x); }));
  EXPECT_NEAR(hermite_eval(MultiIndex({0}), std::vector<double>{0.0}), a, 1e-12);
}

TEST(HermiteEval, MatchesNaiveFormulaForSmallOrders) {
  for (int n = 0; n <= 20; ++n) {
    for (double x : {-3.0, -0.7, 0.0, 0.4, 2.5}) {
      const auto hs = hermite_functions(n, x);
      EXPECT_NEAR(hs[static_cast<std::size_t>(n)], naive_h(n, x), 1e-12) << n << " at " << x;
    }
  }
}

TEST(HermiteEval, LargeArgumentsStayFinite) {
  const auto hs = hermite_functions(200, 40.0);
  for (double v : hs) EXPECT_TRUE(std::isfinite(v));
  const auto far = hermite_functions(10, 1e3);
  for (double v : far) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(hermite_functions(3, std::nan("")), NumericalError);
}

TEST(HermiteEval, OrthonormalUnderIndependentQuadrature) {
  // trapezoid oracle, independent of the Gauss-Hermite code
  for (int n = 0; n <= 10; ++n) {
    for (int m = n; m <= 10; ++m) {
      const double ip = trapezoid([&](double x) { return naive_h(n, x) * naive_h(m, x); });
      const double lib = trapezoid([&](double x) {
        const auto hs = hermite_functions(10, x);
        return hs[static_cast<std::size_t>(n)] * hs[static_cast<std::size_t>(m)];
      });
      EXPECT_NEAR(lib, n == m ? 1.0 : 0.0, 1e-12);
      EXPECT_NEAR(ip, lib, 1e-12);
    }
  }
}

TEST(GaussHermite, SmallRules) {
  const auto q1 = gauss_hermite(1);
  ASSERT_EQ(q1.size(), 1u);
  EXPECT_NEAR(q1.nodes[0], 0.0, 1e-15);
  EXPECT_NEAR(q1.weights[0], std::sqrt(std::numbers::pi), 1e-14);
  const auto q2 = gauss_hermite(2);
  ASSERT_EQ(q2.size(), 2u);
  EXPECT_NEAR(std::abs(q2.nodes[0]), 1.0 / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(q2.nodes[0], -q2.nodes[1], 1e-14);
  for (double w : q2.weights) EXPECT_NEAR(w, std::sqrt(std::numbers::pi) / 2, 1e-14);
  EXPECT_THROW(gauss_hermite(0), ConfigError);
}

TEST(GaussHermite, WeightsSumToSqrtPi) {
  for (int m : {5, 20, 64, 150}) {
    double s = 0.0;
    for (double w : gauss_hermite(m).weights) s += w;
    EXPECT_NEAR(s, std::sqrt(std::numbers::pi), 1e-12) << m;
  }
}

TEST(GaussHermite, ExactOnMonomials) {
  // int x^{2k} e^{-x^2} = Gamma(k + 1/2)
  for (int m : {4, 10, 32}) {
    const auto q = gauss_hermite(m);
    for (int j = 0; j <= 2 * m - 1; ++j) {
      // relative to sum |w x^j|, the scale of the cancellation for odd j
      double s = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) {
        s += q.weights[i] * std::pow(q.nodes[i], j);
        scale += q.weights[i] * std::abs(std::pow(q.nodes[i], j));
      }
      const double exact = j % 2 ? 0.0 : std::tgamma(j / 2.0 + 0.5);
      EXPECT_NEAR(s, exact, 1e-10 * scale) << "m=" << m << " j=" << j;
    }
  }
}

TEST(ExpandFunction, BasisFunctionRecovered) {
  const auto b = Basis::make(1, 20);
  const auto v = expand_function([](std::span<const double> x) { return std::exp(-x[0] * x[0] / 2); }, b);
  EXPECT_NEAR(v[0], std::pow(std::numbers::pi, 0.25), 1e-12);
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_NEAR(v[i], 0.0, 1e-12);
}

TEST(ExpandFunction, Psi1IsEven) {
  const auto b = Basis::make(1, 40);
  const auto v = expand_function([](std::span<const double> x) { return catalog::psi1(x[0]); }, b);
  for (std::size_t n = 1; n < v.size(); n += 2) EXPECT_NEAR(v[n], 0.0, 1e-14);
  EXPECT_GT(std::abs(v[0]), 0.1);
}

TEST(ExpandFunction, Psi2ReconstructionL2Error) {
  const auto b = Basis::make(1, 40);
  const auto v = expand_function([](std::span<const double> x) { return catalog::psi2(x[0]); }, b);
  const double err2 = trapezoid(
      [&](double x) {
        const double r = catalog::psi2(x) - reconstruct(v, std::span(&x, 1));
        return r * r;
      },
      -15.0, 15.0, 3000);
  EXPECT_LE(std::sqrt(err2), 1e-8);
}

TEST(ExpandFunction, TwoDimensionalTensorProduct) {
  const auto b = Basis::make(2, 6);
  const auto v = expand_function(
      [](std::span<const double> x) { return naive_h(1, x[0]) * naive_h(2, x[1]); }, b);
  const auto r = *b->rank_of(MultiIndex({1, 2}));
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(v[i], i == r ? 1.0 : 0.0, 1e-12);
}

TEST(ExpandFunction, NonFiniteIsRejected) {
  const auto b = Basis::make(1, 4);
  EXPECT_THROW(expand_function([](std::span<const double>) { return std::nan(""); }, b), NumericalError);
}

TEST(DeltaCoeffs, OddCoefficientsVanishAtOrigin) {
  const auto v = delta_coeffs(std::vector<double>{0.0}, Basis::make(1, 30));
  for (std::size_t n = 1; n < v.size(); n += 2) EXPECT_EQ(v[n], 0.0);
  EXPECT_LT(v.tag(), 0.0);
}

TEST(DeltaCoeffs, PairingEvaluatesSmoothFunctions) {
  const auto b = Basis::make(1, 60);
  const auto f = [](double x) { return std::exp(-(x - 0.3) * (x - 0.3)) * (1.0 + x); };
  const auto fv = expand_function([&](std::span<const double> x) { return f(x[0]); }, b, 1.0);
  for (double x : {-2.0, -1.0, 0.0, 0.5, 1.5, 2.0}) {
    const auto d = delta_coeffs(std::vector<double>{x}, b, -1.0);
    EXPECT_NEAR(pairing(d, fv), f(x), 1e-6) << x;
  }
}

TEST(DeltaCoeffs, PartialSumsConvergeAboveQuarter) {
  // sum_n h_n(0)^2 (2n+1)^{-2p}: h_{2k}(0)^2 ~ 1/(pi sqrt(k)), so the tail
  // converges for p > 1/4 and grows for p below it
  const auto b = Basis::make(1, 2000);
  const auto v = delta_coeffs(std::vector<double>{0.0}, b);
  const auto partial = [&](double p, std::size_t upto) {
    double s = 0.0;
    for (std::size_t n = 0; n <= upto; ++n) s += std::pow(2.0 * n + 1.0, -2 * p) * v[n] * v[n];
    return s;
  };
  const double total = partial(1.0, 2000);
  EXPECT_LE((total - partial(1.0, 1000)) / total, 1e-3);
  const double a = partial(0.2, 500), c = partial(0.2, 2000);
  EXPECT_GT(std::log(c / a) / std::log(4.0), 0.05);
}
