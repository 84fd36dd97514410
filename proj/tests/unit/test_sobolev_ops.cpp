#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "hslift/catalog.hpp"
#include "hslift/errors.hpp"
#include "hslift/hermite.hpp"
#include "hslift/sobolev.hpp"

using namespace hslift;

namespace {

SobolevVector expand1(double (*f)(double), const BasisPtr& b, double tag = 0.0) {
  return expand_function([f](std::span<const double> x) { return f(x[0]); }, b, tag);
}

double h(int n, double x) { return hermite_functions(n, x)[static_cast<std::size_t>(n)]; }

}  // namespace

TEST(SobolevNorm, BasisFunctions) {
  const auto b = Basis::make(1, 12);
  EXPECT_DOUBLE_EQ(sobolev_norm(SobolevVector::unit(b, MultiIndex({0}), 0.0), 0.0), 1.0);
  for (int n : {0, 3, 7, 12}) {
    for (double p : {-1.5, -0.5, 0.0, 0.25, 2.0}) {
      const auto v = SobolevVector::unit(b, MultiIndex({n}), p);
      EXPECT_NEAR(sobolev_norm(v, p), std::pow(2.0 * n + 1.0, p), 1e-12 * std::pow(2.0 * n + 1.0, p));
    }
  }
  const auto b2 = Basis::make(3, 4);
  const auto v = SobolevVector::unit(b2, MultiIndex({1, 0, 2}), 0.0);
  EXPECT_NEAR(sobolev_norm(v, 1.5), std::pow(9.0, 1.5), 1e-10);
}

TEST(SobolevNorm, MonotoneInIndexAndNonNegative) {
  const auto b = Basis::make(1, 30);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  Eigen::VectorXd c(31);
  for (auto& x : c) x = nd(rng);
  const SobolevVector v(b, c, 0.0);
  double prev = 0.0;
  for (double p = -2.0; p <= 2.0; p += 0.25) {
    const double n = sobolev_norm(v, p);
    EXPECT_GE(n, prev);
    prev = n;
  }
}

TEST(SobolevNorm, DeltaTailAtMinusOne) {
  const auto b = Basis::make(1, 2000);
  const auto d = delta_coeffs(std::vector<double>{0.0}, b, -1.0);
  const auto w = shell_weights(*b, -1.0);
  double half = 0.0, total = 0.0;
  for (Eigen::Index n = 0; n <= 2000; ++n) {
    const double t = w[n] * w[n] * d.coeffs()[n] * d.coeffs()[n];
    total += t;
    if (n <= 1000) half += t;
  }
  EXPECT_NEAR(total, std::pow(sobolev_norm(d, -1.0), 2), 1e-12 * total);
  EXPECT_LE((total - half) / total, 1e-3);
}

TEST(Pairing, DeltaAgainstPsi1) {
  const auto b = Basis::make(1, 60);
  const auto d = delta_coeffs(std::vector<double>{0.0}, b, -1.0);
  const auto psi = expand1(catalog::psi1, b, 1.0);
  EXPECT_NEAR(pairing(d, psi), 3.0 / (2.0 * std::sqrt(std::numbers::pi)), 1e-8);
}

TEST(Pairing, UnitVectors) {
  const auto b = Basis::make(1, 5);
  const auto h3 = SobolevVector::unit(b, MultiIndex({3}), 0.0);
  EXPECT_DOUBLE_EQ(pairing(h3, h3), 1.0);
}

TEST(Pairing, TagAndBasisChecks) {
  const auto b = Basis::make(1, 5);
  const auto u = SobolevVector::unit(b, MultiIndex({1}), -2.0);
  const auto v = SobolevVector::unit(b, MultiIndex({1}), 1.0);
  EXPECT_THROW(pairing(u, v), TagMismatch);
  const auto w = SobolevVector::unit(Basis::make(1, 6), MultiIndex({1}), 3.0);
  EXPECT_THROW(pairing(u, w), TagMismatch);
}

TEST(Pairing, DualityBound) {
  const auto b = Basis::make(2, 10);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 100; ++trial) {
    const double p = 0.1 * (trial % 20);
    Eigen::VectorXd a(static_cast<Eigen::Index>(b->size())), c(a.size());
    for (auto& x : a) x = nd(rng);
    for (auto& x : c) x = nd(rng);
    const SobolevVector u(b, a, -p), v(b, c, p);
    EXPECT_LE(std::abs(pairing(u, v)), sobolev_norm(u, -p) * sobolev_norm(v, p) * (1 + 1e-12));
  }
}

TEST(DerivativeMatrix, RecurrenceEntries) {
  const auto b = Basis::make(1, 10);
  const auto D = derivative_matrix(b, 0);
  EXPECT_EQ(D.band, 1);
  EXPECT_NEAR(D.matrix(1, 0), -std::sqrt(0.5), 1e-15);
  for (Eigen::Index i = 0; i < D.matrix.rows(); ++i) {
    if (i != 1) EXPECT_EQ(D.matrix(i, 0), 0.0);
  }
  EXPECT_EQ((D.matrix + D.matrix.transpose()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(DerivativeMatrix, FiniteDifferenceOracle) {
  const auto b = Basis::make(1, 40);
  const auto D = derivative_matrix(b, 0);
  const double eps = 1e-4;
  for (int n : {0, 5, 17, 30}) {
    const auto dv = D.apply(SobolevVector::unit(b, MultiIndex({n}), 1.0));
    for (double x = -6.0; x <= 6.0; x += 0.37) {
      const double fd = (h(n, x - 2 * eps) - 8 * h(n, x - eps) + 8 * h(n, x + eps) - h(n, x + 2 * eps)) / (12 * eps);
      EXPECT_NEAR(reconstruct(dv, std::span(&x, 1)), fd, 1e-6) << n << " " << x;
    }
  }
}

TEST(MultiplicationMatrix, RecurrenceAndPointwiseOracle) {
  const auto b = Basis::make(1, 40);
  const auto M = multiplication_matrix(b, 0);
  EXPECT_EQ(M.band, 1);
  EXPECT_NEAR(M.matrix(1, 0), std::sqrt(0.5), 1e-15);
  EXPECT_EQ((M.matrix - M.matrix.transpose()).cwiseAbs().maxCoeff(), 0.0);
  // psi2 needs far fewer than N modes, so the truncation at N is invisible
  const auto psi = expand1(catalog::psi2, b);
  const auto xv = M.apply(psi);
  for (double x = -5.0; x <= 5.0; x += 0.25) {
    EXPECT_NEAR(reconstruct(xv, std::span(&x, 1)), x * catalog::psi2(x), 1e-6);
  }
}

TEST(TranslationMatrix, IdentityAtZero) {
  const auto b = Basis::make(2, 6);
  const auto T = translation_matrix(std::vector<double>{0.0, 0.0}, b);
  EXPECT_LT((T.matrix - Eigen::MatrixXd::Identity(T.matrix.rows(), T.matrix.cols())).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(TranslationMatrix, ExpMethodIsOrthogonal) {
  const auto b = Basis::make(1, 40);
  for (double x : {0.5, -1.3, 2.0, 4.0}) {
    const auto T = translation_matrix(std::vector<double>{x}, b).matrix;
    const Eigen::MatrixXd E = T.transpose() * T - Eigen::MatrixXd::Identity(T.rows(), T.cols());
    EXPECT_LE(E.cwiseAbs().maxCoeff(), 1e-10) << x;
  }
}

TEST(TranslationMatrix, PointwiseShift) {
  const auto b = Basis::make(1, 60);
  const auto psi = expand1(catalog::psi1, b);
  for (double x : {-1.0, -0.4, 0.7, 1.0}) {
    const auto moved = translation_matrix(std::vector<double>{x}, b).apply(psi);
    for (double y = -4.0; y <= 4.0; y += 0.5) {
      EXPECT_NEAR(reconstruct(moved, std::span(&y, 1)), catalog::psi1(y - x), 1e-5) << x << " " << y;
    }
  }
}

TEST(TranslationMatrix, QuadratureAgreesInInterior) {
  const auto b = Basis::make(1, 40);
  const std::vector<double> x{0.8};
  const auto A = translation_matrix(x, b, TranslationMethod::exponential).matrix;
  const auto B = translation_matrix(x, b, TranslationMethod::quadrature).matrix;
  EXPECT_LE((A - B).topLeftCorner(31, 31).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Translator, MatchesMatrix) {
  const auto b = Basis::make(1, 30);
  const Translator t(b);
  const auto psi = expand1(catalog::psi2, b);
  for (double x : {-2.0, 0.3, 1.7}) {
    const auto a = t.apply(x, psi);
    const auto c = translation_matrix(std::vector<double>{x}, b).apply(psi);
    EXPECT_LE((a.coeffs() - c.coeffs()).cwiseAbs().maxCoeff(), 1e-11);
  }
  const auto b2 = Basis::make(2, 8);
  const Translator t2(b2);
  const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(b2->size()), -1, 1);
  const std::vector<double> x2{0.4, -0.9};
  EXPECT_LE((t2.apply(x2, v) - translation_matrix(x2, b2).matrix * v).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(FourierDiagonal, Entries) {
  const auto b = Basis::make(1, 8);
  const auto F = fourier_diagonal(b);
  EXPECT_DOUBLE_EQ(F.re[0], 1.0);
  EXPECT_DOUBLE_EQ(F.re[2], -1.0);
  for (Eigen::Index i = 0; i < F.re.size(); ++i) EXPECT_NEAR(std::hypot(F.re[i], F.im[i]), 1.0, 1e-15);
}

TEST(FourierDiagonal, QuadratureFourierIntegral) {
  // (F h_3)(w) = (2 pi)^{-1/2} int h_3(x) e^{-i w x} dx = (-i)^3 h_3(w)
  const auto b = Basis::make(1, 8);
  const auto F = fourier_diagonal(b);
  for (double w : {-1.5, 0.0, 0.6, 2.2}) {
    std::complex<double> s = 0.0;
    const double hstep = 1e-3;
    for (double x = -12.0; x <= 12.0; x += hstep) s += h(3, x) * std::exp(std::complex<double>(0.0, -w * x));
    s *= hstep / std::sqrt(2.0 * std::numbers::pi);
    const std::complex<double> rule = std::complex<double>(F.re[3], F.im[3]) * h(3, w);
    EXPECT_NEAR(std::abs(s - rule), 0.0, 1e-6) << w;
  }
}

TEST(OperatorNorm, Identity) {
  const auto b = Basis::make(1, 20);
  OperatorMatrix I{b, Eigen::MatrixXd::Identity(21, 21), 0, 0.0};
  for (double p : {-1.0, 0.0, 2.0}) EXPECT_NEAR(operator_norm_estimate(I, p, p), 1.0, 1e-12);
}

TEST(OperatorNorm, DerivativeHalfStep) {
  // Column n of D has ||d h_n||_0^2 = (2n+1)/2 and weight (2n+1)^{1/2} at
  // p_in = 1/2, giving per-column ratios 1/sqrt(2). The neighbouring columns
  // are not orthogonal, so the true norm is larger: D^T D is tridiagonal
  // with off-diagonals -sqrt(n(n-1))/2 and the norm tends to 1 as N grows.
  const auto b = Basis::make(1, 200);
  const auto D = derivative_matrix(b, 0);
  const auto w = shell_weights(*b, 0.5);
  double col = 0.0;
  for (Eigen::Index n = 0; n < D.matrix.cols() - 1; ++n) col = std::max(col, D.matrix.col(n).norm() / w[n]);
  EXPECT_NEAR(col, 1.0 / std::sqrt(2.0), 1e-12);
  const double op = operator_norm_estimate(D, 0.5, 0.0);
  EXPECT_GT(op, col);
  EXPECT_LE(op, 1.0 + 1e-12);
}

TEST(OperatorNorm, TranslationGrowsPolynomially) {
  const auto b = Basis::make(1, 40);
  std::vector<double> lx, ly;
  for (double x = 1.0; x <= 8.0; x += 1.0) {
    lx.push_back(std::log(x));
    ly.push_back(std::log(operator_norm_estimate(translation_matrix(std::vector<double>{x}, b), 1.0, 1.0)));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i] / lx.size(), my += ly[i] / ly.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
  EXPECT_LE(sxy / sxx, 4.5);
  EXPECT_GT(sxy / sxx, 0.0);
}

TEST(TauPolyBound, IsometryAtZero) {
  const auto b = Basis::make(1, 30);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i <= 8; ++i) pts.push_back({i * 1.0});
  const auto fit = tau_poly_bound(0.0, pts, b);
  EXPECT_EQ(fit.envelope.degree(), envelope_degree(0.0));
  for (double r : {0.0, 2.0, 5.0}) EXPECT_NEAR(fit.envelope(r), 1.0, 1e-6);
}

TEST(TauPolyBound, DegreeFourEnvelopeWithHoldout) {
  const auto b = Basis::make(1, 40);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i <= 32; ++i) pts.push_back({8.0 * i / 32});
  const auto fit = tau_poly_bound(1.0, pts, b);
  EXPECT_EQ(fit.envelope.degree(), 4);
  EXPECT_LE(fit.max_violation, 0.0);
  for (double c : fit.envelope.coeffs) EXPECT_GE(c, 0.0);
  const auto psi = expand1(catalog::psi2, b, 1.0);
  const Translator t(b);
  for (double x = 0.11; x < 8.0; x += 0.53) {
    EXPECT_LE(sobolev_norm(t.apply(x, psi), 1.0), fit.envelope(x) * sobolev_norm(psi, 1.0)) << x;
    EXPECT_LE(translation_norm(std::vector<double>{-x}, t, 1.0), fit.envelope(x)) << x;
  }
}

TEST(CoefficientsCsv, RoundTrip) {
  const auto b = Basis::make(2, 5);
  const auto v = SobolevVector(b, Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(b->size()), -1.0, 2.0), -0.75);
  std::stringstream ss;
  write_coefficients_csv(ss, v);
  const auto w = read_coefficients_csv(ss);
  EXPECT_EQ(w.basis().spec(), b->spec());
  EXPECT_EQ(w.tag(), -0.75);
  EXPECT_EQ((w.coeffs() - v.coeffs()).cwiseAbs().maxCoeff(), 0.0);
}
