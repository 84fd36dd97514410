#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hslift/hermite.hpp"
#include "hslift/sobolev.hpp"

namespace hslift {

/// Real polynomial on R^d stored as exponent -> coefficient.
class Polynomial {
 public:
  explicit Polynomial(int dim = 1) : dim_(dim) {}

  static Polynomial constant(int dim, double c);
  static Polynomial monomial(int dim, std::vector<int> exponents, double c = 1.0);
  /// One-dimensional polynomial from ascending coefficients c_0 + c_1 x + ...
  static Polynomial univariate(std::vector<double> ascending);

  int dim() const noexcept { return dim_; }
  int degree() const;
  const std::map<std::vector<int>, double>& terms() const noexcept { return terms_; }
  double coefficient(const std::vector<int>& exponents) const;
  double operator()(std::span<const double> x) const;

  Polynomial& add(const std::vector<int>& exponents, double c);
  friend Polynomial operator+(Polynomial a, const Polynomial& b);
  friend Polynomial operator*(double s, Polynomial a);

  std::string to_string() const;

 private:
  int dim_;
  std::map<std::vector<int>, double> terms_;
};

/// <x^k, h_n> for n = 0..max_n in one dimension, from
/// int h_n = sqrt(2 pi) (-i)^n h_n(0) and the x h_n ladder.
Eigen::VectorXd monomial_coeffs_1d(int k, int max_n);

/// Regularity threshold: x^k lies in S_{-p}(R^d) for p > (d + 2|k|)/4.
double monomial_threshold(int dim, int total_degree);

/// Coefficient vector of the tempered distribution x^k (tensor product).
SobolevVector monomial_distribution(const BasisPtr& basis, const std::vector<int>& exponents,
                                    double tag);
SobolevVector polynomial_distribution(const BasisPtr& basis, const Polynomial& poly, double tag);

/// A coefficient sigma_ij or b_i of the equation, as an element of S_{-p}.
struct DistributionCoeff {
  SobolevVector rep;
  std::string label;
  std::optional<Polynomial> poly;
  ScalarField closed_form;
};

/// sigma = (sigma_ij) and b = (b_i), all stored at the same tag -p.
struct CoeffField {
  int dim = 1;
  double tag = 0.0;
  std::vector<DistributionCoeff> sigma;  // row-major d x d
  std::vector<DistributionCoeff> drift;  // d

  const DistributionCoeff& sigma_at(int i, int j) const {
    return sigma[static_cast<std::size_t>(i * dim + j)];
  }
  const BasisPtr& basis() const { return drift.front().rep.basis_ptr(); }

  /// Field whose coefficients are the given polynomial functions.
  static CoeffField polynomial(const BasisPtr& basis, const std::vector<Polynomial>& sigma,
                               const std::vector<Polynomial>& drift, double tag);
};

/// sigma = identity, b_i = -x_i (Ornstein-Uhlenbeck).
CoeffField ou_field(const BasisPtr& basis, double tag);
/// d = 1, sigma = 1, b = -x^3.
CoeffField quartic_field(const BasisPtr& basis, double tag);
/// sigma = 0, b = 0.
CoeffField zero_field(const BasisPtr& basis, double tag);

/// <sigma, psi>, <b, psi> as a d x d matrix and a d-vector.
Eigen::MatrixXd sigma_pairing(const CoeffField& field, const SobolevVector& psi);
Eigen::VectorXd drift_pairing(const CoeffField& field, const SobolevVector& psi);

/// Evaluates x -> sigma_bar(x; psi) and x -> b_bar(x; psi) for a fixed psi.
///
/// In one dimension each pairing <c, tau_x psi> is a trigonometric sum over
/// the spectrum of the truncated generator, so an evaluation is O(N).
class FieldEvaluator {
 public:
  FieldEvaluator(const CoeffField& field, const SobolevVector& psi);

  int dim() const noexcept { return dim_; }
  Eigen::MatrixXd sigma_bar(std::span<const double> x) const;
  Eigen::VectorXd b_bar(std::span<const double> x) const;
  /// Allocation-free variants writing into `out` (d*d row-major / d).
  void sigma_bar(std::span<const double> x, std::span<double> out) const;
  void b_bar(std::span<const double> x, std::span<double> out) const;

 private:
  double spectral_value(const Eigen::VectorXcd& alpha, double x) const;

  int dim_;
  std::shared_ptr<const Translator> translator_;
  SobolevVector psi_;
  std::vector<SobolevVector> sigma_;
  std::vector<SobolevVector> drift_;
  std::vector<Eigen::VectorXcd> sigma_alpha_;
  std::vector<Eigen::VectorXcd> drift_alpha_;
};

/// sigma_bar(x; psi) = (<sigma_ij, tau_x psi>). Throws TagMismatch when psi's
/// tag is below the field's dual index.
Eigen::MatrixXd sigma_bar(std::span<const double> x, const SobolevVector& psi, const CoeffField& field);
/// b_bar(x; psi) = (<b_i, tau_x psi>).
Eigen::VectorXd b_bar(std::span<const double> x, const SobolevVector& psi, const CoeffField& field);

/// <t^k, psi>. Throws TagMismatch if psi's tag does not exceed the
/// threshold of the monomial.
double moment(const SobolevVector& psi, const std::vector<int>& exponents);
double moment(const SobolevVector& psi, int k);

/// One linear condition sum_j coef_j m_{k_j} = value on the moments of psi.
struct MomentCondition {
  std::vector<std::pair<std::vector<int>, double>> terms;
  double value = 0.0;
  std::string source;

  /// Single-term conditions read as "m_k = value / coef".
  std::optional<std::pair<std::vector<int>, double>> as_moment_value() const;
};

/// Membership spec for the set C: int sigma(y+x) psi(y) dy = f(x) and
/// int b(y+x) psi(y) dy = g(x) for all x.
struct SetCSpec {
  int dim = 1;
  std::vector<Polynomial> sigma;  // d x d
  std::vector<Polynomial> drift;  // d
  std::vector<Polynomial> f;      // d x d
  std::vector<Polynomial> g;      // d
  double tol = 1e-8;
  std::vector<MomentCondition> conditions;

  /// Derives the moment conditions by binomial expansion.
  static SetCSpec make(std::vector<Polynomial> sigma, std::vector<Polynomial> drift,
                       std::vector<Polynomial> f, std::vector<Polynomial> g, double tol = 1e-8);
  /// The highest moment order entering any condition.
  int max_moment_order() const;
};

/// sigma = f = 1, b = g = -x: conditions m0 = 1, m1 = 0.
SetCSpec ou_set_c(double tol = 1e-8);
/// sigma = f = 1, b = g = -x^3: conditions m0 = 1, m1 = m2 = m3 = 0.
SetCSpec quartic_set_c(double tol = 1e-8);

struct SetCVerdict {
  bool member = false;
  std::vector<std::string> labels;
  std::vector<double> residuals;
  double max_residual = 0.0;
};

/// Polynomial mode: residual of each derived moment condition, scaled by the
/// largest coefficient of its equation.
SetCVerdict set_c_check(const SobolevVector& psi, const SetCSpec& spec);

/// Direct mode: max over the grid of |int sigma(y+x) psi(y) dy - f(x)| and the
/// drift analogue, with psi reconstructed from its coefficients. d = 1 only.
SetCVerdict set_c_check_direct(const SobolevVector& psi, const CoeffField& field,
                               const std::vector<ScalarField>& f, const std::vector<ScalarField>& g,
                               const std::vector<double>& grid, double tol);

struct LipschitzReport {
  double sigma_estimate = 0.0;
  double drift_estimate = 0.0;
  /// d * C * ||c||_{-p} * ||psi||_{p+1/2} with C = ||d_i||_{p+1/2 -> p} * sup_{|x|<=2n} P(|x|).
  double sigma_bound = 0.0;
  double drift_bound = 0.0;
  std::size_t samples = 0;
};

/// Max pairwise difference quotient of sigma_bar and b_bar over sample
/// points in the ball of radius `radius` (a uniform grid when d = 1).
LipschitzReport lipschitz_probe(const SobolevVector& psi, const CoeffField& field, double radius,
                                std::size_t samples, std::uint64_t seed = 0);

}  // namespace hslift
