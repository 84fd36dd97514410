#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hslift/basis.hpp"
#include "hslift/sobolev_vector.hpp"

namespace hslift {

/// (2|n|+d)^p for every basis element.
Eigen::VectorXd shell_weights(const Basis& basis, double p);

/// ||v||_p^2 = sum_n (2|n|+d)^{2p} v_n^2.
double sobolev_norm(const SobolevVector& v, double p);

/// Dual pairing <u, v> = sum_n u_n v_n.
///
/// Requires a shared basis and compatible tags (u in S_{-q}, v in S_p with
/// q <= p, i.e. u.tag() + v.tag() >= 0); throws TagMismatch otherwise.
double pairing(const SobolevVector& u, const SobolevVector& v);

/// Square matrix acting on the coefficient lattice of one basis.
struct OperatorMatrix {
  BasisPtr basis;
  Eigen::MatrixXd matrix;
  /// Largest |n|-shell offset coupled by a single entry, or -1 for dense.
  int band = -1;
  /// Regularity lost when applied: S_p -> S_{p - order}.
  double order = 0.0;

  SobolevVector apply(const SobolevVector& v) const;
  OperatorMatrix then(const OperatorMatrix& next) const;  // next * this
};

/// Matrix of d/dx_i: d_i h_n = sqrt(n_i/2) h_{n-e_i} - sqrt((n_i+1)/2) h_{n+e_i}.
/// Terms leaving the truncated basis are dropped; the result is skew-symmetric.
OperatorMatrix derivative_matrix(const BasisPtr& basis, int axis);

/// Matrix of multiplication by x_i: x_i h_n = sqrt((n_i+1)/2) h_{n+e_i} + sqrt(n_i/2) h_{n-e_i}.
OperatorMatrix multiplication_matrix(const BasisPtr& basis, int axis);

enum class TranslationMethod { exponential, quadrature };

/// Matrix of tau_x, (tau_x phi)(y) = phi(y - x).
///
/// exponential: exp(-sum_i x_i D_i) of the truncated skew-symmetric
/// generators, orthogonal to rounding. quadrature: entries
/// <tau_x h_n, h_m> by a Gauss-Hermite rule centred at x/2, exact up to
/// rounding for the truncated block.
OperatorMatrix translation_matrix(std::span<const double> x, const BasisPtr& basis,
                                  TranslationMethod method = TranslationMethod::exponential);

/// Repeated application of the exponential-method translation.
///
/// In one dimension i*D is Hermitian, so it is diagonalized once and every
/// tau_x costs a dense complex matrix-vector pair. In higher dimensions the
/// generator direction changes with x and the matrix exponential is formed
/// per call.
class Translator {
 public:
  explicit Translator(BasisPtr basis);

  const BasisPtr& basis() const noexcept { return basis_; }
  Eigen::VectorXd apply(std::span<const double> x, const Eigen::VectorXd& v) const;
  SobolevVector apply(std::span<const double> x, const SobolevVector& v) const;
  SobolevVector apply(double x, const SobolevVector& v) const { return apply(std::span(&x, 1), v); }
  Eigen::MatrixXd matrix(std::span<const double> x) const;

  /// Spectral data of i*D in one dimension (empty otherwise).
  const Eigen::MatrixXcd& modes() const noexcept { return modes_; }
  const Eigen::VectorXd& frequencies() const noexcept { return freqs_; }

 private:
  BasisPtr basis_;
  std::vector<Eigen::MatrixXd> generators_;
  Eigen::MatrixXcd modes_;
  Eigen::VectorXd freqs_;
};

/// Complex coefficient vector stored as paired real and imaginary parts.
struct ComplexCoefficients {
  BasisPtr basis;
  Eigen::VectorXd re;
  Eigen::VectorXd im;
  double tag = 0.0;
};

double sobolev_norm(const ComplexCoefficients& v, double p);

/// Diagonal of the Fourier transform on the Hermite basis: h_n -> (-i)^{|n|} h_n.
struct FourierDiagonal {
  BasisPtr basis;
  Eigen::VectorXd re;
  Eigen::VectorXd im;

  ComplexCoefficients apply(const SobolevVector& v) const;
};

FourierDiagonal fourier_diagonal(const BasisPtr& basis);

/// Largest singular value of W_{p_out} A W_{p_in}^{-1}; bounds
/// ||A v||_{p_out} / ||v||_{p_in} over the truncated space.
double operator_norm_estimate(const OperatorMatrix& op, double p_in, double p_out);

/// Polynomial r -> sum_k c_k r^k with non-negative coefficients, hence
/// non-decreasing on r >= 0.
struct PolyEnvelope {
  std::vector<double> coeffs;

  double operator()(double r) const;
  int degree() const noexcept { return static_cast<int>(coeffs.size()) - 1; }
  /// sup over |x| <= radius, attained at the radius.
  double sup_on_ball(double radius) const { return (*this)(radius); }
};

struct EnvelopeFit {
  PolyEnvelope envelope;
  std::vector<double> radii;
  std::vector<double> values;
  double inflation = 1.0;
  /// max_i values[i] - envelope(radii[i]); <= 0 for a valid envelope.
  double max_violation = 0.0;
};

/// 2(floor|p| + 1), the degree of the translation bound on S_p.
int envelope_degree(double p);

/// ||tau_x||_{S_p -> S_p} of the truncated exponential-method matrix.
double translation_norm(std::span<const double> x, const Translator& translator, double p);

/// Non-negative least-squares polynomial of the given degree, inflated so
/// that envelope(r_i) >= max(values[i], values[i+1]) along the sorted radii.
/// For non-decreasing data this also covers every r between samples.
EnvelopeFit fit_envelope(std::vector<double> radii, std::vector<double> values, int degree);

/// Measure ||tau_x||_{S_p -> S_p} at the sample points and fit the envelope
/// of degree envelope_degree(p) in |x|.
EnvelopeFit tau_poly_bound(double p, const std::vector<std::vector<double>>& points,
                           const BasisPtr& basis);

/// CSV with a one-line JSON header (d, N, p) followed by
/// "rank,n_1..n_d,coefficient" rows.
void write_coefficients_csv(std::ostream& os, const SobolevVector& v,
                            const nlohmann::json& extra = nlohmann::json::object());
SobolevVector read_coefficients_csv(std::istream& is);

}  // namespace hslift
