#pragma once

#include <Eigen/Dense>

#include "hslift/basis.hpp"

namespace hslift {

/// Truncated Hermite coefficient vector of an element of S_p(R^d).
///
/// The regularity tag is metadata: it records the space the vector is
/// meant to live in, while norms at any index are computed on demand.
class SobolevVector {
 public:
  SobolevVector(BasisPtr basis, Eigen::VectorXd coeffs, double tag);

  /// Zero vector on `basis`.
  static SobolevVector zero(BasisPtr basis, double tag);
  /// The basis function h_n.
  static SobolevVector unit(BasisPtr basis, const MultiIndex& n, double tag);

  const Basis& basis() const noexcept { return *basis_; }
  const BasisPtr& basis_ptr() const noexcept { return basis_; }
  const Eigen::VectorXd& coeffs() const noexcept { return coeffs_; }
  double tag() const noexcept { return tag_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(coeffs_.size()); }
  double operator[](std::size_t i) const { return coeffs_[static_cast<Eigen::Index>(i)]; }

  SobolevVector with_tag(double tag) const { return {basis_, coeffs_, tag}; }
  bool all_finite() const { return coeffs_.allFinite(); }

  /// Throws TagMismatch unless both vectors share a basis spec.
  void require_same_basis(const SobolevVector& other) const;

  SobolevVector& operator+=(const SobolevVector& other);
  SobolevVector& operator-=(const SobolevVector& other);
  SobolevVector& operator*=(double s);

  friend SobolevVector operator+(SobolevVector a, const SobolevVector& b) { return a += b; }
  friend SobolevVector operator-(SobolevVector a, const SobolevVector& b) { return a -= b; }
  friend SobolevVector operator*(double s, SobolevVector v) { return v *= s; }
  friend SobolevVector operator*(SobolevVector v, double s) { return v *= s; }

 private:
  BasisPtr basis_;
  Eigen::VectorXd coeffs_;
  double tag_;
};

}  // namespace hslift
