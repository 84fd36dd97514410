#include "hslift/sobolev_vector.hpp"

#include "hslift/errors.hpp"

namespace hslift {

SobolevVector::SobolevVector(BasisPtr basis, Eigen::VectorXd coeffs, double tag)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)), tag_(tag) {
  if (!basis_) throw ConfigError("SobolevVector requires a basis");
  if (static_cast<std::size_t>(coeffs_.size()) != basis_->size()) {
    throw TagMismatch("coefficient count " + std::to_string(coeffs_.size()) +
                      " does not match basis size " + std::to_string(basis_->size()));
  }
}

SobolevVector SobolevVector::zero(BasisPtr basis, double tag) {
  const auto n = static_cast<Eigen::Index>(basis->size());
  return {std::move(basis), Eigen::VectorXd::Zero(n), tag};
}

SobolevVector SobolevVector::unit(BasisPtr basis, const MultiIndex& n, double tag) {
  auto rank = basis->rank_of(n);
  if (!rank) throw ConfigError("multi-index outside the truncated basis");
  auto v = zero(std::move(basis), tag);
  v.coeffs_[static_cast<Eigen::Index>(*rank)] = 1.0;
  return v;
}

void SobolevVector::require_same_basis(const SobolevVector& other) const {
  if (!(basis_->spec() == other.basis_->spec())) {
    throw TagMismatch("vectors live on different truncated bases");
  }
}

SobolevVector& SobolevVector::operator+=(const SobolevVector& other) {
  require_same_basis(other);
  coeffs_ += other.coeffs_;
  tag_ = std::min(tag_, other.tag_);
  return *this;
}

SobolevVector& SobolevVector::operator-=(const SobolevVector& other) {
  require_same_basis(other);
  coeffs_ -= other.coeffs_;
  tag_ = std::min(tag_, other.tag_);
  return *this;
}

SobolevVector& SobolevVector::operator*=(double s) {
  coeffs_ *= s;
  return *this;
}

}  // namespace hslift
