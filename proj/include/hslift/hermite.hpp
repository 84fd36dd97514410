#pragma once

#include <functional>
#include <span>
#include <vector>

#include "hslift/basis.hpp"
#include "hslift/sobolev_vector.hpp"

namespace hslift {

/// Scalar field on R^d evaluated at a point given as a span of length d.
using ScalarField = std::function<double(std::span<const double>)>;

/// Values h_0(x), ..., h_{max_n}(x) of the normalized one-dimensional
/// Hermite functions h_n(x) = (2^n n! sqrt(pi))^{-1/2} H_n(x) e^{-x^2/2}.
///
/// Uses the upward recurrence on the normalized functions with an explicit
/// exponent so neither the Gaussian factor nor the polynomial overflows;
/// values that are genuinely below the double range come out as 0.
/// Throws NumericalError for non-finite x.
std::vector<double> hermite_functions(int max_n, double x);

/// h_n(x) = prod_i h_{n_i}(x_i).
double hermite_eval(const MultiIndex& n, std::span<const double> x);

/// Values of every basis function at x, in basis order.
Eigen::VectorXd hermite_basis_values(const Basis& basis, std::span<const double> x);

/// Gauss-Hermite rule for the weight e^{-x^2}.
struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
  /// weights[i] * exp(nodes[i]^2); integrates plain functions,
  /// sum_i scaled_weights[i] * f(x_i) ~ int f(x) dx.
  std::vector<double> scaled_weights;

  std::size_t size() const noexcept { return nodes.size(); }
};

/// m-point Gauss-Hermite rule (Golub-Welsch, Newton-polished nodes).
/// Exact for polynomial * e^{-x^2} up to degree 2m-1.
Quadrature gauss_hermite(int m);

/// Tensor product of a one-dimensional rule on R^d, points stored row-major.
struct TensorQuadrature {
  int dim = 1;
  std::vector<double> points;
  std::vector<double> weights;
  std::vector<double> scaled_weights;

  std::size_t size() const noexcept { return weights.size(); }
  std::span<const double> point(std::size_t i) const {
    return {points.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
};

TensorQuadrature tensorize(const Quadrature& rule, int dim);

/// Default rule order for a basis of max degree N: 2N + 16 nodes per axis.
int default_quadrature_order(const Basis& basis);

/// Coefficients y_n = int f h_n computed with the scaled weights of `rule`.
/// Throws NumericalError naming the first non-finite coefficient.
SobolevVector expand_function(const ScalarField& f, const BasisPtr& basis,
                              const Quadrature& rule, double tag = 0.0);

/// Same with the default rule order.
SobolevVector expand_function(const ScalarField& f, const BasisPtr& basis, double tag = 0.0);

/// Coefficients <delta_x, h_n> = h_n(x) of the point evaluation at x.
SobolevVector delta_coeffs(std::span<const double> x, const BasisPtr& basis, double tag = -1.0);

/// Evaluate sum_n v_n h_n at x.
double reconstruct(const SobolevVector& v, std::span<const double> x);

}  // namespace hslift
