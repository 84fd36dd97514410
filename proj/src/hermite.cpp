#include "hslift/hermite.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hslift/errors.hpp"

namespace hslift {

namespace {

constexpr double kRescaleAbove = 1e200;
const double kLogRescale = std::log(kRescaleAbove);

std::string format_index(const MultiIndex& n) {
  std::string s = "(";
  for (std::size_t i = 0; i < n.dim(); ++i) {
    if (i) s += ",";
    s += std::to_string(n[i]);
  }
  return s + ")";
}

// Per-axis tables of h_0..h_N at each one-dimensional node.
std::vector<std::vector<double>> node_tables(const Quadrature& rule, int max_n) {
  std::vector<std::vector<double>> tables;
  tables.reserve(rule.size());
  for (double x : rule.nodes) tables.push_back(hermite_functions(max_n, x));
  return tables;
}

}  // namespace

std::vector<double> hermite_functions(int max_n, double x) {
  if (!std::isfinite(x)) throw NumericalError("hermite_functions: non-finite argument");
  if (max_n < 0) return {};
  std::vector<double> out(static_cast<std::size_t>(max_n) + 1);
  std::vector<double> log_scale(out.size(), 0.0);

  // a_n carries h_n up to the common factor pi^{-1/4} e^{-x^2/2} e^{L}.
  double prev = 0.0;
  double curr = 1.0;
  double L = 0.0;
  out[0] = curr;
  for (int n = 0; n < max_n; ++n) {
    const double next = std::sqrt(2.0 / (n + 1)) * x * curr - std::sqrt(double(n) / (n + 1)) * prev;
    prev = curr;
    curr = next;
    if (std::abs(curr) > kRescaleAbove) {
      curr /= kRescaleAbove;
      prev /= kRescaleAbove;
      L += kLogRescale;
    }
    out[static_cast<std::size_t>(n) + 1] = curr;
    log_scale[static_cast<std::size_t>(n) + 1] = L;
  }
  const double base = -0.5 * x * x - 0.25 * std::log(std::numbers::pi);
  for (std::size_t n = 0; n < out.size(); ++n) {
    out[n] = out[n] == 0.0 ? 0.0 : out[n] * std::exp(base + log_scale[n]);
  }
  return out;
}

double hermite_eval(const MultiIndex& n, std::span<const double> x) {
  if (x.size() != n.dim()) throw ConfigError("hermite_eval: point and index dimensions differ");
  double value = 1.0;
  for (std::size_t i = 0; i < n.dim(); ++i) {
    value *= hermite_functions(n[i], x[i]).back();
  }
  return value;
}

Eigen::VectorXd hermite_basis_values(const Basis& basis, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(basis.dim())) {
    throw ConfigError("hermite_basis_values: point dimension does not match basis");
  }
  std::vector<std::vector<double>> axis;
  axis.reserve(x.size());
  for (double xi : x) axis.push_back(hermite_functions(basis.max_degree(), xi));
  Eigen::VectorXd out(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t r = 0; r < basis.size(); ++r) {
    const auto& n = basis.index(r);
    double v = 1.0;
    for (std::size_t i = 0; i < n.dim(); ++i) v *= axis[i][static_cast<std::size_t>(n[i])];
    out[static_cast<Eigen::Index>(r)] = v;
  }
  return out;
}

Quadrature gauss_hermite(int m) {
  if (m < 1) throw ConfigError("gauss_hermite: order must be >= 1");
  const auto size = static_cast<Eigen::Index>(m);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(size);
  Eigen::VectorXd sub(std::max<Eigen::Index>(size - 1, 0));
  for (Eigen::Index k = 1; k < size; ++k) sub[k - 1] = std::sqrt(k / 2.0);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("gauss_hermite: tridiagonal eigenvalue solve did not converge");
  }

  Quadrature q;
  q.nodes.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + m);
  std::sort(q.nodes.begin(), q.nodes.end());

  // Newton polish on h_m, using h_m' = sqrt(2m) h_{m-1} - x h_m.
  for (double& x : q.nodes) {
    for (int it = 0; it < 3; ++it) {
      const auto h = hermite_functions(m, x);
      const double hm = h[static_cast<std::size_t>(m)];
      const double dh = std::sqrt(2.0 * m) * h[static_cast<std::size_t>(m) - 1] - x * hm;
      if (dh == 0.0 || !std::isfinite(dh)) break;
      const double step = hm / dh;
      x -= step;
      if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(x))) break;
    }
  }
  for (int i = 0; i < m / 2; ++i) {
    const double a = 0.5 * (q.nodes[static_cast<std::size_t>(m - 1 - i)] - q.nodes[static_cast<std::size_t>(i)]);
    q.nodes[static_cast<std::size_t>(i)] = -a;
    q.nodes[static_cast<std::size_t>(m - 1 - i)] = a;
  }
  if (m % 2 == 1) q.nodes[static_cast<std::size_t>(m / 2)] = 0.0;

  // Christoffel numbers in Hermite-function form: w_i e^{x_i^2} = 1 / sum_{k<m} h_k(x_i)^2.
  q.weights.resize(q.nodes.size());
  q.scaled_weights.resize(q.nodes.size());
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    const auto h = hermite_functions(m - 1, q.nodes[i]);
    double s = 0.0;
    for (double v : h) s += v * v;
    if (!(s > 0.0) || !std::isfinite(s)) throw NumericalError("gauss_hermite: degenerate node");
    q.scaled_weights[i] = 1.0 / s;
    q.weights[i] = q.scaled_weights[i] * std::exp(-q.nodes[i] * q.nodes[i]);
  }
  return q;
}

TensorQuadrature tensorize(const Quadrature& rule, int dim) {
  if (dim < 1) throw ConfigError("tensorize: dimension must be >= 1");
  const std::size_t m = rule.size();
  std::size_t total = 1;
  for (int i = 0; i < dim; ++i) total *= m;
  TensorQuadrature t;
  t.dim = dim;
  t.points.resize(total * static_cast<std::size_t>(dim));
  t.weights.resize(total);
  t.scaled_weights.resize(total);
  std::vector<std::size_t> idx(static_cast<std::size_t>(dim), 0);
  for (std::size_t k = 0; k < total; ++k) {
    double w = 1.0, sw = 1.0;
    for (int a = 0; a < dim; ++a) {
      const auto j = idx[static_cast<std::size_t>(a)];
      t.points[k * static_cast<std::size_t>(dim) + static_cast<std::size_t>(a)] = rule.nodes[j];
      w *= rule.weights[j];
      sw *= rule.scaled_weights[j];
    }
    t.weights[k] = w;
    t.scaled_weights[k] = sw;
    for (int a = dim - 1; a >= 0; --a) {
      if (++idx[static_cast<std::size_t>(a)] < m) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
  }
  return t;
}

int default_quadrature_order(const Basis& basis) { return 2 * basis.max_degree() + 16; }

SobolevVector expand_function(const ScalarField& f, const BasisPtr& basis, const Quadrature& rule,
                              double tag) {
  const int dim = basis->dim();
  const auto tables = node_tables(rule, basis->max_degree());
  const std::size_t m = rule.size();
  std::size_t total = 1;
  for (int i = 0; i < dim; ++i) total *= m;

  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis->size()));
  std::vector<std::size_t> idx(static_cast<std::size_t>(dim), 0);
  std::vector<double> point(static_cast<std::size_t>(dim));
  for (std::size_t k = 0; k < total; ++k) {
    double sw = 1.0;
    for (int a = 0; a < dim; ++a) {
      const auto j = idx[static_cast<std::size_t>(a)];
      point[static_cast<std::size_t>(a)] = rule.nodes[j];
      sw *= rule.scaled_weights[j];
    }
    const double fw = f(point) * sw;
    if (fw != 0.0) {
      for (std::size_t r = 0; r < basis->size(); ++r) {
        const auto& n = basis->index(r);
        double h = 1.0;
        for (int a = 0; a < dim; ++a) {
          h *= tables[idx[static_cast<std::size_t>(a)]][static_cast<std::size_t>(n[static_cast<std::size_t>(a)])];
        }
        coeffs[static_cast<Eigen::Index>(r)] += fw * h;
      }
    }
    for (int a = dim - 1; a >= 0; --a) {
      if (++idx[static_cast<std::size_t>(a)] < m) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
  }
  for (std::size_t r = 0; r < basis->size(); ++r) {
    if (!std::isfinite(coeffs[static_cast<Eigen::Index>(r)])) {
      throw NumericalError("expand_function: non-finite coefficient at index " +
                           format_index(basis->index(r)));
    }
  }
  return {basis, std::move(coeffs), tag};
}

SobolevVector expand_function(const ScalarField& f, const BasisPtr& basis, double tag) {
  return expand_function(f, basis, gauss_hermite(default_quadrature_order(*basis)), tag);
}

SobolevVector delta_coeffs(std::span<const double> x, const BasisPtr& basis, double tag) {
  return {basis, hermite_basis_values(*basis, x), tag};
}

double reconstruct(const SobolevVector& v, std::span<const double> x) {
  return hermite_basis_values(v.basis(), x).dot(v.coeffs());
}

}  // namespace hslift
