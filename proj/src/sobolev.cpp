#include "hslift/sobolev.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <complex>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "hslift/errors.hpp"
#include "hslift/hermite.hpp"

namespace hslift {

Eigen::VectorXd shell_weights(const Basis& basis, double p) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t r = 0; r < basis.size(); ++r) {
    w[static_cast<Eigen::Index>(r)] = std::pow(basis.shell_weight(r), p);
  }
  return w;
}

double sobolev_norm(const SobolevVector& v, double p) {
  return shell_weights(v.basis(), p).cwiseProduct(v.coeffs()).norm();
}

double pairing(const SobolevVector& u, const SobolevVector& v) {
  u.require_same_basis(v);
  if (u.tag() + v.tag() < -1e-12) {
    throw TagMismatch("pairing: tags " + std::to_string(u.tag()) + " and " +
                      std::to_string(v.tag()) + " are not dual");
  }
  return u.coeffs().dot(v.coeffs());
}

SobolevVector OperatorMatrix::apply(const SobolevVector& v) const {
  if (!(v.basis().spec() == basis->spec())) {
    throw TagMismatch("operator and vector live on different bases");
  }
  return {basis, matrix * v.coeffs(), v.tag() - order};
}

OperatorMatrix OperatorMatrix::then(const OperatorMatrix& next) const {
  if (!(next.basis->spec() == basis->spec())) throw TagMismatch("operator bases differ");
  const int b = (band < 0 || next.band < 0) ? -1 : band + next.band;
  return {basis, next.matrix * matrix, b, order + next.order};
}

namespace {

void check_axis(const Basis& basis, int axis) {
  if (axis < 0 || axis >= basis.dim()) throw ConfigError("axis out of range");
}

// Fills the two-term recurrence: column n gets `down * sqrt(n_i/2)` at n-e_i
// and `up * sqrt((n_i+1)/2)` at n+e_i.
OperatorMatrix ladder_matrix(const BasisPtr& basis, int axis, double down, double up) {
  check_axis(*basis, axis);
  const auto size = static_cast<Eigen::Index>(basis->size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size, size);
  const auto a = static_cast<std::size_t>(axis);
  for (std::size_t c = 0; c < basis->size(); ++c) {
    const auto& n = basis->index(c);
    if (auto lower = n.shifted(a, -1)) {
      if (auto r = basis->rank_of(*lower)) {
        m(static_cast<Eigen::Index>(*r), static_cast<Eigen::Index>(c)) = down * std::sqrt(n[a] / 2.0);
      }
    }
    if (auto r = basis->rank_of(*n.shifted(a, +1))) {
      m(static_cast<Eigen::Index>(*r), static_cast<Eigen::Index>(c)) = up * std::sqrt((n[a] + 1) / 2.0);
    }
  }
  return {basis, std::move(m), 1, 0.5};
}

void check_point(const Basis& basis, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(basis.dim())) {
    throw ConfigError("translation point dimension does not match basis");
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw NumericalError("translation by a non-finite point");
  }
}

Eigen::MatrixXd generator(const std::vector<Eigen::MatrixXd>& derivs, std::span<const double> x) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(derivs[0].rows(), derivs[0].cols());
  for (std::size_t i = 0; i < derivs.size(); ++i) g -= x[i] * derivs[i];
  return g;
}

// int h_n(y - x) h_m(y) dy for one axis, table indexed [m][n].
Eigen::MatrixXd translation_integrals_1d(double x, int max_n) {
  const auto rule = gauss_hermite(max_n + 8);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(max_n + 1, max_n + 1);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double u = rule.nodes[i];
    const auto shifted = hermite_functions(max_n, u - 0.5 * x);
    const auto plain = hermite_functions(max_n, u + 0.5 * x);
    for (int m = 0; m <= max_n; ++m) {
      for (int n = 0; n <= max_n; ++n) {
        out(m, n) += rule.scaled_weights[i] * plain[static_cast<std::size_t>(m)] *
                     shifted[static_cast<std::size_t>(n)];
      }
    }
  }
  return out;
}

}  // namespace

OperatorMatrix derivative_matrix(const BasisPtr& basis, int axis) {
  return ladder_matrix(basis, axis, +1.0, -1.0);
}

OperatorMatrix multiplication_matrix(const BasisPtr& basis, int axis) {
  return ladder_matrix(basis, axis, +1.0, +1.0);
}

OperatorMatrix translation_matrix(std::span<const double> x, const BasisPtr& basis,
                                  TranslationMethod method) {
  check_point(*basis, x);
  const auto size = static_cast<Eigen::Index>(basis->size());
  if (method == TranslationMethod::exponential) {
    std::vector<Eigen::MatrixXd> derivs;
    for (int i = 0; i < basis->dim(); ++i) derivs.push_back(derivative_matrix(basis, i).matrix);
    Eigen::MatrixXd t = generator(derivs, x).exp();
    if (!t.allFinite()) throw NumericalError("translation_matrix: exponential is not finite");
    return {basis, std::move(t), -1, 0.0};
  }
  std::vector<Eigen::MatrixXd> axis;
  for (int i = 0; i < basis->dim(); ++i) {
    axis.push_back(translation_integrals_1d(x[static_cast<std::size_t>(i)], basis->max_degree()));
  }
  Eigen::MatrixXd t(size, size);
  for (std::size_t r = 0; r < basis->size(); ++r) {
    const auto& m = basis->index(r);
    for (std::size_t c = 0; c < basis->size(); ++c) {
      const auto& n = basis->index(c);
      double v = 1.0;
      for (std::size_t a = 0; a < m.dim(); ++a) v *= axis[a](m[a], n[a]);
      t(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return {basis, std::move(t), -1, 0.0};
}

Translator::Translator(BasisPtr basis) : basis_(std::move(basis)) {
  for (int i = 0; i < basis_->dim(); ++i) generators_.push_back(derivative_matrix(basis_, i).matrix);
  if (basis_->dim() == 1) {
    // i*D is Hermitian: D = -i U diag(lambda) U^H, so exp(-x D) = U diag(e^{i x lambda}) U^H.
    const Eigen::MatrixXcd h = std::complex<double>(0.0, 1.0) * generators_[0].cast<std::complex<double>>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
    if (solver.info() != Eigen::Success) {
      throw NumericalError("Translator: eigendecomposition of the generator failed");
    }
    modes_ = solver.eigenvectors();
    freqs_ = solver.eigenvalues();
  }
}

Eigen::VectorXd Translator::apply(std::span<const double> x, const Eigen::VectorXd& v) const {
  check_point(*basis_, x);
  if (basis_->dim() == 1) {
    Eigen::VectorXcd c = modes_.adjoint() * v.cast<std::complex<double>>();
    for (Eigen::Index k = 0; k < c.size(); ++k) {
      c[k] *= std::polar(1.0, x[0] * freqs_[k]);
    }
    return (modes_ * c).real();
  }
  return generator(generators_, x).exp() * v;
}

SobolevVector Translator::apply(std::span<const double> x, const SobolevVector& v) const {
  if (!(v.basis().spec() == basis_->spec())) throw TagMismatch("translator basis mismatch");
  return {basis_, apply(x, v.coeffs()), v.tag()};
}

Eigen::MatrixXd Translator::matrix(std::span<const double> x) const {
  check_point(*basis_, x);
  if (basis_->dim() == 1) {
    Eigen::VectorXcd phase(freqs_.size());
    for (Eigen::Index k = 0; k < phase.size(); ++k) phase[k] = std::polar(1.0, x[0] * freqs_[k]);
    return (modes_ * phase.asDiagonal() * modes_.adjoint()).real();
  }
  return generator(generators_, x).exp();
}

double sobolev_norm(const ComplexCoefficients& v, double p) {
  const auto w = shell_weights(*v.basis, p);
  return std::sqrt(w.cwiseProduct(v.re).squaredNorm() + w.cwiseProduct(v.im).squaredNorm());
}

ComplexCoefficients FourierDiagonal::apply(const SobolevVector& v) const {
  if (!(v.basis().spec() == basis->spec())) throw TagMismatch("fourier basis mismatch");
  return {basis, re.cwiseProduct(v.coeffs()), im.cwiseProduct(v.coeffs()), v.tag()};
}

FourierDiagonal fourier_diagonal(const BasisPtr& basis) {
  const auto size = static_cast<Eigen::Index>(basis->size());
  FourierDiagonal f{basis, Eigen::VectorXd(size), Eigen::VectorXd(size)};
  // (-i)^k cycles through 1, -i, -1, i.
  static constexpr double kRe[4] = {1.0, 0.0, -1.0, 0.0};
  static constexpr double kIm[4] = {0.0, -1.0, 0.0, 1.0};
  for (std::size_t r = 0; r < basis->size(); ++r) {
    const int k = basis->order(r) % 4;
    f.re[static_cast<Eigen::Index>(r)] = kRe[k];
    f.im[static_cast<Eigen::Index>(r)] = kIm[k];
  }
  return f;
}

double operator_norm_estimate(const OperatorMatrix& op, double p_in, double p_out) {
  const Eigen::MatrixXd weighted = shell_weights(*op.basis, p_out).asDiagonal() * op.matrix *
                                   shell_weights(*op.basis, -p_in).asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(weighted);
  if (svd.info() != Eigen::Success) throw NumericalError("operator_norm_estimate: SVD failed");
  const double s = svd.singularValues()(0);
  if (!std::isfinite(s)) throw NumericalError("operator_norm_estimate: non-finite norm");
  return s;
}

double PolyEnvelope::operator()(double r) const {
  double v = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) v = v * r + *it;
  return v;
}

int envelope_degree(double p) { return 2 * (static_cast<int>(std::floor(std::abs(p))) + 1); }

double translation_norm(std::span<const double> x, const Translator& translator, double p) {
  const auto& basis = translator.basis();
  OperatorMatrix t{basis, translator.matrix(x), -1, 0.0};
  return operator_norm_estimate(t, p, p);
}

namespace {

// Least squares over coefficient subsets; the best feasible (all >= 0)
// subset solution is the NNLS optimum for these small systems.
std::vector<double> nonnegative_polyfit(const std::vector<double>& r, const std::vector<double>& y,
                                        int degree) {
  const int terms = degree + 1;
  const auto rows = static_cast<Eigen::Index>(r.size());
  Eigen::MatrixXd vander(rows, terms);
  for (Eigen::Index i = 0; i < rows; ++i) {
    double v = 1.0;
    for (int k = 0; k < terms; ++k, v *= r[static_cast<std::size_t>(i)]) vander(i, k) = v;
  }
  const Eigen::VectorXd target = Eigen::Map<const Eigen::VectorXd>(y.data(), rows);

  std::vector<double> best(static_cast<std::size_t>(terms), 0.0);
  double best_residual = target.squaredNorm();
  for (unsigned mask = 1; mask < (1u << terms); ++mask) {
    std::vector<int> cols;
    for (int k = 0; k < terms; ++k) {
      if (mask & (1u << k)) cols.push_back(k);
    }
    Eigen::MatrixXd sub(rows, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = vander.col(cols[j]);
    const Eigen::VectorXd sol = sub.colPivHouseholderQr().solve(target);
    if ((sol.array() < 0.0).any() || !sol.allFinite()) continue;
    const double res = (sub * sol - target).squaredNorm();
    if (res < best_residual) {
      best_residual = res;
      std::fill(best.begin(), best.end(), 0.0);
      for (std::size_t j = 0; j < cols.size(); ++j) best[static_cast<std::size_t>(cols[j])] = sol[static_cast<Eigen::Index>(j)];
    }
  }
  return best;
}

}  // namespace

EnvelopeFit fit_envelope(std::vector<double> radii, std::vector<double> values, int degree) {
  if (radii.empty() || radii.size() != values.size()) {
    throw ConfigError("fit_envelope: need matching, non-empty samples");
  }
  if (degree < 0 || degree > 16) throw ConfigError("fit_envelope: unsupported degree");
  std::vector<std::size_t> order(radii.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return radii[a] < radii[b]; });
  EnvelopeFit fit;
  for (auto i : order) {
    fit.radii.push_back(std::abs(radii[i]));
    fit.values.push_back(values[i]);
  }

  fit.envelope.coeffs = nonnegative_polyfit(fit.radii, fit.values, degree);
  // Sparse grids can leave the constant term at zero; the operator norm at r = 0 is
  // positive, so lift the constant until every sample is covered from above zero.
  for (std::size_t i = 0; i < fit.radii.size(); ++i) {
    if (!(fit.envelope(fit.radii[i]) > 0.0) && fit.values[i] > 0.0) {
      if (fit.envelope.coeffs.empty()) fit.envelope.coeffs.push_back(0.0);
      fit.envelope.coeffs[0] += fit.values[i];
    }
  }
  double inflation = 0.0;
  for (std::size_t i = 0; i < fit.radii.size(); ++i) {
    const double at = fit.envelope(fit.radii[i]);
    const double need = i + 1 < fit.radii.size() ? std::max(fit.values[i], fit.values[i + 1]) : fit.values[i];
    if (!(at > 0.0)) {
      if (need > 0.0) throw NumericalError("fit_envelope: degenerate fit (zero envelope)");
      continue;
    }
    inflation = std::max(inflation, need / at);
  }
  if (inflation <= 0.0) throw NumericalError("fit_envelope: degenerate fit");
  for (double& c : fit.envelope.coeffs) c *= inflation;
  fit.inflation = inflation;
  fit.max_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < fit.radii.size(); ++i) {
    fit.max_violation = std::max(fit.max_violation, fit.values[i] - fit.envelope(fit.radii[i]));
  }
  return fit;
}

EnvelopeFit tau_poly_bound(double p, const std::vector<std::vector<double>>& points,
                           const BasisPtr& basis) {
  if (points.empty()) throw ConfigError("tau_poly_bound: no sample points");
  Translator translator(basis);
  std::vector<double> radii, norms;
  for (const auto& x : points) {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    radii.push_back(std::sqrt(r2));
    norms.push_back(translation_norm(x, translator, p));
  }
  return fit_envelope(std::move(radii), std::move(norms), envelope_degree(p));
}

void write_coefficients_csv(std::ostream& os, const SobolevVector& v, const nlohmann::json& extra) {
  nlohmann::json header = extra;
  header["d"] = v.basis().dim();
  header["N"] = v.basis().max_degree();
  header["p"] = v.tag();
  os << "# " << header.dump() << "\n";
  os << "rank";
  for (int i = 1; i <= v.basis().dim(); ++i) os << ",n_" << i;
  os << ",coefficient\n";
  char buf[32];
  for (std::size_t r = 0; r < v.size(); ++r) {
    os << r;
    for (int e : v.basis().index(r).entries()) os << ',' << e;
    std::snprintf(buf, sizeof buf, "%.17g", v[r]);
    os << ',' << buf << '\n';
  }
}

SobolevVector read_coefficients_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) {
    throw ConfigError("coefficient CSV: missing JSON header line");
  }
  const auto header = nlohmann::json::parse(line.substr(2));
  const int d = header.at("d").get<int>();
  const int n = header.at("N").get<int>();
  const double p = header.at("p").get<double>();
  auto basis = Basis::make(d, n);
  std::getline(is, line);  // column names
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis->size()));
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != static_cast<std::size_t>(d) + 2) throw ConfigError("coefficient CSV: bad row");
    const auto rank = std::stoul(cells.front());
    if (rank >= basis->size()) throw ConfigError("coefficient CSV: rank out of range");
    coeffs[static_cast<Eigen::Index>(rank)] = std::stod(cells.back());
    ++rows;
  }
  if (rows != basis->size()) throw ConfigError("coefficient CSV: row count does not match basis");
  return {basis, std::move(coeffs), p};
}

}  // namespace hslift
