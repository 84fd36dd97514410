#include "hslift/fields.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "hslift/errors.hpp"

namespace hslift {

// ---------------------------------------------------------------- Polynomial

Polynomial Polynomial::constant(int dim, double c) {
  return monomial(dim, std::vector<int>(static_cast<std::size_t>(dim), 0), c);
}

Polynomial Polynomial::monomial(int dim, std::vector<int> exponents, double c) {
  if (exponents.size() != static_cast<std::size_t>(dim)) throw ConfigError("monomial dimension mismatch");
  Polynomial p(dim);
  p.add(exponents, c);
  return p;
}

Polynomial Polynomial::univariate(std::vector<double> ascending) {
  Polynomial p(1);
  for (std::size_t k = 0; k < ascending.size(); ++k) p.add({static_cast<int>(k)}, ascending[k]);
  return p;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [e, c] : terms_) {
    if (c == 0.0) continue;
    int s = 0;
    for (int v : e) s += v;
    d = std::max(d, s);
  }
  return d;
}

double Polynomial::coefficient(const std::vector<int>& exponents) const {
  auto it = terms_.find(exponents);
  return it == terms_.end() ? 0.0 : it->second;
}

double Polynomial::operator()(std::span<const double> x) const {
  double v = 0.0;
  for (const auto& [e, c] : terms_) {
    double t = c;
    for (std::size_t a = 0; a < e.size(); ++a) t *= std::pow(x[a], e[a]);
    v += t;
  }
  return v;
}

Polynomial& Polynomial::add(const std::vector<int>& exponents, double c) {
  if (exponents.size() != static_cast<std::size_t>(dim_)) throw ConfigError("monomial dimension mismatch");
  if (c != 0.0) terms_[exponents] += c;
  return *this;
}

Polynomial operator+(Polynomial a, const Polynomial& b) {
  for (const auto& [e, c] : b.terms_) a.add(e, c);
  return a;
}

Polynomial operator*(double s, Polynomial a) {
  for (auto& [e, c] : a.terms_) c *= s;
  return a;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [e, c] : terms_) {
    if (!first) os << " + ";
    first = false;
    os << c;
    for (std::size_t a = 0; a < e.size(); ++a) {
      if (e[a] > 0) os << "*x" << (a + 1) << "^" << e[a];
    }
  }
  return os.str();
}

// -------------------------------------------------------- monomial vectors

Eigen::VectorXd monomial_coeffs_1d(int k, int max_n) {
  if (k < 0 || max_n < 0) throw ConfigError("monomial_coeffs_1d: negative order");
  const int top = max_n + k;
  std::vector<double> h0(static_cast<std::size_t>(top) + 1, 0.0);
  h0[0] = std::pow(std::numbers::pi, -0.25);
  for (int n = 1; n < top; ++n) {
    h0[static_cast<std::size_t>(n) + 1] = -std::sqrt(double(n) / (n + 1)) * h0[static_cast<std::size_t>(n) - 1];
  }
  // h_n(0) alternates in sign over even n, so (-i)^n h_n(0) = |h_n(0)| there.
  const double root2pi = std::sqrt(2.0 * std::numbers::pi);
  std::vector<double> c(h0.size(), 0.0);
  for (std::size_t n = 0; n < h0.size(); n += 2) c[n] = root2pi * std::abs(h0[n]);

  for (int j = 1; j <= k; ++j) {
    std::vector<double> next(c.size() - 1, 0.0);
    for (std::size_t n = 0; n < next.size(); ++n) {
      next[n] = std::sqrt((n + 1) / 2.0) * c[n + 1] + (n > 0 ? std::sqrt(n / 2.0) * c[n - 1] : 0.0);
    }
    c = std::move(next);
  }
  c.resize(static_cast<std::size_t>(max_n) + 1);
  return Eigen::Map<Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
}

double monomial_threshold(int dim, int total_degree) { return (dim + 2.0 * total_degree) / 4.0; }

SobolevVector monomial_distribution(const BasisPtr& basis, const std::vector<int>& exponents,
                                    double tag) {
  if (exponents.size() != static_cast<std::size_t>(basis->dim())) {
    throw ConfigError("monomial_distribution: exponent dimension mismatch");
  }
  std::vector<Eigen::VectorXd> axis;
  for (int e : exponents) axis.push_back(monomial_coeffs_1d(e, basis->max_degree()));
  Eigen::VectorXd coeffs(static_cast<Eigen::Index>(basis->size()));
  for (std::size_t r = 0; r < basis->size(); ++r) {
    const auto& n = basis->index(r);
    double v = 1.0;
    for (std::size_t a = 0; a < n.dim(); ++a) v *= axis[a][n[a]];
    coeffs[static_cast<Eigen::Index>(r)] = v;
  }
  return {basis, std::move(coeffs), tag};
}

SobolevVector polynomial_distribution(const BasisPtr& basis, const Polynomial& poly, double tag) {
  auto out = SobolevVector::zero(basis, tag);
  for (const auto& [e, c] : poly.terms()) out += c * monomial_distribution(basis, e, tag);
  return out;
}

// ------------------------------------------------------------------ fields

CoeffField CoeffField::polynomial(const BasisPtr& basis, const std::vector<Polynomial>& sigma,
                                  const std::vector<Polynomial>& drift, double tag) {
  const int d = basis->dim();
  if (sigma.size() != static_cast<std::size_t>(d * d) || drift.size() != static_cast<std::size_t>(d)) {
    throw ConfigError("polynomial field: expected d*d diffusion and d drift entries");
  }
  CoeffField field;
  field.dim = d;
  field.tag = tag;
  auto make = [&](const Polynomial& p, std::string label) {
    return DistributionCoeff{polynomial_distribution(basis, p, tag), std::move(label), p,
                             [p](std::span<const double> x) { return p(x); }};
  };
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      field.sigma.push_back(make(sigma[static_cast<std::size_t>(i * d + j)],
                                 "sigma_" + std::to_string(i + 1) + std::to_string(j + 1)));
    }
  }
  for (int i = 0; i < d; ++i) {
    field.drift.push_back(make(drift[static_cast<std::size_t>(i)], "b_" + std::to_string(i + 1)));
  }
  return field;
}

CoeffField ou_field(const BasisPtr& basis, double tag) {
  const int d = basis->dim();
  std::vector<Polynomial> sigma, drift;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) sigma.push_back(i == j ? Polynomial::constant(d, 1.0) : Polynomial(d));
  }
  for (int i = 0; i < d; ++i) {
    std::vector<int> e(static_cast<std::size_t>(d), 0);
    e[static_cast<std::size_t>(i)] = 1;
    drift.push_back(Polynomial::monomial(d, e, -1.0));
  }
  return CoeffField::polynomial(basis, sigma, drift, tag);
}

CoeffField quartic_field(const BasisPtr& basis, double tag) {
  if (basis->dim() != 1) throw ConfigError("quartic field is one-dimensional");
  return CoeffField::polynomial(basis, {Polynomial::constant(1, 1.0)},
                                {Polynomial::monomial(1, {3}, -1.0)}, tag);
}

CoeffField zero_field(const BasisPtr& basis, double tag) {
  const int d = basis->dim();
  return CoeffField::polynomial(basis, std::vector<Polynomial>(static_cast<std::size_t>(d * d), Polynomial(d)),
                                std::vector<Polynomial>(static_cast<std::size_t>(d), Polynomial(d)), tag);
}

Eigen::MatrixXd sigma_pairing(const CoeffField& field, const SobolevVector& psi) {
  Eigen::MatrixXd s(field.dim, field.dim);
  for (int i = 0; i < field.dim; ++i) {
    for (int j = 0; j < field.dim; ++j) s(i, j) = pairing(field.sigma_at(i, j).rep, psi);
  }
  return s;
}

Eigen::VectorXd drift_pairing(const CoeffField& field, const SobolevVector& psi) {
  Eigen::VectorXd b(field.dim);
  for (int i = 0; i < field.dim; ++i) b[i] = pairing(field.drift[static_cast<std::size_t>(i)].rep, psi);
  return b;
}

FieldEvaluator::FieldEvaluator(const CoeffField& field, const SobolevVector& psi)
    : dim_(field.dim), psi_(psi) {
  if (psi.basis().dim() != field.dim) throw TagMismatch("field and psi dimensions differ");
  if (psi.tag() + field.tag < -1e-12) {
    throw TagMismatch("psi tag " + std::to_string(psi.tag()) + " is below the field's dual index " +
                      std::to_string(-field.tag));
  }
  for (const auto& c : field.sigma) {
    c.rep.require_same_basis(psi);
    sigma_.push_back(c.rep);
  }
  for (const auto& c : field.drift) {
    c.rep.require_same_basis(psi);
    drift_.push_back(c.rep);
  }
  translator_ = std::make_shared<Translator>(psi.basis_ptr());
  if (dim_ == 1) {
    const auto& u = translator_->modes();
    const Eigen::VectorXcd v = u.adjoint() * psi.coeffs().cast<std::complex<double>>();
    auto alpha = [&](const SobolevVector& c) -> Eigen::VectorXcd {
      return (u.transpose() * c.coeffs().cast<std::complex<double>>()).cwiseProduct(v);
    };
    for (const auto& c : sigma_) sigma_alpha_.push_back(alpha(c));
    for (const auto& c : drift_) drift_alpha_.push_back(alpha(c));
  }
}

double FieldEvaluator::spectral_value(const Eigen::VectorXcd& alpha, double x) const {
  const auto& freqs = translator_->frequencies();
  double s = 0.0;
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    const double phase = x * freqs[k];
    s += alpha[k].real() * std::cos(phase) - alpha[k].imag() * std::sin(phase);
  }
  return s;
}

void FieldEvaluator::sigma_bar(std::span<const double> x, std::span<double> out) const {
  if (dim_ == 1) {
    out[0] = spectral_value(sigma_alpha_[0], x[0]);
    return;
  }
  const Eigen::VectorXd moved = translator_->apply(x, psi_.coeffs());
  for (std::size_t k = 0; k < sigma_.size(); ++k) out[k] = sigma_[k].coeffs().dot(moved);
}

void FieldEvaluator::b_bar(std::span<const double> x, std::span<double> out) const {
  if (dim_ == 1) {
    out[0] = spectral_value(drift_alpha_[0], x[0]);
    return;
  }
  const Eigen::VectorXd moved = translator_->apply(x, psi_.coeffs());
  for (std::size_t k = 0; k < drift_.size(); ++k) out[k] = drift_[k].coeffs().dot(moved);
}

Eigen::MatrixXd FieldEvaluator::sigma_bar(std::span<const double> x) const {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> m(dim_, dim_);
  sigma_bar(x, std::span<double>(m.data(), static_cast<std::size_t>(m.size())));
  return m;
}

Eigen::VectorXd FieldEvaluator::b_bar(std::span<const double> x) const {
  Eigen::VectorXd b(dim_);
  b_bar(x, std::span<double>(b.data(), static_cast<std::size_t>(b.size())));
  return b;
}

Eigen::MatrixXd sigma_bar(std::span<const double> x, const SobolevVector& psi, const CoeffField& field) {
  for (double v : x) {
    if (!std::isfinite(v)) throw NumericalError("sigma_bar: non-finite point");
  }
  return FieldEvaluator(field, psi).sigma_bar(x);
}

Eigen::VectorXd b_bar(std::span<const double> x, const SobolevVector& psi, const CoeffField& field) {
  for (double v : x) {
    if (!std::isfinite(v)) throw NumericalError("b_bar: non-finite point");
  }
  return FieldEvaluator(field, psi).b_bar(x);
}

// ----------------------------------------------------------------- moments

double moment(const SobolevVector& psi, const std::vector<int>& exponents) {
  int total = 0;
  for (int e : exponents) total += e;
  const double threshold = monomial_threshold(psi.basis().dim(), total);
  if (!(psi.tag() > threshold)) {
    throw TagMismatch("moment of order " + std::to_string(total) + " needs a tag above " +
                      std::to_string(threshold) + ", psi has " + std::to_string(psi.tag()));
  }
  return monomial_distribution(psi.basis_ptr(), exponents, -psi.tag()).coeffs().dot(psi.coeffs());
}

double moment(const SobolevVector& psi, int k) {
  if (psi.basis().dim() != 1) throw ConfigError("scalar moment order needs d = 1");
  return moment(psi, std::vector<int>{k});
}

// ------------------------------------------------------------------- set C

std::optional<std::pair<std::vector<int>, double>> MomentCondition::as_moment_value() const {
  if (terms.size() != 1 || terms.front().second == 0.0) return std::nullopt;
  return std::make_pair(terms.front().first, value / terms.front().second);
}

namespace {

// Conditions making int s(y + x) psi(y) dy == target(x) identically in x:
// the coefficient of x^r is sum_{j >= r} a_j prod_a C(j_a, r_a) m_{j - r}.
std::vector<MomentCondition> expansion_conditions(const Polynomial& s, const Polynomial& target,
                                                  const std::string& label) {
  std::set<std::vector<int>> powers;
  for (const auto& [j, a] : s.terms()) {
    // every r <= j componentwise
    std::vector<int> r(j.size(), 0);
    while (true) {
      powers.insert(r);
      std::size_t a_idx = 0;
      while (a_idx < r.size() && ++r[a_idx] > j[a_idx]) r[a_idx++] = 0;
      if (a_idx == r.size()) break;
    }
  }
  for (const auto& [r, c] : target.terms()) powers.insert(r);

  std::vector<MomentCondition> out;
  for (const auto& r : powers) {
    MomentCondition cond;
    cond.value = target.coefficient(r);
    cond.source = label + " [x^" + Polynomial::monomial(static_cast<int>(r.size()), r).to_string() + "]";
    std::map<std::vector<int>, double> terms;
    for (const auto& [j, a] : s.terms()) {
      bool dominates = true;
      for (std::size_t k = 0; k < r.size(); ++k) dominates = dominates && j[k] >= r[k];
      if (!dominates) continue;
      double coef = a;
      std::vector<int> m(r.size());
      for (std::size_t k = 0; k < r.size(); ++k) {
        coef *= binomial(j[k], r[k]);
        m[k] = j[k] - r[k];
      }
      terms[m] += coef;
    }
    for (const auto& [m, c] : terms) {
      if (c != 0.0) cond.terms.emplace_back(m, c);
    }
    if (cond.terms.empty() && cond.value == 0.0) continue;
    out.push_back(std::move(cond));
  }
  return out;
}

}  // namespace

SetCSpec SetCSpec::make(std::vector<Polynomial> sigma, std::vector<Polynomial> drift,
                        std::vector<Polynomial> f, std::vector<Polynomial> g, double tol) {
  SetCSpec spec;
  spec.dim = drift.empty() ? 1 : drift.front().dim();
  const auto d = static_cast<std::size_t>(spec.dim);
  if (sigma.size() != d * d || f.size() != d * d || drift.size() != d || g.size() != d) {
    throw ConfigError("SetCSpec: expected d*d diffusion and d drift entries");
  }
  spec.sigma = std::move(sigma);
  spec.drift = std::move(drift);
  spec.f = std::move(f);
  spec.g = std::move(g);
  spec.tol = tol;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      auto c = expansion_conditions(spec.sigma[i * d + j], spec.f[i * d + j],
                                    "sigma_" + std::to_string(i + 1) + std::to_string(j + 1));
      spec.conditions.insert(spec.conditions.end(), c.begin(), c.end());
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    auto c = expansion_conditions(spec.drift[i], spec.g[i], "b_" + std::to_string(i + 1));
    spec.conditions.insert(spec.conditions.end(), c.begin(), c.end());
  }
  return spec;
}

int SetCSpec::max_moment_order() const {
  int k = 0;
  for (const auto& c : conditions) {
    for (const auto& [m, coef] : c.terms) {
      int s = 0;
      for (int e : m) s += e;
      k = std::max(k, s);
    }
  }
  return k;
}

SetCSpec ou_set_c(double tol) {
  auto one = Polynomial::constant(1, 1.0);
  auto drift = Polynomial::monomial(1, {1}, -1.0);
  return SetCSpec::make({one}, {drift}, {one}, {drift}, tol);
}

SetCSpec quartic_set_c(double tol) {
  auto one = Polynomial::constant(1, 1.0);
  auto drift = Polynomial::monomial(1, {3}, -1.0);
  return SetCSpec::make({one}, {drift}, {one}, {drift}, tol);
}

SetCVerdict set_c_check(const SobolevVector& psi, const SetCSpec& spec) {
  if (psi.basis().dim() != spec.dim) throw TagMismatch("set_c_check: dimension mismatch");
  SetCVerdict v;
  std::map<std::vector<int>, double> cache;
  auto m = [&](const std::vector<int>& k) {
    auto it = cache.find(k);
    if (it != cache.end()) return it->second;
    return cache[k] = moment(psi, k);
  };
  for (const auto& cond : spec.conditions) {
    double lhs = 0.0, scale = 0.0;
    for (const auto& [k, c] : cond.terms) {
      lhs += c * m(k);
      scale = std::max(scale, std::abs(c));
    }
    const double r = scale > 0.0 ? (lhs - cond.value) / scale : -cond.value;
    v.labels.push_back(cond.source);
    v.residuals.push_back(r);
    v.max_residual = std::max(v.max_residual, std::abs(r));
  }
  v.member = v.max_residual <= spec.tol;
  return v;
}

SetCVerdict set_c_check_direct(const SobolevVector& psi, const CoeffField& field,
                               const std::vector<ScalarField>& f, const std::vector<ScalarField>& g,
                               const std::vector<double>& grid, double tol) {
  if (field.dim != 1 || psi.basis().dim() != 1) throw ConfigError("direct set-C mode is one-dimensional");
  if (f.size() != 1 || g.size() != 1) throw ConfigError("direct set-C mode needs one f and one g");
  // y = sqrt(2) u turns psi's e^{-y^2/2} envelope into the rule's e^{-u^2}.
  const auto rule = gauss_hermite(psi.basis().max_degree() + 16);
  std::vector<double> ys, ws, psi_vals;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double y = std::numbers::sqrt2 * rule.nodes[i];
    ys.push_back(y);
    ws.push_back(std::numbers::sqrt2 * rule.scaled_weights[i]);
    psi_vals.push_back(reconstruct(psi, std::span(&y, 1)));
  }
  auto integral = [&](const DistributionCoeff& c, double x) {
    if (!c.closed_form) throw ConfigError("direct set-C mode needs closed-form coefficients");
    double s = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      const double at = ys[i] + x;
      s += ws[i] * c.closed_form(std::span(&at, 1)) * psi_vals[i];
    }
    return s;
  };
  SetCVerdict v;
  double sig = 0.0, drf = 0.0;
  for (double x : grid) {
    sig = std::max(sig, std::abs(integral(field.sigma.front(), x) - f.front()(std::span(&x, 1))));
    drf = std::max(drf, std::abs(integral(field.drift.front(), x) - g.front()(std::span(&x, 1))));
  }
  v.labels = {"sigma_11 grid deviation", "b_1 grid deviation"};
  v.residuals = {sig, drf};
  v.max_residual = std::max(sig, drf);
  v.member = v.max_residual <= tol;
  return v;
}

// --------------------------------------------------------------- Lipschitz

LipschitzReport lipschitz_probe(const SobolevVector& psi, const CoeffField& field, double radius,
                                std::size_t samples, std::uint64_t seed) {
  if (samples < 2) throw ConfigError("lipschitz_probe: need at least two samples");
  const int d = field.dim;
  std::vector<std::vector<double>> points;
  if (d == 1) {
    for (std::size_t i = 0; i < samples; ++i) {
      points.push_back({-radius + 2.0 * radius * double(i) / double(samples - 1)});
    }
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-radius, radius);
    while (points.size() < samples) {
      std::vector<double> x(static_cast<std::size_t>(d));
      double r2 = 0.0;
      for (double& v : x) {
        v = u(rng);
        r2 += v * v;
      }
      if (r2 <= radius * radius) points.push_back(std::move(x));
    }
  }

  FieldEvaluator eval(field, psi);
  std::vector<Eigen::MatrixXd> sig;
  std::vector<Eigen::VectorXd> drf;
  for (const auto& x : points) {
    sig.push_back(eval.sigma_bar(x));
    drf.push_back(eval.b_bar(x));
  }
  LipschitzReport rep;
  rep.samples = points.size();
  for (std::size_t a = 0; a < points.size(); ++a) {
    for (std::size_t b = a + 1; b < points.size(); ++b) {
      double dist2 = 0.0;
      for (int k = 0; k < d; ++k) {
        const double t = points[a][static_cast<std::size_t>(k)] - points[b][static_cast<std::size_t>(k)];
        dist2 += t * t;
      }
      const double dist = std::sqrt(dist2);
      if (dist == 0.0) continue;
      rep.sigma_estimate = std::max(rep.sigma_estimate, (sig[a] - sig[b]).norm() / dist);
      rep.drift_estimate = std::max(rep.drift_estimate, (drf[a] - drf[b]).norm() / dist);
    }
  }

  const double p = -field.tag;
  const auto& basis = psi.basis_ptr();
  double deriv = 0.0;
  for (int i = 0; i < d; ++i) {
    deriv = std::max(deriv, operator_norm_estimate(derivative_matrix(basis, i), p + 0.5, p));
  }
  std::vector<std::vector<double>> probe;
  for (int i = 0; i <= 16; ++i) {
    std::vector<double> x(static_cast<std::size_t>(d), 0.0);
    x[0] = 2.0 * radius * i / 16.0;
    probe.push_back(std::move(x));
  }
  const auto env = tau_poly_bound(p + 0.5, probe, basis);
  const double c_tilde = deriv * env.envelope.sup_on_ball(2.0 * radius);
  const double psi_norm = sobolev_norm(psi, p + 0.5);
  double sig_norm = 0.0, drf_norm = 0.0;
  for (const auto& c : field.sigma) sig_norm = std::max(sig_norm, sobolev_norm(c.rep, -p));
  for (const auto& c : field.drift) drf_norm = std::max(drf_norm, sobolev_norm(c.rep, -p));
  rep.sigma_bound = d * c_tilde * sig_norm * psi_norm;
  rep.drift_bound = d * c_tilde * drf_norm * psi_norm;
  return rep;
}

}  // namespace hslift
