#include "hslift/spde.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace hslift {

SpdeOperators::SpdeOperators(CoeffField field) : field_(std::move(field)), basis_(field_.basis()) {
  const int d = field_.dim;
  for (int i = 0; i < d; ++i) d_.push_back(derivative_matrix(basis_, i).matrix);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) dd_.push_back(d_[static_cast<std::size_t>(i)] * d_[static_cast<std::size_t>(j)]);
  }
}

void SpdeOperators::check(const SobolevVector& phi) const {
  if (!(phi.basis().spec() == basis_->spec())) throw TagMismatch("SPDE operator and state bases differ");
  if (phi.tag() + field_.tag < -1e-12) {
    throw TagMismatch("state tag " + std::to_string(phi.tag()) + " cannot be paired with coefficients at " +
                      std::to_string(field_.tag));
  }
}

SobolevVector SpdeOperators::apply_A_frozen(const SobolevVector& phi, int i, const Eigen::MatrixXd& s) const {
  check(phi);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(phi.coeffs().size());
  for (int j = 0; j < field_.dim; ++j) {
    const double c = s(j, i);
    if (c != 0.0) out.noalias() -= c * (d(j) * phi.coeffs());
  }
  return {basis_, std::move(out), phi.tag() - 0.5};
}

SobolevVector SpdeOperators::apply_L_frozen(const SobolevVector& phi, const Eigen::MatrixXd& s,
                                            const Eigen::VectorXd& b) const {
  check(phi);
  const Eigen::MatrixXd q = s * s.transpose();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(phi.coeffs().size());
  for (int i = 0; i < field_.dim; ++i) {
    for (int j = 0; j < field_.dim; ++j) {
      if (q(i, j) != 0.0) out.noalias() += 0.5 * q(i, j) * (dd(i, j) * phi.coeffs());
    }
    if (b[i] != 0.0) out.noalias() -= b[i] * (d(i) * phi.coeffs());
  }
  return {basis_, std::move(out), phi.tag() - 1.0};
}

SobolevVector SpdeOperators::apply_A(const SobolevVector& phi, int i) const {
  check(phi);
  return apply_A_frozen(phi, i, sigma_pairing(field_, phi));
}

SobolevVector SpdeOperators::apply_L(const SobolevVector& phi) const {
  check(phi);
  return apply_L_frozen(phi, sigma_pairing(field_, phi), drift_pairing(field_, phi));
}

SobolevVector apply_A(const SobolevVector& phi, const CoeffField& field, int i) {
  return SpdeOperators(field).apply_A(phi, i);
}

SobolevVector apply_L(const SobolevVector& phi, const CoeffField& field) {
  return SpdeOperators(field).apply_L(phi);
}

LiftedPath lift(const SobolevVector& xi, const PathResult& zpath, std::vector<std::size_t> steps,
                const Translator& translator) {
  LiftedPath out{xi, zpath, std::move(steps), {}};
  for (std::size_t k : out.steps) {
    if (k >= zpath.size()) throw ConfigError("lift: requested step beyond the path");
    if (!zpath.alive(k)) {
      out.realized.emplace_back(std::nullopt);
      continue;
    }
    out.realized.emplace_back(translator.apply(zpath.state(k), xi));
  }
  return out;
}

LiftedPath lift(const SobolevVector& xi, const PathResult& zpath, std::vector<std::size_t> steps) {
  return lift(xi, zpath, std::move(steps), Translator(xi.basis_ptr()));
}

GalerkinResult galerkin_simulate(const SobolevVector& xi, const SpdeOperators& ops,
                                 const BrownianPath& path, double p, const GalerkinOptions& opts) {
  if (path.dim != ops.dim()) throw ConfigError("galerkin_simulate: dimension mismatch");
  if (opts.record_every == 0) throw ConfigError("galerkin_simulate: record_every must be positive");
  const double start = sobolev_norm(xi, p - 1.0);
  const double guard = opts.guard_factor * start;
  const Eigen::VectorXd w = shell_weights(xi.basis(), p - 1.0);
  GalerkinResult res;
  SobolevVector y = xi.with_tag(p);
  res.steps.push_back(0);
  res.states.push_back(y.with_tag(p - 1.0));
  const int d = ops.dim();
  for (std::size_t k = 0; k < path.steps; ++k) {
    const Eigen::MatrixXd s = sigma_pairing(ops.field(), y);
    const Eigen::VectorXd b = drift_pairing(ops.field(), y);
    Eigen::VectorXd next = y.coeffs() + path.dt * ops.apply_L_frozen(y, s, b).coeffs();
    const auto db = path.increment(k);
    for (int i = 0; i < d; ++i) next += db[static_cast<std::size_t>(i)] * ops.apply_A_frozen(y, i, s).coeffs();
    const double norm = w.cwiseProduct(next).norm();
    if (!std::isfinite(norm) || norm > guard) {
      throw GuardTripped("galerkin_simulate: ||Y||_{p-1} = " + std::to_string(norm) + " exceeds the guard " +
                             std::to_string(guard),
                         k + 1);
    }
    y = SobolevVector(xi.basis_ptr(), std::move(next), p);
    if ((k + 1) % opts.record_every == 0 || k + 1 == path.steps) {
      res.steps.push_back(k + 1);
      res.states.push_back(y.with_tag(p - 1.0));
    }
  }
  return res;
}

ItoResidual ito_residual(const SobolevVector& xi, const PathResult& zpath, double p, Covariation mode,
                         const SdeProblem* problem) {
  if (zpath.dim != xi.basis().dim()) throw ConfigError("ito_residual: dimension mismatch");
  if (mode == Covariation::bracket && (problem == nullptr || !problem->diffusion)) {
    throw ConfigError("ito_residual: bracket covariation needs the diffusion field");
  }
  const auto d = static_cast<std::size_t>(zpath.dim);
  const Translator translator(xi.basis_ptr());
  std::vector<Eigen::MatrixXd> dmat;
  for (std::size_t i = 0; i < d; ++i) dmat.push_back(derivative_matrix(xi.basis_ptr(), static_cast<int>(i)).matrix);
  const Eigen::VectorXd w = shell_weights(xi.basis(), p - 1.0);

  std::size_t last = zpath.size() - 1;
  if (zpath.exit_step) last = *zpath.exit_step == 0 ? 0 : *zpath.exit_step - 1;

  ItoResidual out;
  Eigen::VectorXd y = translator.apply(zpath.state(0), xi.coeffs());
  Eigen::VectorXd rhs = y;
  std::vector<double> sig(d * d);
  out.times.push_back(0.0);
  out.norms.push_back(0.0);
  for (std::size_t k = 0; k < last; ++k) {
    const auto z = zpath.state(k);
    const auto zn = zpath.state(k + 1);
    std::vector<double> dz(d);
    for (std::size_t i = 0; i < d; ++i) dz[i] = zn[i] - z[i];
    Eigen::MatrixXd q(d, d);
    if (mode == Covariation::realized) {
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = dz[i] * dz[j];
      }
    } else {
      problem->diffusion(z, sig);
      const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> s(
          sig.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
      q = s * s.transpose() * zpath.dt;
    }
    for (std::size_t i = 0; i < d; ++i) {
      const Eigen::VectorXd di = dmat[i] * y;
      rhs -= dz[i] * di;
      for (std::size_t j = 0; j < d; ++j) {
        rhs += 0.5 * q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * (dmat[j] * di);
      }
    }
    y = translator.apply(zn, xi.coeffs());
    const double r = w.cwiseProduct(y - rhs).norm();
    out.times.push_back(zpath.dt * static_cast<double>(k + 1));
    out.norms.push_back(r);
    out.max = std::max(out.max, r);
  }
  return out;
}

namespace {

double weighted_dot(const Eigen::VectorXd& w2, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (w2.cwiseProduct(a)).dot(b);
}

}  // namespace

GapTerms monotonicity_terms(const SobolevVector& phi, const SpdeOperators& ops, double p,
                            const Eigen::MatrixXd& s, const Eigen::VectorXd& b) {
  const Eigen::VectorXd w2 = shell_weights(phi.basis(), 2.0 * (p - 1.0));
  GapTerms t;
  t.norm2 = weighted_dot(w2, phi.coeffs(), phi.coeffs());
  t.drift = 2.0 * weighted_dot(w2, phi.coeffs(), ops.apply_L_frozen(phi, s, b).coeffs());
  for (int i = 0; i < ops.dim(); ++i) {
    const Eigen::VectorXd a = ops.apply_A_frozen(phi, i, s).coeffs();
    t.diffusion += weighted_dot(w2, a, a);
  }
  return t;
}

double monotonicity_gap_frozen(const SobolevVector& phi, const SpdeOperators& ops, double p,
                               const Eigen::MatrixXd& s, const Eigen::VectorXd& b) {
  const auto t = monotonicity_terms(phi, ops, p, s, b);
  if (!(t.norm2 > 0.0)) throw NumericalError("monotonicity_gap: ||phi||_{p-1} is zero");
  const double g = (t.drift + t.diffusion) / t.norm2;
  if (!std::isfinite(g)) throw NumericalError("monotonicity_gap: non-finite value");
  return g;
}

double monotonicity_gap(const SobolevVector& phi, const SpdeOperators& ops, double p) {
  return monotonicity_gap_frozen(phi, ops, p, sigma_pairing(ops.field(), phi), drift_pairing(ops.field(), phi));
}

void write_trajectory_csv(std::ostream& os, const std::vector<double>& times,
                          const std::vector<SobolevVector>& states, const std::vector<double>& ps,
                          const std::vector<TestFunction>& tests) {
  if (times.size() != states.size()) throw ConfigError("trajectory CSV: times and states differ in length");
  os << "t,observable,value,std_err\n";
  char buf[96];
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (double p : ps) {
      std::snprintf(buf, sizeof buf, "%.17g,norm_p%g,%.17g,0\n", times[k], p, sobolev_norm(states[k], p));
      os << buf;
    }
    for (const auto& t : tests) {
      std::snprintf(buf, sizeof buf, "%.17g,", times[k]);
      os << buf << t.name;
      std::snprintf(buf, sizeof buf, ",%.17g,0\n", t.phi.coeffs().dot(states[k].coeffs()));
      os << buf;
    }
  }
}

}  // namespace hslift
