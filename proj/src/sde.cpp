#include "hslift/sde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include <boost/math/special_functions/gamma.hpp>

namespace hslift {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  engine_.seed(seq);
}

BrownianPath BrownianPath::make(int dim, double dt, std::size_t steps, RngStream& rng) {
  if (dim < 1 || !(dt > 0.0)) throw ConfigError("BrownianPath: need dim >= 1 and dt > 0");
  BrownianPath p;
  p.dim = dim;
  p.dt = dt;
  p.steps = steps;
  p.increments.resize(steps * static_cast<std::size_t>(dim));
  const double s = std::sqrt(dt);
  for (double& v : p.increments) v = s * rng.normal();
  return p;
}

BrownianPath BrownianPath::make(int dim, double dt, std::size_t steps, std::uint64_t seed,
                                std::uint64_t stream) {
  RngStream rng(seed, stream);
  return make(dim, dt, steps, rng);
}

BrownianPath BrownianPath::coarsen(std::size_t factor) const {
  if (factor == 0 || steps % factor != 0) throw ConfigError("coarsen: factor must divide the step count");
  BrownianPath c;
  c.dim = dim;
  c.dt = dt * static_cast<double>(factor);
  c.steps = steps / factor;
  c.increments.assign(c.steps * static_cast<std::size_t>(dim), 0.0);
  for (std::size_t k = 0; k < steps; ++k) {
    for (int a = 0; a < dim; ++a) {
      c.increments[(k / factor) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(a)] +=
          increments[k * static_cast<std::size_t>(dim) + static_cast<std::size_t>(a)];
    }
  }
  return c;
}

namespace {

double euclid(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

void check_start(const SdeProblem& problem, const BrownianPath& path, std::span<const double> z0) {
  if (path.dim != problem.dim || z0.size() != static_cast<std::size_t>(problem.dim)) {
    throw ConfigError("SDE: dimension mismatch between problem, path and start");
  }
  for (double v : z0) {
    if (!std::isfinite(v)) throw ConfigError("SDE: non-finite start");
  }
}

// One left-point step z += sigma(x) dB + b(x) dt.
void euler_step(const SdeProblem& problem, std::span<const double> x, std::span<const double> db,
                double dt, std::span<double> sig, std::span<double> drift, std::span<double> out) {
  const auto d = static_cast<std::size_t>(problem.dim);
  problem.diffusion(x, sig);
  problem.drift(x, drift);
  for (std::size_t i = 0; i < d; ++i) {
    double v = drift[i] * dt;
    for (std::size_t j = 0; j < d; ++j) v += sig[i * d + j] * db[j];
    out[i] += v;
  }
}

}  // namespace

PathResult simulate_em(const SdeProblem& problem, const BrownianPath& path, std::span<const double> z0) {
  check_start(problem, path, z0);
  const auto d = static_cast<std::size_t>(problem.dim);
  PathResult r;
  r.dim = problem.dim;
  r.dt = path.dt;
  r.states.assign((path.steps + 1) * d, std::numeric_limits<double>::quiet_NaN());
  std::copy(z0.begin(), z0.end(), r.states.begin());
  std::vector<double> sig(d * d), drift(d);
  for (std::size_t k = 0;; ++k) {
    std::span<double> cur(r.states.data() + k * d, d);
    if (euclid(cur) >= problem.explosion_level) {
      r.exploded = true;
      r.exit_step = k;
      r.theta = path.time(k);
      // keep the exit state itself, blank everything after it
      return r;
    }
    if (k == path.steps) break;
    std::span<double> next(r.states.data() + (k + 1) * d, d);
    std::copy(cur.begin(), cur.end(), next.begin());
    euler_step(problem, cur, path.increment(k), path.dt, sig, drift, next);
    for (double v : next) {
      if (!std::isfinite(v)) {
        throw NumericalError("simulate_em: non-finite state at step " + std::to_string(k + 1) +
                             " before the exit level was reached");
      }
    }
  }
  return r;
}

PicardResult picard_solve(const SdeProblem& problem, const BrownianPath& path,
                          std::span<const double> zeta, int iterations) {
  check_start(problem, path, zeta);
  if (iterations < 1) throw ConfigError("picard_solve: need at least one iteration");
  const auto d = static_cast<std::size_t>(problem.dim);
  const std::size_t rows = path.steps + 1;
  PicardResult res;
  std::vector<double> z0(rows * d);
  for (std::size_t k = 0; k < rows; ++k) std::copy(zeta.begin(), zeta.end(), z0.begin() + k * d);
  res.iterates.push_back(std::move(z0));

  std::vector<double> sig(d * d), drift(d), acc(zeta.begin(), zeta.end());
  int growth = 0;
  for (int it = 0; it < iterations; ++it) {
    const auto& prev = res.iterates.back();
    std::vector<double> next(rows * d);
    std::copy(zeta.begin(), zeta.end(), acc.begin());
    std::copy(acc.begin(), acc.end(), next.begin());
    for (std::size_t k = 0; k < path.steps; ++k) {
      euler_step(problem, std::span(prev.data() + k * d, d), path.increment(k), path.dt, sig, drift, acc);
      std::copy(acc.begin(), acc.end(), next.begin() + static_cast<std::ptrdiff_t>((k + 1) * d));
    }
    std::vector<double> running(rows);
    double sup = 0.0;
    for (std::size_t k = 0; k < rows; ++k) {
      double s = 0.0;
      for (std::size_t a = 0; a < d; ++a) {
        const double t = next[k * d + a] - prev[k * d + a];
        s += t * t;
      }
      if (!std::isfinite(s)) throw PicardDivergence("picard_solve: non-finite iterate", res.sup_deviation);
      sup = std::max(sup, s);
      running[k] = sup;
    }
    const double dev = std::sqrt(sup);
    if (!res.sup_deviation.empty() && dev > res.sup_deviation.back()) {
      if (++growth >= 3) {
        res.sup_deviation.push_back(dev);
        throw PicardDivergence("picard_solve: deviations grew for three consecutive iterates",
                               res.sup_deviation);
      }
    } else {
      growth = 0;
    }
    res.sup_deviation.push_back(dev);
    res.running_sq.push_back(std::move(running));
    res.iterates.push_back(std::move(next));
  }
  return res;
}

double sample_ou_stationary(RngStream& rng) { return std::sqrt(0.5) * rng.normal(); }

double sample_quartic_stationary(RngStream& rng, int max_tries) {
  for (int i = 0; i < max_tries; ++i) {
    const double x = rng.normal();
    const double x2 = x * x;
    if (rng.uniform() < std::exp(-0.5 * x2 * x2 + 0.5 * x2 - 0.125)) return x;
  }
  throw NumericalError("sample_quartic_stationary: rejection cap exceeded");
}

double quartic_normalizer() { return std::pow(2.0, 0.75) / std::tgamma(0.25); }

double quartic_density(double x) { return quartic_normalizer() * std::exp(-0.5 * x * x * x * x); }

double quartic_second_moment() { return std::numbers::sqrt2 * std::tgamma(0.75) / std::tgamma(0.25); }

double quartic_cdf(double x) {
  // int_0^x e^{-t^4/2} dt = 2^{1/4}/4 * gamma(1/4, x^4/2), and c 2^{1/4} Gamma(1/4)/4 = 1/2
  if (x == 0.0) return 0.5;
  const double p = boost::math::gamma_p(0.25, 0.5 * x * x * x * x);
  return 0.5 + std::copysign(0.5 * p, x);
}

double fokker_planck_residual(const std::function<double(double)>& density,
                              const std::function<double(double)>& drift,
                              const std::function<double(double)>& diffusion,
                              const std::vector<double>& grid, double h) {
  auto flux_part = [&](double x) { return drift(x) * density(x); };
  auto diff_part = [&](double x) {
    const double f = diffusion(x);
    return f * f * density(x);
  };
  double worst = 0.0, peak = 0.0;
  for (double x : grid) {
    const double first = (flux_part(x + h) - flux_part(x - h)) / (2.0 * h);
    const double second = (diff_part(x + h) - 2.0 * diff_part(x) + diff_part(x - h)) / (h * h);
    worst = std::max(worst, std::abs(-first + 0.5 * second));
    peak = std::max(peak, density(x));
  }
  return peak > 0.0 ? worst / peak : worst;
}

std::vector<double> z_from_y(const std::vector<SobolevVector>& ys, const CoeffField& field,
                             const BrownianPath& path, std::span<const double> z0) {
  if (ys.size() < path.steps) throw ConfigError("z_from_y: Y path shorter than the Brownian grid");
  if (path.dim != field.dim) throw ConfigError("z_from_y: dimension mismatch");
  const auto d = static_cast<std::size_t>(field.dim);
  if (!z0.empty() && z0.size() != d) throw ConfigError("z_from_y: start has wrong dimension");
  std::vector<double> z((path.steps + 1) * d, 0.0);
  if (!z0.empty()) std::copy(z0.begin(), z0.end(), z.begin());
  for (std::size_t k = 0; k < path.steps; ++k) {
    const Eigen::MatrixXd s = sigma_pairing(field, ys[k]);
    const Eigen::VectorXd b = drift_pairing(field, ys[k]);
    const auto db = path.increment(k);
    for (std::size_t i = 0; i < d; ++i) {
      double v = b[static_cast<Eigen::Index>(i)] * path.dt;
      for (std::size_t j = 0; j < d; ++j) v += s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * db[j];
      z[(k + 1) * d + i] = z[k * d + i] + v;
    }
  }
  return z;
}

void write_path_csv(std::ostream& os, const PathResult& path) {
  os << "t";
  for (int a = 0; a < path.dim; ++a) os << ",Z_" << (a + 1);
  os << ",exploded\n";
  char buf[64];
  for (std::size_t k = 0; k < path.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", path.dt * static_cast<double>(k));
    os << buf;
    for (double v : path.state(k)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << ',' << buf;
    }
    os << ',' << (path.alive(k) ? 0 : 1) << '\n';
  }
}

SdeProblem ou_problem(int dim, double explosion_level) {
  SdeProblem p;
  p.dim = dim;
  p.label = "ou";
  p.explosion_level = explosion_level;
  p.drift = [](std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = -x[i];
  };
  p.diffusion = [dim](std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (int i = 0; i < dim; ++i) out[static_cast<std::size_t>(i * dim + i)] = 1.0;
  };
  p.initial = [dim](RngStream& rng) {
    std::vector<double> z(static_cast<std::size_t>(dim));
    for (double& v : z) v = sample_ou_stationary(rng);
    return z;
  };
  return p;
}

SdeProblem quartic_problem(double explosion_level) {
  SdeProblem p;
  p.dim = 1;
  p.label = "quartic";
  p.explosion_level = explosion_level;
  p.drift = [](std::span<const double> x, std::span<double> out) { out[0] = -x[0] * x[0] * x[0]; };
  p.diffusion = [](std::span<const double>, std::span<double> out) { out[0] = 1.0; };
  p.initial = [](RngStream& rng) { return std::vector<double>{sample_quartic_stationary(rng)}; };
  return p;
}

SdeProblem polynomial_problem(const std::vector<Polynomial>& sigma, const std::vector<Polynomial>& drift,
                              double explosion_level) {
  const auto d = drift.size();
  if (d == 0 || sigma.size() != d * d) throw ConfigError("polynomial_problem: expected d*d and d entries");
  SdeProblem p;
  p.dim = static_cast<int>(d);
  p.label = "polynomial";
  p.explosion_level = explosion_level;
  p.drift = [drift](std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < drift.size(); ++i) out[i] = drift[i](x);
  };
  p.diffusion = [sigma](std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < sigma.size(); ++i) out[i] = sigma[i](x);
  };
  return p;
}

SdeProblem pairing_problem(std::shared_ptr<const FieldEvaluator> evaluator, double explosion_level) {
  SdeProblem p;
  p.dim = evaluator->dim();
  p.label = "pairing";
  p.explosion_level = explosion_level;
  p.drift = [evaluator](std::span<const double> x, std::span<double> out) { evaluator->b_bar(x, out); };
  p.diffusion = [evaluator](std::span<const double> x, std::span<double> out) {
    evaluator->sigma_bar(x, out);
  };
  return p;
}

}  // namespace hslift
