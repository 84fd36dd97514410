#include "hslift/stationarity.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace hslift {

Observable Observable::pairing(std::string name, const SobolevVector& phi) {
  Observable o;
  o.name = std::move(name);
  o.kind = Kind::pairing;
  o.phi = phi.coeffs();
  return o;
}

Observable Observable::norm(std::string name, const Basis& basis, double p) {
  Observable o;
  o.name = std::move(name);
  o.kind = Kind::norm;
  o.weights = shell_weights(basis, p);
  return o;
}

double Observable::operator()(const Eigen::VectorXd& y) const {
  return kind == Kind::pairing ? phi.dot(y) : weights.cwiseProduct(y).norm();
}

XiMixture XiMixture::single(SobolevVector member, std::string name) {
  return {{std::move(member)}, {std::move(name)}, {1.0}};
}

std::size_t XiMixture::sample(RngStream& rng) const {
  if (members.empty() || weights.size() != members.size()) throw ConfigError("xi mixture is empty or malformed");
  if (members.size() == 1) return 0;
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("xi mixture weights must be non-negative");
    total += w;
  }
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return weights.size() - 1;
}

std::size_t Ensemble::valid() const {
  return static_cast<std::size_t>(std::count_if(paths.begin(), paths.end(), [](const auto& p) { return p.valid; }));
}

std::vector<double> Ensemble::samples(std::size_t observable, std::size_t time) const {
  const std::size_t m = observable_names.size();
  std::vector<double> out;
  for (const auto& p : paths) {
    if (p.valid) out.push_back(p.values[time * m + observable]);
  }
  return out;
}

std::vector<double> Ensemble::z_samples(std::size_t axis, std::size_t time) const {
  std::vector<double> out;
  for (const auto& p : paths) {
    if (p.valid) out.push_back(p.z[time * static_cast<std::size_t>(dim) + axis]);
  }
  return out;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(n, 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      try {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

std::vector<std::size_t> grid_steps(const std::vector<double>& times, double dt) {
  std::vector<std::size_t> steps;
  for (double t : times) {
    if (!(t >= 0.0)) throw ConfigError("recording times must be non-negative");
    const double k = std::round(t / dt);
    if (std::abs(k * dt - t) > 1e-9 * std::max(1.0, t)) {
      throw ConfigError("recording time " + std::to_string(t) + " is not on the dt grid");
    }
    steps.push_back(static_cast<std::size_t>(k));
  }
  return steps;
}

double euclid(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

Ensemble run_ensemble(const EnsembleConfig& config) {
  if (config.times.empty()) throw ConfigError("ensemble needs at least one recording time");
  if (config.n_paths == 0) throw ConfigError("ensemble needs at least one path");
  if (!(config.dt > 0.0)) throw ConfigError("dt must be positive");
  if (config.xi.members.empty()) throw ConfigError("ensemble needs an initial condition xi");
  const auto steps = grid_steps(config.times, config.dt);
  const std::size_t horizon = *std::max_element(steps.begin(), steps.end());
  const int d = config.problem.dim;
  const auto ud = static_cast<std::size_t>(d);
  const auto& basis = config.xi.members.front().basis_ptr();
  for (const auto& m : config.xi.members) m.require_same_basis(config.xi.members.front());
  if (basis->dim() != d) throw ConfigError("xi and SDE dimensions differ");
  if (!config.z0 && !config.problem.initial) throw ConfigError("no initial law and no fixed start");
  if (config.z0 && config.z0->size() != ud) throw ConfigError("fixed start has the wrong dimension");

  const Translator translator(basis);
  std::optional<Eigen::VectorXd> sup_weights;
  if (config.sup_norm_p) sup_weights = shell_weights(*basis, *config.sup_norm_p);

  Ensemble ens;
  ens.dim = d;
  ens.seed = config.seed;
  ens.times = config.times;
  for (const auto& o : config.observables) ens.observable_names.push_back(o.name);
  ens.paths.resize(config.n_paths);

  parallel_for(config.n_paths, config.threads, [&](std::size_t i) {
    PathSummary& out = ens.paths[i];
    try {
      RngStream rng(config.seed, i);
      const std::vector<double> z0 = config.z0 ? *config.z0 : config.problem.initial(rng);
      out.xi_index = config.xi.sample(rng);
      const auto& xi = config.xi.members[out.xi_index];
      const auto path = BrownianPath::make(d, config.dt, horizon, rng);
      const auto zp = simulate_em(config.problem, path, z0);
      out.exploded = zp.exploded;
      if (zp.exit_step && *zp.exit_step <= horizon) {
        out.valid = false;
        out.error = "exit before the last recording time";
        return;
      }
      for (std::size_t k : steps) {
        const auto z = zp.state(k);
        out.z.insert(out.z.end(), z.begin(), z.end());
        const Eigen::VectorXd y = translator.apply(z, xi.coeffs());
        for (const auto& o : config.observables) out.values.push_back(o(y));
      }
      if (sup_weights) {
        out.xi_norm = sup_weights->cwiseProduct(xi.coeffs()).norm();
        double sup = 0.0, disp = 0.0;
        for (std::size_t k = 0; k <= horizon; ++k) {
          const double n = sup_weights->cwiseProduct(translator.apply(zp.state(k), xi.coeffs())).norm();
          if (k == 0) out.y0_norm = n;
          sup = std::max(sup, n);
          double dz = 0.0;
          for (std::size_t a = 0; a < ud; ++a) {
            const double t = zp.state(k)[a] - zp.state(0)[a];
            dz += t * t;
          }
          disp = std::max(disp, std::sqrt(dz));
        }
        out.sup_norm = sup;
        out.sup_displacement = disp;
      }
    } catch (const Error& e) {
      out.valid = false;
      out.error = e.what();
    }
  });
  return ens;
}

MomentSummary summarize(const std::vector<double>& x) {
  MomentSummary s;
  s.n = x.size();
  if (x.empty()) return s;
  double sum = 0.0;
  for (double v : x) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double c = (v - s.mean) * (v - s.mean);
    m2 += c;
    m4 += c * c;
  }
  const double n = static_cast<double>(s.n);
  s.var = s.n > 1 ? m2 / (n - 1.0) : 0.0;
  m4 /= n;
  s.mean_se = std::sqrt(s.var / n);
  s.var_se = std::sqrt(std::max(0.0, m4 - (m2 / n) * (m2 / n)) / n);
  return s;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ConfigError("KS test needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf) {
  if (a.empty()) throw ConfigError("KS test needs a non-empty sample");
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = cdf(a[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

StationarityResult stationarity_test(const std::string& name, const std::vector<double>& times,
                                     const std::vector<std::vector<double>>& samples,
                                     const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                     const StationarityThresholds& thresholds) {
  if (samples.size() < 2 || times.size() != samples.size()) {
    throw ConfigError("stationarity test needs at least two times");
  }
  for (const auto& s : samples) {
    if (s.size() < thresholds.min_paths) {
      throw ConfigError("stationarity test: " + std::to_string(s.size()) + " valid paths, need " +
                        std::to_string(thresholds.min_paths));
    }
  }
  StationarityResult r;
  r.observable = name;
  r.times = times;
  for (const auto& s : samples) r.per_time.push_back(summarize(s));
  r.pass = true;
  for (const auto& [a, b] : pairs) {
    if (a >= samples.size() || b >= samples.size()) throw ConfigError("stationarity test: time index out of range");
    const auto& sa = r.per_time[a];
    const auto& sb = r.per_time[b];
    PairVerdict v;
    v.first = a;
    v.second = b;
    const double mse = std::hypot(sa.mean_se, sb.mean_se);
    const double vse = std::hypot(sa.var_se, sb.var_se);
    v.mean_z = mse > 0.0 ? std::abs(sa.mean - sb.mean) / mse : (sa.mean == sb.mean ? 0.0 : INFINITY);
    v.var_z = vse > 0.0 ? std::abs(sa.var - sb.var) / vse : (sa.var == sb.var ? 0.0 : INFINITY);
    v.ks = ks_two_sample(samples[a], samples[b]);
    const double n = static_cast<double>(std::min(samples[a].size(), samples[b].size()));
    v.ks_threshold = thresholds.ks_coeff * std::sqrt(2.0 / n);
    v.pass = v.mean_z <= thresholds.z_max && v.var_z <= thresholds.z_max && v.ks <= v.ks_threshold;
    r.pass = r.pass && v.pass;
    r.pairs.push_back(v);
  }
  return r;
}

StationarityResult stationarity_test(const Ensemble& ensemble, std::size_t observable,
                                     const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                     const StationarityThresholds& thresholds) {
  if (observable >= ensemble.observable_names.size()) throw ConfigError("unknown observable index");
  std::vector<std::vector<double>> samples;
  for (std::size_t t = 0; t < ensemble.times.size(); ++t) samples.push_back(ensemble.samples(observable, t));
  return stationarity_test(ensemble.observable_names[observable], ensemble.times, samples, pairs, thresholds);
}

std::vector<std::pair<std::size_t, std::size_t>> pairs_against_first(std::size_t n_times) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t t = 1; t < n_times; ++t) out.emplace_back(0, t);
  return out;
}

std::vector<MarginalVerdict> marginal_check(const Ensemble& ensemble, std::size_t axis, double mean,
                                            double var, double z_max) {
  std::vector<MarginalVerdict> out;
  for (std::size_t t = 0; t < ensemble.times.size(); ++t) {
    MarginalVerdict v;
    v.time = ensemble.times[t];
    v.stats = summarize(ensemble.z_samples(axis, t));
    v.mean_z = std::abs(v.stats.mean - mean) / v.stats.mean_se;
    v.var_z = std::abs(v.stats.var - var) / v.stats.var_se;
    v.pass = v.mean_z <= z_max && v.var_z <= z_max;
    out.push_back(v);
  }
  return out;
}

NormEstimateReport norm_estimate_check(const Ensemble& ensemble, const PolyEnvelope& envelope) {
  NormEstimateReport r;
  double sup = 0.0, init2 = 0.0, pred = 0.0;
  for (const auto& p : ensemble.paths) {
    if (!p.valid || std::isnan(p.sup_norm)) continue;
    ++r.valid;
    sup += p.sup_norm;
    init2 += p.y0_norm * p.y0_norm;
    pred += envelope(p.sup_displacement) * p.y0_norm;
  }
  r.excluded = ensemble.n_paths() - r.valid;
  if (r.valid == 0) throw ConfigError("norm estimate: no path recorded sup norms");
  const double n = static_cast<double>(r.valid);
  r.mean_sup = sup / n;
  r.rms_initial = std::sqrt(init2 / n);
  r.ratio = r.mean_sup / r.rms_initial;
  r.predictor = pred / n / r.rms_initial;
  r.finite = std::isfinite(r.ratio) && std::isfinite(r.predictor);
  return r;
}

LocalizedReport localized_norm_check(const LocalizedConfig& config) {
  if (!(config.radius > 0.0)) throw ConfigError("localization radius must be positive");
  const auto& basis = config.xi.members.front().basis_ptr();
  const Translator translator(basis);
  const Eigen::VectorXd w = shell_weights(*basis, config.p);
  SdeProblem stopped = config.problem;
  stopped.explosion_level = config.radius;
  const auto steps = static_cast<std::size_t>(std::llround(config.horizon / config.dt));
  const auto d = static_cast<std::size_t>(stopped.dim);

  LocalizedReport r;
  r.paths = config.n_paths;
  const double root = config.envelope.sup_on_ball(config.radius);
  r.bound_factor = root * root;
  std::vector<double> ratio(config.n_paths, 0.0);
  std::vector<char> exited(config.n_paths, 0);
  parallel_for(config.n_paths, config.threads, [&](std::size_t i) {
    RngStream rng(config.seed, i);
    const std::vector<double> z0 = stopped.initial(rng);
    const auto& xi = config.xi.members[config.xi.sample(rng)];
    const auto path = BrownianPath::make(stopped.dim, config.dt, steps, rng);
    const auto zp = simulate_em(stopped, path, z0);
    double sup = 0.0;
    const std::size_t last = zp.exit_step ? *zp.exit_step : steps;
    std::vector<double> z(d);
    for (std::size_t k = 0; k <= last; ++k) {
      std::copy(zp.state(k).begin(), zp.state(k).end(), z.begin());
      if (zp.exit_step && k == last) {
        const double len = euclid(z);
        for (double& v : z) v *= config.radius / len;
      }
      const double n = w.cwiseProduct(translator.apply(z, xi.coeffs())).norm();
      sup = std::max(sup, n * n);
    }
    const double xi2 = w.cwiseProduct(xi.coeffs()).squaredNorm();
    ratio[i] = sup / (r.bound_factor * xi2);
    exited[i] = zp.exit_step ? 1 : 0;
  });
  for (std::size_t i = 0; i < config.n_paths; ++i) {
    r.exits += static_cast<std::size_t>(exited[i]);
    if (ratio[i] > 1.0 + 1e-12) ++r.violations;
    r.worst_ratio = std::max(r.worst_ratio, ratio[i]);
  }
  return r;
}

nlohmann::json to_json(const MomentSummary& s) {
  return {{"n", s.n}, {"mean", s.mean}, {"var", s.var}, {"mean_se", s.mean_se}, {"var_se", s.var_se}};
}

nlohmann::json to_json(const StationarityResult& r) {
  nlohmann::json j;
  j["observable"] = r.observable;
  j["times"] = r.times;
  j["per_time"] = nlohmann::json::array();
  for (const auto& s : r.per_time) j["per_time"].push_back(to_json(s));
  j["pairs"] = nlohmann::json::array();
  for (const auto& v : r.pairs) {
    j["pairs"].push_back({{"t1", r.times[v.first]},
                          {"t2", r.times[v.second]},
                          {"mean_z", v.mean_z},
                          {"var_z", v.var_z},
                          {"ks", v.ks},
                          {"ks_threshold", v.ks_threshold},
                          {"pass", v.pass}});
  }
  j["pass"] = r.pass;
  return j;
}

nlohmann::json to_json(const std::vector<MarginalVerdict>& v) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& m : v) {
    j.push_back({{"t", m.time}, {"stats", to_json(m.stats)}, {"mean_z", m.mean_z}, {"var_z", m.var_z}, {"pass", m.pass}});
  }
  return j;
}

nlohmann::json to_json(const NormEstimateReport& r) {
  return {{"valid", r.valid},         {"excluded", r.excluded}, {"mean_sup", r.mean_sup},
          {"rms_initial", r.rms_initial}, {"ratio", r.ratio},   {"predictor", r.predictor},
          {"finite", r.finite}};
}

nlohmann::json to_json(const LocalizedReport& r) {
  return {{"paths", r.paths},
          {"exits", r.exits},
          {"violations", r.violations},
          {"bound_factor", r.bound_factor},
          {"worst_ratio", r.worst_ratio}};
}

}  // namespace hslift
