#include "hslift/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hslift/catalog.hpp"
#include "hslift/hermite.hpp"

namespace hslift {

namespace {

// "name(arg)" -> arg, or nullopt when spec does not start with name(.
std::optional<std::string> call_argument(const std::string& spec, const std::string& name) {
  if (spec.size() < name.size() + 2 || spec.rfind(name + "(", 0) != 0 || spec.back() != ')') return std::nullopt;
  return spec.substr(name.size() + 1, spec.size() - name.size() - 2);
}

double parse_number(const std::string& s, const std::string& context) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ConfigError("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot read a number from '" + s + "' in " + context);
  }
}

int parse_int(const std::string& s, const std::string& context) {
  const double v = parse_number(s, context);
  if (v != std::floor(v) || v < 0) throw ConfigError("expected a non-negative integer in " + context);
  return static_cast<int>(v);
}

}  // namespace

SobolevVector named_vector(const std::string& spec, const BasisPtr& basis, double tag) {
  const int d = basis->dim();
  if (auto arg = call_argument(spec, "h")) {
    std::vector<int> n(static_cast<std::size_t>(d), 0);
    n[0] = parse_int(*arg, spec);
    if (n[0] > basis->max_degree()) throw ConfigError(spec + " lies outside the basis");
    return SobolevVector::unit(basis, MultiIndex(n), tag);
  }
  if (auto arg = call_argument(spec, "delta")) {
    const double x = parse_number(*arg, spec);
    return delta_coeffs(std::vector<double>(static_cast<std::size_t>(d), x), basis, tag);
  }
  if (auto arg = call_argument(spec, "monomial")) {
    std::vector<int> k(static_cast<std::size_t>(d), 0);
    k[0] = parse_int(*arg, spec);
    return monomial_distribution(basis, k, tag);
  }
  const ScalarField f1 = catalog::named_function(spec);
  // product over the axes in d > 1
  const ScalarField f = [f1](std::span<const double> x) {
    double v = 1.0;
    for (double xi : x) v *= f1(std::span(&xi, 1));
    return v;
  };
  return expand_function(f, basis, tag);
}

Example make_example(const std::string& name, const BasisPtr& basis, double p) {
  const int d = basis->dim();
  Example ex;
  ex.name = name;
  if (name == "ou") {
    ex.field = ou_field(basis, -p);
    std::vector<Polynomial> sigma, drift;
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) sigma.push_back(i == j ? Polynomial::constant(d, 1.0) : Polynomial(d));
      std::vector<int> e(static_cast<std::size_t>(d), 0);
      e[static_cast<std::size_t>(i)] = 1;
      drift.push_back(Polynomial::monomial(d, e, -1.0));
    }
    ex.set_c = SetCSpec::make(sigma, drift, sigma, drift);
    ex.problem = ou_problem(d);
  } else if (name == "quartic") {
    if (d != 1) throw ConfigError("the quartic example is one-dimensional");
    ex.field = quartic_field(basis, -p);
    ex.set_c = quartic_set_c();
    ex.problem = quartic_problem();
  } else if (name == "zero") {
    ex.field = zero_field(basis, -p);
    const std::vector<Polynomial> s(static_cast<std::size_t>(d * d), Polynomial(d));
    const std::vector<Polynomial> b(static_cast<std::size_t>(d), Polynomial(d));
    ex.set_c = SetCSpec::make(s, b, s, b);
    ex.problem = polynomial_problem(s, b);
    ex.problem.label = "zero";
    ex.problem.initial = [d](RngStream&) { return std::vector<double>(static_cast<std::size_t>(d), 0.0); };
  } else {
    throw ConfigError("unknown example '" + name + "' (expected ou, quartic or zero)");
  }
  return ex;
}

Example make_custom_example(const CustomFields& c, const BasisPtr& basis, double p) {
  if (basis->dim() != 1) throw ConfigError("custom examples are one-dimensional");
  for (const auto* v : {&c.sigma, &c.b, &c.f, &c.g}) {
    if (v->empty()) throw ConfigError("example=custom needs sigma, b, f and g");
  }
  const std::vector<Polynomial> s{Polynomial::univariate(c.sigma)}, b{Polynomial::univariate(c.b)};
  const std::vector<Polynomial> f{Polynomial::univariate(c.f)}, g{Polynomial::univariate(c.g)};
  Example ex;
  ex.name = "custom";
  ex.field = CoeffField::polynomial(basis, s, b, -p);
  ex.set_c = SetCSpec::make(s, b, f, g);
  ex.problem = polynomial_problem(f, g);
  ex.problem.label = "custom";
  return ex;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("slope fit needs two or more points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

PartialSumReport partial_sums(const SobolevVector& v, double p) {
  const auto& basis = v.basis();
  const int N = basis.max_degree();
  PartialSumReport r;
  r.p = p;
  r.partial.assign(static_cast<std::size_t>(N) + 1, 0.0);
  const Eigen::VectorXd w = shell_weights(basis, p);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const double t = w[static_cast<Eigen::Index>(i)] * v[i];
    r.partial[static_cast<std::size_t>(basis.order(i))] += t * t;
  }
  for (std::size_t k = 1; k < r.partial.size(); ++k) r.partial[k] += r.partial[k - 1];
  r.total = r.partial.back();
  r.tail_fraction = r.total > 0.0 ? (r.total - r.partial[static_cast<std::size_t>(N / 2)]) / r.total : 0.0;
  if (N >= 16) {
    std::vector<double> ks, ss;
    const double lo = std::log(N / 8.0), hi = std::log(static_cast<double>(N));
    for (int i = 0; i < 16; ++i) {
      const auto k = static_cast<std::size_t>(std::llround(std::exp(lo + (hi - lo) * i / 15.0)));
      if (!ks.empty() && static_cast<double>(k) == ks.back()) continue;
      ks.push_back(static_cast<double>(k));
      ss.push_back(r.partial[k]);
    }
    bool positive = true;
    for (double s : ss) positive = positive && s > 0.0;
    if (positive && ks.size() >= 2) r.growth_slope = loglog_slope(ks, ss);
  }
  return r;
}

CorrespondenceReport correspondence_ladder(const CorrespondenceConfig& c) {
  if (c.halvings < 0 || !(c.dt > 0.0) || !(c.T > 0.0) || c.n_paths == 0) {
    throw ConfigError("correspondence: need dt, T > 0, halvings >= 0 and paths >= 1");
  }
  const auto basis = Basis::make(1, c.N);
  const auto ex = c.example == "custom" ? make_custom_example(c.custom, basis, c.p) : make_example(c.example, basis, c.p);
  const auto xi = named_vector(c.xi, basis, c.p);
  const auto evaluator = std::make_shared<const FieldEvaluator>(ex.field, xi);
  const auto problem = pairing_problem(evaluator, c.explosion_level);
  const SpdeOperators ops(ex.field);
  const Translator translator(basis);
  const Eigen::VectorXd w = shell_weights(*basis, c.p - 1.0);
  // both sides start from Y_0 = tau_{z0} xi
  const auto y0 = translator.apply(c.z0, xi);

  const std::size_t levels = static_cast<std::size_t>(c.halvings) + 1;
  const double fine_dt = c.dt / std::ldexp(1.0, c.halvings);
  const auto fine_steps = static_cast<std::size_t>(std::llround(c.T / fine_dt));
  if (fine_steps % (std::size_t{1} << c.halvings) != 0) throw ConfigError("T is not a multiple of dt");

  std::vector<std::vector<double>> err(c.n_paths, std::vector<double>(levels, std::nan("")));
  parallel_for(c.n_paths, c.threads, [&](std::size_t i) {
    const auto fine = BrownianPath::make(1, fine_dt, fine_steps, c.seed, i);
    for (std::size_t l = 0; l < levels; ++l) {
      const auto path = fine.coarsen(std::size_t{1} << (static_cast<std::size_t>(c.halvings) - l));
      const auto zp = simulate_em(problem, path, std::vector<double>{c.z0});
      if (zp.exploded) continue;
      const Eigen::VectorXd lifted = translator.apply(zp.state(path.steps), xi.coeffs());
      GalerkinOptions opts;
      opts.record_every = path.steps;
      opts.guard_factor = c.guard_factor;
      const auto gal = galerkin_simulate(y0, ops, path, c.p, opts);
      const double denom = w.cwiseProduct(lifted).norm();
      err[i][l] = w.cwiseProduct(lifted - gal.states.back().coeffs()).norm() / denom;
    }
  });

  CorrespondenceReport r;
  std::vector<double> dts, means;
  for (std::size_t l = 0; l < levels; ++l) {
    CorrespondenceLevel lv;
    lv.dt = c.dt / std::ldexp(1.0, static_cast<int>(l));
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < c.n_paths; ++i) {
      if (std::isnan(err[i][l])) {
        ++lv.explosions;
        continue;
      }
      sum += err[i][l];
      lv.max_error = std::max(lv.max_error, err[i][l]);
      ++n;
    }
    lv.mean_error = n ? sum / static_cast<double>(n) : std::nan("");
    r.levels.push_back(lv);
    dts.push_back(lv.dt);
    means.push_back(lv.mean_error);
  }
  r.monotone = r.strictly_decreasing = true;
  for (std::size_t l = 1; l < levels; ++l) {
    r.monotone = r.monotone && means[l] <= means[l - 1];
    r.strictly_decreasing = r.strictly_decreasing && means[l] < means[l - 1];
  }
  bool positive = levels >= 2;
  for (double m : means) positive = positive && m > 0.0;
  r.slope = positive ? loglog_slope(dts, means) : 0.0;
  return r;
}

ItoReport ito_ladder(const ItoConfig& c) {
  if (c.fine_exponent < c.coarse_exponent + 1) throw ConfigError("ito ladder needs two or more levels");
  const auto basis = Basis::make(1, c.N);
  const auto xi = named_vector(c.xi, basis, c.p);
  const auto problem = ou_problem(1);
  const double fine_dt = std::ldexp(1.0, -c.fine_exponent);
  const auto fine_steps = static_cast<std::size_t>(std::llround(c.T / fine_dt));
  const std::size_t levels = static_cast<std::size_t>(c.fine_exponent - c.coarse_exponent) + 1;
  std::vector<std::vector<double>> res(c.n_paths, std::vector<double>(levels));
  parallel_for(c.n_paths, 0, [&](std::size_t i) {
    const auto fine = BrownianPath::make(1, fine_dt, fine_steps, c.seed, i);
    for (std::size_t l = 0; l < levels; ++l) {
      const auto path = fine.coarsen(std::size_t{1} << (levels - 1 - l));
      const auto zp = simulate_em(problem, path, std::vector<double>{c.z0});
      res[i][l] = ito_residual(xi, zp, c.p, c.mode, &problem).max;
    }
  });
  ItoReport r;
  for (std::size_t l = 0; l < levels; ++l) {
    r.dts.push_back(std::ldexp(1.0, -(c.coarse_exponent + static_cast<int>(l))));
    double s = 0.0;
    for (const auto& row : res) s += row[l];
    r.max_residual.push_back(s / static_cast<double>(c.n_paths));
  }
  r.slope = loglog_slope(r.dts, r.max_residual);
  return r;
}

PicardReport picard_experiment(const PicardConfig& c) {
  const auto problem = ou_problem(1);
  const double fine_dt = std::ldexp(1.0, -c.fine_exponent);
  const auto steps = static_cast<std::size_t>(std::llround(c.T / fine_dt));
  const auto K = static_cast<std::size_t>(c.iterations);
  std::vector<std::vector<std::vector<double>>> running(c.n_paths);
  std::vector<std::vector<double>> em_err(c.n_paths, std::vector<double>(c.em_exponents.size()));
  parallel_for(c.n_paths, 0, [&](std::size_t i) {
    const auto fine = BrownianPath::make(1, fine_dt, steps, c.seed, i);
    const std::vector<double> zeta{c.z0};
    auto pr = picard_solve(problem, fine, zeta, c.iterations);
    running[i] = std::move(pr.running_sq);
    const auto& ref = pr.iterates.back();
    for (std::size_t l = 0; l < c.em_exponents.size(); ++l) {
      if (c.em_exponents[l] > c.fine_exponent) throw ConfigError("EM level finer than the reference");
      const std::size_t factor = std::size_t{1} << (c.fine_exponent - c.em_exponents[l]);
      const auto zp = simulate_em(problem, fine.coarsen(factor), zeta);
      double sup = 0.0;
      for (std::size_t j = 0; j < zp.size(); ++j) sup = std::max(sup, std::abs(zp.state(j)[0] - ref[j * factor]));
      em_err[i][l] = sup;
    }
  });

  PicardReport r;
  for (std::size_t j = 0; j <= steps; ++j) r.times.push_back(fine_dt * static_cast<double>(j));
  r.mean_sq.assign(K, std::vector<double>(steps + 1, 0.0));
  for (const auto& path : running) {
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t j = 0; j <= steps; ++j) r.mean_sq[k][j] += path[k][j] / static_cast<double>(c.n_paths);
    }
  }
  // log D_k(T) + log (k+1)! = log C + (k+1) log(R T)
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < K; ++k) {
    xs.push_back(static_cast<double>(k + 1));
    ys.push_back(std::log(r.mean_sq[k][steps]) + std::lgamma(static_cast<double>(k) + 2.0));
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    mx += xs[k] / static_cast<double>(K);
    my += ys[k] / static_cast<double>(K);
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    sxy += (xs[k] - mx) * (ys[k] - my);
    sxx += (xs[k] - mx) * (xs[k] - mx);
  }
  const double log_rt = K > 1 ? sxy / sxx : 0.0;
  r.R = std::exp(log_rt) / c.T;
  auto envelope = [&](std::size_t k, double t, double C) {
    return C * std::exp(static_cast<double>(k + 1) * std::log(r.R * t) - std::lgamma(static_cast<double>(k) + 2.0));
  };
  for (std::size_t k = 0; k < K; ++k) r.C = std::max(r.C, r.mean_sq[k][steps] / envelope(k, c.T, 1.0));
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 1; j <= steps; ++j) {
      if (r.mean_sq[k][j] > envelope(k, r.times[j], r.C) * (1.0 + 1e-12)) ++r.violations;
    }
  }
  for (std::size_t l = 0; l < c.em_exponents.size(); ++l) {
    r.em_dts.push_back(std::ldexp(1.0, -c.em_exponents[l]));
    double s = 0.0;
    for (const auto& row : em_err) s += row[l];
    r.em_errors.push_back(s / static_cast<double>(c.n_paths));
  }
  r.em_slope = r.em_dts.size() >= 2 ? loglog_slope(r.em_dts, r.em_errors) : 0.0;
  return r;
}

GapReport monotonicity_corpus(const SpdeOperators& ops, double p, std::size_t count, std::uint64_t seed) {
  GapReport r;
  r.samples = count;
  r.finite = true;
  double sum = 0.0;
  r.max = -std::numeric_limits<double>::infinity();
  const auto& basis = ops.basis();
  for (std::size_t i = 0; i < count; ++i) {
    RngStream rng(seed, i);
    Eigen::VectorXd c(static_cast<Eigen::Index>(basis->size()));
    for (Eigen::Index k = 0; k < c.size(); ++k) c[k] = rng.normal();
    SobolevVector phi(basis, c, p);
    phi *= 1.0 / sobolev_norm(phi, p);
    const auto t = monotonicity_terms(phi, ops, p, sigma_pairing(ops.field(), phi), drift_pairing(ops.field(), phi));
    const double g = (t.drift + t.diffusion) / t.norm2;
    r.scale += (std::abs(t.drift) + t.diffusion) / t.norm2 / static_cast<double>(count);
    r.finite = r.finite && std::isfinite(g);
    r.max = std::max(r.max, g);
    sum += g;
  }
  r.mean = count ? sum / static_cast<double>(count) : 0.0;
  return r;
}

bool stable_within(double a, double b, double rel, double floor) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + floor;
}

namespace {

Check make_check(std::string name, double value, double tol, const std::string& rel) {
  const bool pass = rel == "<=" ? value <= tol : value >= tol;
  return {std::move(name), value, tol, rel, pass && std::isfinite(value)};
}

}  // namespace

std::vector<Check> selftest(bool quick, std::uint64_t seed) {
  std::vector<Check> out;
  const int N = quick ? 20 : 30;

  {  // orthonormality
    const auto rule = gauss_hermite(2 * N + 16);
    std::vector<std::vector<double>> h;
    for (std::size_t i = 0; i < rule.size(); ++i) h.push_back(hermite_functions(N, rule.nodes[i]));
    double worst = 0.0;
    for (int n = 0; n <= N; ++n) {
      for (int m = 0; m <= N; ++m) {
        double s = 0.0;
        for (std::size_t i = 0; i < rule.size(); ++i) {
          s += rule.scaled_weights[i] * h[i][static_cast<std::size_t>(n)] * h[i][static_cast<std::size_t>(m)];
        }
        worst = std::max(worst, std::abs(s - (n == m ? 1.0 : 0.0)));
      }
    }
    out.push_back(make_check("orthonormality, d=1", worst, 1e-10, "<="));
  }
  {  // derivative and multiplication recurrences on the grid
    const auto basis = Basis::make(1, N + 1);
    const auto D = derivative_matrix(basis, 0);
    const auto M = multiplication_matrix(basis, 0);
    double dworst = 0.0, mworst = 0.0;
    for (int n = 0; n < N; ++n) {
      const auto e = SobolevVector::unit(basis, MultiIndex({n}), 0.0);
      const auto de = D.apply(e), me = M.apply(e);
      for (double x = -4.0; x <= 4.0; x += 0.25) {
        const double h = 1e-4;
        const double fd = (hermite_functions(n, x + h)[static_cast<std::size_t>(n)] -
                           hermite_functions(n, x - h)[static_cast<std::size_t>(n)]) /
                          (2 * h);
        dworst = std::max(dworst, std::abs(reconstruct(de, std::span(&x, 1)) - fd));
        mworst = std::max(mworst, std::abs(reconstruct(me, std::span(&x, 1)) -
                                           x * hermite_functions(n, x)[static_cast<std::size_t>(n)]));
      }
    }
    out.push_back(make_check("derivative recurrence vs finite differences", dworst, 1e-6, "<="));
    out.push_back(make_check("multiplication recurrence vs pointwise", mworst, 1e-6, "<="));
  }
  {  // translation: orthogonality and the two constructions for |x| <= 1
    const int NT = 40;
    const auto basis = Basis::make(1, NT);
    double orth = 0.0, cross = 0.0;
    for (double x : {-1.0, -0.5, 0.5, 1.0}) {
      const auto te = translation_matrix(std::span(&x, 1), basis, TranslationMethod::exponential);
      const auto tq = translation_matrix(std::span(&x, 1), basis, TranslationMethod::quadrature);
      orth = std::max(orth, (te.matrix.transpose() * te.matrix -
                             Eigen::MatrixXd::Identity(te.matrix.rows(), te.matrix.cols()))
                                .cwiseAbs()
                                .maxCoeff());
      const int k = NT - 10 + 1;
      cross = std::max(cross, (te.matrix - tq.matrix).topLeftCorner(k, k).cwiseAbs().maxCoeff());
    }
    out.push_back(make_check("translation orthogonality", orth, 1e-10, "<="));
    out.push_back(make_check("translation exp vs quadrature, |x|<=1, |n|<=N-10", cross, 1e-6, "<="));
  }
  {  // set C, quartic example
    const auto basis = Basis::make(1, 64);
    const auto psi1 = named_vector("psi1", basis, 2.0);
    out.push_back(make_check("psi1 quartic moment residual", set_c_check(psi1, quartic_set_c()).max_residual,
                             1e-10, "<="));
    const auto field = quartic_field(basis, -2.0);
    const FieldEvaluator ev(field, psi1);
    double worst = 0.0;
    for (double x : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
      worst = std::max(worst, std::abs(ev.b_bar(std::span(&x, 1))[0] + x * x * x));
    }
    out.push_back(make_check("b_bar(x; psi1) = -x^3", worst, 1e-6, "<="));
  }
  {  // Ito residual
    ItoConfig ic;
    ic.seed = seed;
    ic.n_paths = quick ? 4 : 8;
    if (quick) ic.fine_exponent = 10;
    const auto r = ito_ladder(ic);
    out.push_back(make_check("Ito residual slope (lower)", r.slope, 0.35, ">="));
    out.push_back(make_check("Ito residual slope (upper)", r.slope, 0.65, "<="));
  }
  {  // Picard envelope
    PicardConfig pc;
    pc.seed = seed;
    pc.n_paths = quick ? 40 : 200;
    const auto r = picard_experiment(pc);
    out.push_back(make_check("Picard envelope violations", static_cast<double>(r.violations), 0.0, "<="));
    out.push_back(make_check("Picard vs EM refinement slope", r.em_slope, 0.35, ">="));
  }
  return out;
}

nlohmann::json to_json(const PartialSumReport& r) {
  return {{"p", r.p}, {"total", r.total}, {"tail_fraction", r.tail_fraction}, {"growth_slope", r.growth_slope}};
}

nlohmann::json to_json(const CorrespondenceReport& r) {
  nlohmann::json j;
  j["levels"] = nlohmann::json::array();
  for (const auto& l : r.levels) {
    j["levels"].push_back(
        {{"dt", l.dt}, {"mean_error", l.mean_error}, {"max_error", l.max_error}, {"explosions", l.explosions}});
  }
  j["slope"] = r.slope;
  j["monotone"] = r.monotone;
  j["strictly_decreasing"] = r.strictly_decreasing;
  return j;
}

nlohmann::json to_json(const ItoReport& r) {
  return {{"dts", r.dts}, {"max_residual", r.max_residual}, {"slope", r.slope}};
}

nlohmann::json to_json(const PicardReport& r) {
  nlohmann::json terminal = nlohmann::json::array();
  for (const auto& row : r.mean_sq) terminal.push_back(row.back());
  return {{"terminal_mean_sq", terminal}, {"C", r.C},          {"R", r.R},
          {"violations", r.violations},  {"em_dts", r.em_dts}, {"em_errors", r.em_errors},
          {"em_slope", r.em_slope}};
}

nlohmann::json to_json(const GapReport& r) {
  return {{"samples", r.samples}, {"max", r.max}, {"mean", r.mean}, {"scale", r.scale}, {"finite", r.finite}};
}

nlohmann::json to_json(const std::vector<Check>& checks) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : checks) {
    j.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"relation", c.relation},
                 {"pass", c.pass}});
  }
  return j;
}

}  // namespace hslift
