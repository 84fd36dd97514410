#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hslift/sde.hpp"
#include "hslift/sobolev.hpp"

namespace hslift {

/// A scalar functional of Y_t: either <Y_t, phi> or ||Y_t||_p.
struct Observable {
  enum class Kind { pairing, norm };

  std::string name;
  Kind kind = Kind::pairing;
  Eigen::VectorXd phi;      // pairing
  Eigen::VectorXd weights;  // norm: (2|n|+d)^p

  static Observable pairing(std::string name, const SobolevVector& phi);
  static Observable norm(std::string name, const Basis& basis, double p);
  double operator()(const Eigen::VectorXd& y) const;
};

/// Finite mixture of members of C; one of them is drawn per path.
struct XiMixture {
  std::vector<SobolevVector> members;
  std::vector<std::string> names;
  std::vector<double> weights;

  static XiMixture single(SobolevVector member, std::string name);
  std::size_t sample(RngStream& rng) const;
};

struct EnsembleConfig {
  SdeProblem problem;
  XiMixture xi;
  std::vector<Observable> observables;
  double dt = 1e-3;
  std::vector<double> times;  // must sit on the dt grid
  std::uint64_t seed = 0;
  std::size_t n_paths = 1000;
  /// Deterministic start overriding problem.initial.
  std::optional<std::vector<double>> z0;
  /// Track sup_t ||Y_t||_p over every grid step at this p.
  std::optional<double> sup_norm_p;
  /// Worker threads; 0 picks the hardware concurrency.
  std::size_t threads = 0;
};

struct PathSummary {
  bool valid = true;
  bool exploded = false;
  std::string error;
  std::size_t xi_index = 0;
  std::vector<double> z;       // times x d
  std::vector<double> values;  // times x observables
  double xi_norm = std::numeric_limits<double>::quiet_NaN();
  double y0_norm = std::numeric_limits<double>::quiet_NaN();
  double sup_norm = std::numeric_limits<double>::quiet_NaN();
  /// sup_t |Z_t - Z_0|
  double sup_displacement = std::numeric_limits<double>::quiet_NaN();
};

struct Ensemble {
  int dim = 1;
  std::uint64_t seed = 0;
  std::vector<double> times;
  std::vector<std::string> observable_names;
  std::vector<PathSummary> paths;

  std::size_t n_paths() const noexcept { return paths.size(); }
  std::size_t valid() const;
  std::size_t excluded() const { return n_paths() - valid(); }
  /// Observable values at one time over the valid paths, in path order.
  std::vector<double> samples(std::size_t observable, std::size_t time) const;
  std::vector<double> z_samples(std::size_t axis, std::size_t time) const;
};

/// Paths are independent: path i draws Z_0, xi and its increments from
/// RngStream(seed, i), and the results are stored by index, so the output
/// does not depend on the thread count. Path errors are recorded, not thrown.
Ensemble run_ensemble(const EnsembleConfig& config);

/// Runs fn(i) for i in [0, n) over a pool of threads.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

struct MomentSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double var = 0.0;
  double mean_se = 0.0;  // sqrt(var / n)
  double var_se = 0.0;   // sqrt((m4 - var^2) / n)
};

MomentSummary summarize(const std::vector<double>& x);

/// sup |F_a - F_b| of the two empirical distribution functions.
double ks_two_sample(std::vector<double> a, std::vector<double> b);
/// sup |F_a - cdf|.
double ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf);

struct StationarityThresholds {
  double z_max = 3.0;
  /// KS statistic must stay below ks_coeff * sqrt(2/n).
  double ks_coeff = 1.36;
  std::size_t min_paths = 1000;
};

struct PairVerdict {
  std::size_t first = 0;
  std::size_t second = 0;
  double mean_z = 0.0;
  double var_z = 0.0;
  double ks = 0.0;
  double ks_threshold = 0.0;
  bool pass = false;
};

struct StationarityResult {
  std::string observable;
  std::vector<double> times;
  std::vector<MomentSummary> per_time;
  std::vector<PairVerdict> pairs;
  bool pass = false;
};

/// samples[t] holds one value per path. Throws ConfigError below min_paths.
StationarityResult stationarity_test(const std::string& name, const std::vector<double>& times,
                                     const std::vector<std::vector<double>>& samples,
                                     const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                     const StationarityThresholds& thresholds = {});
StationarityResult stationarity_test(const Ensemble& ensemble, std::size_t observable,
                                     const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                     const StationarityThresholds& thresholds = {});

/// (0, t) for every later time t.
std::vector<std::pair<std::size_t, std::size_t>> pairs_against_first(std::size_t n_times);

struct MarginalVerdict {
  double time = 0.0;
  MomentSummary stats;
  double mean_z = 0.0;
  double var_z = 0.0;
  bool pass = false;
};

/// Z^axis_t against a target mean and variance at every recorded time.
std::vector<MarginalVerdict> marginal_check(const Ensemble& ensemble, std::size_t axis, double mean,
                                            double var, double z_max = 3.0);

struct NormEstimateReport {
  std::size_t valid = 0;
  std::size_t excluded = 0;
  double mean_sup = 0.0;      // E sup_t ||Y_t||_p
  double rms_initial = 0.0;   // (E ||Y_0||_p^2)^{1/2}
  double ratio = 0.0;         // the measured constant
  /// E[P(sup |Z_t - Z_0|) ||Y_0||_p] / (E ||Y_0||_p^2)^{1/2}: an upper
  /// estimate of the ratio from the translation envelope.
  double predictor = 0.0;
  bool finite = false;
};

/// Needs an ensemble run with sup_norm_p set.
NormEstimateReport norm_estimate_check(const Ensemble& ensemble, const PolyEnvelope& envelope);

struct LocalizedConfig {
  SdeProblem problem;
  XiMixture xi;
  double radius = 3.0;
  double p = 1.0;
  double dt = 1e-3;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  std::size_t n_paths = 1000;
  PolyEnvelope envelope;
  std::size_t threads = 0;
};

struct LocalizedReport {
  std::size_t paths = 0;
  std::size_t exits = 0;
  std::size_t violations = 0;
  double bound_factor = 0.0;  // sup_{|x| <= n} P(|x|)^2
  double worst_ratio = 0.0;   // max_path sup_t ||Y_t||^2 / (bound_factor ||xi||^2)
};

/// Pathwise sup_t ||Y_{t ^ eta_n}||_p^2 <= P(n)^2 ||xi||_p^2 with eta_n the
/// first |Z| >= n; the exit state is projected radially onto |Z| = n.
LocalizedReport localized_norm_check(const LocalizedConfig& config);

nlohmann::json to_json(const MomentSummary& s);
nlohmann::json to_json(const StationarityResult& r);
nlohmann::json to_json(const std::vector<MarginalVerdict>& v);
nlohmann::json to_json(const NormEstimateReport& r);
nlohmann::json to_json(const LocalizedReport& r);

}  // namespace hslift
