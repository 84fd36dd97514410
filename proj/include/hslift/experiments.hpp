#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hslift/fields.hpp"
#include "hslift/sde.hpp"
#include "hslift/spde.hpp"
#include "hslift/stationarity.hpp"

namespace hslift {

/// A named one-dimensional test function expanded on `basis`: psi1, psi2,
/// psi2_printed, gaussian(v), h(n), delta(x), monomial(k).
SobolevVector named_vector(const std::string& spec, const BasisPtr& basis, double tag);

/// Coefficient field, set-C spec and function-form SDE of one example.
struct Example {
  std::string name;
  CoeffField field;
  SetCSpec set_c;
  SdeProblem problem;
};

/// "ou", "quartic" or "zero", on `basis` with coefficients at tag -p.
Example make_example(const std::string& name, const BasisPtr& basis, double p);

/// One-dimensional polynomial coefficients (ascending) of a custom example.
struct CustomFields {
  std::vector<double> sigma, b, f, g;
};

/// Field from sigma and b; the SDE is driven by f and g, which equal
/// sigma_bar and b_bar whenever xi lies in the resulting set C.
Example make_custom_example(const CustomFields& fields, const BasisPtr& basis, double p);

/// Ordinary least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Partial sums S_k = sum_{|n| <= k} (2|n|+d)^{2p} v_n^2 of a squared norm.
struct PartialSumReport {
  double p = 0.0;
  std::vector<double> partial;  // k = 0..N
  double total = 0.0;
  /// (S_N - S_{N/2}) / S_N
  double tail_fraction = 0.0;
  /// log-log slope of S_k over 16 log-spaced shells in [N/8, N]
  double growth_slope = 0.0;
};

PartialSumReport partial_sums(const SobolevVector& v, double p);

struct CorrespondenceConfig {
  std::string example = "ou";
  std::string xi = "psi2";
  CustomFields custom;  // used when example == "custom"
  int N = 40;
  double p = 1.0;
  double T = 0.5;
  double dt = 1e-3;
  int halvings = 3;
  double z0 = 0.3;
  double explosion_level = 1e6;
  double guard_factor = 1e3;
  std::size_t n_paths = 24;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

struct CorrespondenceLevel {
  double dt = 0.0;
  double mean_error = 0.0;  // mean over paths of the relative S_{p-1} distance
  double max_error = 0.0;
  std::size_t explosions = 0;
};

struct CorrespondenceReport {
  std::vector<CorrespondenceLevel> levels;
  double slope = 0.0;
  bool monotone = false;  // mean error non-increasing along the ladder
  bool strictly_decreasing = false;
};

/// Lifted tau_{Z_T} xi against the Galerkin Y_T on one Brownian path per
/// sample, for dt, dt/2, ..., all levels sharing the finest increments.
/// Z uses sigma_bar and b_bar through the pairings with xi.
CorrespondenceReport correspondence_ladder(const CorrespondenceConfig& config);

struct ItoConfig {
  int N = 40;
  double p = 1.0;
  double T = 1.0;
  int coarse_exponent = 7;  // dt = 2^-7 ..
  int fine_exponent = 11;   // .. 2^-11
  double z0 = 0.0;
  std::size_t n_paths = 32;
  std::uint64_t seed = 0;
  Covariation mode = Covariation::bracket;
  std::string xi = "psi1";
};

struct ItoReport {
  std::vector<double> dts;
  std::vector<double> max_residual;  // mean over paths of max_t ||R_t||_{p-1}
  double slope = 0.0;
};

/// Ito residual of tau_{Z_t} xi along OU paths, Z by Euler-Maruyama.
ItoReport ito_ladder(const ItoConfig& config);

struct PicardConfig {
  double T = 1.0;
  int iterations = 8;
  int fine_exponent = 10;
  std::vector<int> em_exponents{4, 5, 6, 7, 8};
  double z0 = 0.5;
  std::size_t n_paths = 200;
  std::uint64_t seed = 0;
};

struct PicardReport {
  std::vector<double> times;
  /// mean_sq[k][j] = E sup_{s <= t_j} |Z^{(k+1)}_s - Z^{(k)}_s|^2
  std::vector<std::vector<double>> mean_sq;
  double C = 0.0;
  double R = 0.0;
  std::size_t violations = 0;
  std::vector<double> em_dts;
  std::vector<double> em_errors;  // mean over paths of the sup-grid difference
  double em_slope = 0.0;
};

/// OU Picard iteration on frozen increments; the envelope C (Rt)^{k+1}/(k+1)!
/// is fitted on the terminal values and checked at every grid time.
PicardReport picard_experiment(const PicardConfig& config);

struct GapReport {
  std::size_t samples = 0;
  double max = 0.0;
  double mean = 0.0;
  /// Mean of (|2 <phi, L phi>| + sum ||A_i phi||^2) / ||phi||^2, the size of
  /// the terms that cancel in the gap.
  double scale = 0.0;
  bool finite = false;
};

/// |a - b| <= rel * max(|a|, |b|) + floor; the floor absorbs rounding when
/// both estimates vanish in exact arithmetic.
bool stable_within(double a, double b, double rel, double floor);

/// Gap over `count` random phi with iid normal coefficients scaled to ||phi||_p = 1.
GapReport monotonicity_corpus(const SpdeOperators& ops, double p, std::size_t count, std::uint64_t seed);

struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  std::string relation;  // "<=" or ">="
  bool pass = false;
};

/// The property battery behind the selftest command.
std::vector<Check> selftest(bool quick, std::uint64_t seed);

nlohmann::json to_json(const PartialSumReport& r);
nlohmann::json to_json(const CorrespondenceReport& r);
nlohmann::json to_json(const ItoReport& r);
nlohmann::json to_json(const PicardReport& r);
nlohmann::json to_json(const GapReport& r);
nlohmann::json to_json(const std::vector<Check>& checks);

}  // namespace hslift
