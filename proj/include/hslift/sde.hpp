#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hslift/errors.hpp"
#include "hslift/fields.hpp"

namespace hslift {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Independent generator for (seed, stream). Streams are derived by
/// hashing, so path i of an ensemble sees the same numbers whatever order
/// the paths run in.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Brownian increments on a uniform grid t_k = k * dt, k = 0..steps.
struct BrownianPath {
  int dim = 1;
  double dt = 0.0;
  std::size_t steps = 0;
  std::vector<double> increments;  // steps x dim, row-major

  static BrownianPath make(int dim, double dt, std::size_t steps, RngStream& rng);
  static BrownianPath make(int dim, double dt, std::size_t steps, std::uint64_t seed,
                           std::uint64_t stream = 0);

  double time(std::size_t k) const noexcept { return dt * static_cast<double>(k); }
  double horizon() const noexcept { return time(steps); }
  std::span<const double> increment(std::size_t k) const {
    return {increments.data() + k * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  /// Same path on the grid with step factor * dt (sums of consecutive increments).
  BrownianPath coarsen(std::size_t factor) const;
};

/// dZ = diffusion(Z) dB + drift(Z) dt, with the exit level m of the
/// stopping times theta_m.
struct SdeProblem {
  using VectorField = std::function<void(std::span<const double> x, std::span<double> out)>;

  int dim = 1;
  VectorField drift;      // writes d values
  VectorField diffusion;  // writes d*d values, row-major
  double explosion_level = 1e6;
  std::function<std::vector<double>(RngStream&)> initial;
  std::string label;
};

/// Solution on the grid. Rows after the exit step are NaN: the state has
/// been sent to the cemetery point.
struct PathResult {
  int dim = 1;
  double dt = 0.0;
  std::vector<double> states;  // (steps+1) x dim
  bool exploded = false;
  double theta = std::numeric_limits<double>::infinity();
  std::optional<std::size_t> exit_step;

  std::size_t size() const noexcept { return states.size() / static_cast<std::size_t>(dim); }
  std::span<const double> state(std::size_t k) const {
    return {states.data() + k * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  /// True for steps strictly before the exit.
  bool alive(std::size_t k) const noexcept { return !exit_step || k < *exit_step; }
};

/// Euler-Maruyama. Stops at the first |Z_k| >= m and flags the path; a
/// non-finite state before that throws NumericalError.
PathResult simulate_em(const SdeProblem& problem, const BrownianPath& path, std::span<const double> z0);

struct PicardResult {
  /// iterates[k] is Z^{(k)} on the grid, (steps+1) x dim; iterates[0] is constant zeta.
  std::vector<std::vector<double>> iterates;
  /// sup_t |Z^{(k+1)} - Z^{(k)}| for k = 0..K-1.
  std::vector<double> sup_deviation;
  /// running_sq[k][j] = sup_{s <= t_j} |Z^{(k+1)}_s - Z^{(k)}_s|^2.
  std::vector<std::vector<double>> running_sq;
};

/// Deviations grew for three consecutive iterates.
class PicardDivergence : public NumericalError {
 public:
  PicardDivergence(const std::string& what, std::vector<double> deviations)
      : NumericalError(what), deviations_(std::move(deviations)) {}
  const std::vector<double>& deviations() const noexcept { return deviations_; }

 private:
  std::vector<double> deviations_;
};

/// Successive approximation with the increments frozen:
/// Z^{(k+1)}_t = zeta + sum sigma(Z^{(k)}) dB + sum b(Z^{(k)}) dt, left-point sums.
PicardResult picard_solve(const SdeProblem& problem, const BrownianPath& path,
                          std::span<const double> zeta, int iterations);

/// N(0, 1/2), the invariant law of dZ = dB - Z dt.
double sample_ou_stationary(RngStream& rng);

/// Density 2^{3/4}/Gamma(1/4) exp(-x^4/2), the invariant law of dZ = dB - Z^3 dt.
/// Rejection from N(0,1): exp(-x^4/2 + x^2/2) <= exp(1/8).
double sample_quartic_stationary(RngStream& rng, int max_tries = 10000);

double quartic_normalizer();
double quartic_density(double x);
/// sqrt(2) Gamma(3/4) / Gamma(1/4), the variance of the quartic invariant law.
double quartic_second_moment();
/// Closed form through the regularized incomplete gamma function.
double quartic_cdf(double x);

/// Max over the grid of |-(g rho)' + 1/2 (f^2 rho)''| / max rho, by central
/// differences with step h: zero for a stationary density of dZ = f dB + g dt.
double fokker_planck_residual(const std::function<double(double)>& density,
                              const std::function<double(double)>& drift,
                              const std::function<double(double)>& diffusion,
                              const std::vector<double>& grid, double h = 1e-3);

/// Z_t = z0 + sum <sigma, Y_s> dB_s + sum <b, Y_s> ds as left-point sums.
/// ys[k] is Y at t_k; needs at least path.steps entries.
std::vector<double> z_from_y(const std::vector<SobolevVector>& ys, const CoeffField& field,
                             const BrownianPath& path, std::span<const double> z0 = {});

/// CSV "t,Z_1..Z_d,exploded"; rows past the exit carry exploded = 1.
void write_path_csv(std::ostream& os, const PathResult& path);

/// sigma = I, b = -x.
SdeProblem ou_problem(int dim = 1, double explosion_level = 1e6);
/// sigma = 1, b = -x^3, started from the quartic invariant law.
SdeProblem quartic_problem(double explosion_level = 1e2);
/// sigma, b given as polynomials (d*d and d entries).
SdeProblem polynomial_problem(const std::vector<Polynomial>& sigma, const std::vector<Polynomial>& drift,
                              double explosion_level = 1e6);
/// sigma_bar(.; psi), b_bar(.; psi) through the pairings.
SdeProblem pairing_problem(std::shared_ptr<const FieldEvaluator> evaluator,
                           double explosion_level = 1e6);

}  // namespace hslift
