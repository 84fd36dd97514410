#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hslift/fields.hpp"
#include "hslift/sde.hpp"
#include "hslift/sobolev.hpp"

namespace hslift {

/// A_i and L of the lifted equation for one coefficient field, with the
/// derivative matrices D_i and products D_i D_j formed once.
class SpdeOperators {
 public:
  explicit SpdeOperators(CoeffField field);

  const CoeffField& field() const noexcept { return field_; }
  const BasisPtr& basis() const noexcept { return basis_; }
  int dim() const noexcept { return field_.dim; }
  const Eigen::MatrixXd& d(int i) const { return d_[static_cast<std::size_t>(i)]; }
  const Eigen::MatrixXd& dd(int i, int j) const {
    return dd_[static_cast<std::size_t>(i * field_.dim + j)];
  }

  /// A_i phi = -sum_j <sigma_ji, phi> d_j phi, tag p - 1/2.
  SobolevVector apply_A(const SobolevVector& phi, int i) const;
  /// L phi = 1/2 sum (S S^T)_ij d_i d_j phi - sum_i <b_i, phi> d_i phi, tag p - 1.
  SobolevVector apply_L(const SobolevVector& phi) const;

  /// The same with the pairings S = <sigma, phi> and b = <b, phi> given.
  SobolevVector apply_A_frozen(const SobolevVector& phi, int i, const Eigen::MatrixXd& s) const;
  SobolevVector apply_L_frozen(const SobolevVector& phi, const Eigen::MatrixXd& s,
                               const Eigen::VectorXd& b) const;

 private:
  void check(const SobolevVector& phi) const;

  CoeffField field_;
  BasisPtr basis_;
  std::vector<Eigen::MatrixXd> d_;
  std::vector<Eigen::MatrixXd> dd_;
};

SobolevVector apply_A(const SobolevVector& phi, const CoeffField& field, int i);
SobolevVector apply_L(const SobolevVector& phi, const CoeffField& field);

/// Y_t = tau_{Z_t} xi at chosen grid steps; nullopt marks the cemetery
/// state for steps at or past the exit.
struct LiftedPath {
  SobolevVector xi;
  PathResult zpath;
  std::vector<std::size_t> steps;
  std::vector<std::optional<SobolevVector>> realized;
};

LiftedPath lift(const SobolevVector& xi, const PathResult& zpath, std::vector<std::size_t> steps,
                const Translator& translator);
LiftedPath lift(const SobolevVector& xi, const PathResult& zpath, std::vector<std::size_t> steps);

struct GalerkinOptions {
  /// Abort once ||Y_k||_{p-1} exceeds guard_factor * ||xi||_{p-1}.
  double guard_factor = 1e3;
  /// Keep every record_every-th state (the last one is always kept).
  std::size_t record_every = 1;
};

struct GalerkinResult {
  std::vector<std::size_t> steps;
  std::vector<SobolevVector> states;  // tagged p - 1
};

/// Y_{k+1} = Y_k + sum_i A_i(Y_k) dB^i_k + L(Y_k) dt on the truncated
/// coefficients. Throws GuardTripped with the step index on blow-up.
GalerkinResult galerkin_simulate(const SobolevVector& xi, const SpdeOperators& ops,
                                 const BrownianPath& path, double p, const GalerkinOptions& opts = {});

/// How d[Z^i, Z^j] enters the second-order term of the Ito sum.
enum class Covariation {
  realized,  // dZ^i dZ^j
  bracket,   // (sigma sigma^T)(Z_k) dt
};

struct ItoResidual {
  std::vector<double> times;
  std::vector<double> norms;  // ||residual_t||_{p-1}
  double max = 0.0;
};

/// ||tau_{Z_t} xi - [tau_{Z_0} xi - sum d_i tau_{Z_s} xi dZ^i + 1/2 sum d_ij tau_{Z_s} xi d[Z^i,Z^j]]||_{p-1}
/// with left-point sums over the alive part of the path. The bracket mode
/// reads sigma from `problem`.
ItoResidual ito_residual(const SobolevVector& xi, const PathResult& zpath, double p,
                         Covariation mode = Covariation::realized, const SdeProblem* problem = nullptr);

/// The two parts of the gap and the normalizing norm.
struct GapTerms {
  double drift = 0.0;      // 2 <phi, L phi>_{p-1}
  double diffusion = 0.0;  // sum_i ||A_i phi||^2_{p-1}
  double norm2 = 0.0;      // ||phi||^2_{p-1}
};

GapTerms monotonicity_terms(const SobolevVector& phi, const SpdeOperators& ops, double p,
                            const Eigen::MatrixXd& s, const Eigen::VectorXd& b);

/// (2 <phi, L phi>_{p-1} + sum_i ||A_i phi||^2_{p-1}) / ||phi||^2_{p-1}.
double monotonicity_gap(const SobolevVector& phi, const SpdeOperators& ops, double p);
/// Same with the pairings frozen at S and b.
double monotonicity_gap_frozen(const SobolevVector& phi, const SpdeOperators& ops, double p,
                               const Eigen::MatrixXd& s, const Eigen::VectorXd& b);

/// A named test function for trajectory observables <Y_t, phi>.
struct TestFunction {
  std::string name;
  SobolevVector phi;
};

/// Long CSV "t,observable,value,std_err" with ||Y||_p for each p in `ps`
/// and <Y, phi> for each test function; std_err is 0 for a single path.
void write_trajectory_csv(std::ostream& os, const std::vector<double>& times,
                          const std::vector<SobolevVector>& states, const std::vector<double>& ps,
                          const std::vector<TestFunction>& tests);

}  // namespace hslift
