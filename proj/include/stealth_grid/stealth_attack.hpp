#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "stealth_grid/gaussian_toolkit.hpp"
#include "stealth_grid/grid_model.hpp"

namespace sgl {

/// A k-sparse Gaussian attack with independent entries.
///
/// Sensor indices are 0-based positions in the measurement vector and are
/// listed in the order the greedy construction picked them. `w_min[j]` is
/// the diagonal precision entry that produced `variances[j]`.
struct AttackPlan {
  std::vector<Eigen::Index> support;
  std::vector<double> variances;
  std::vector<double> w_min;
  double lambda = 2.0;
  Eigen::Index sensors = 0;
  Eigen::MatrixXd sigma_aa;

  std::size_t size() const { return support.size(); }
  /// The plan made of the first k picks, with its own assembled covariance.
  AttackPlan prefix(std::size_t k) const;
};

struct SingleSensorSolution {
  Eigen::Index alpha = 0;
  double w_min = 0.0;
  double variance = 0.0;
};

/// Raised when the best remaining sensor carries no information about the
/// state (w * sigma^2 == 1), which forces a zero attack variance.
class DegenerateAttackError : public std::runtime_error {
 public:
  DegenerateAttackError(std::size_t round, AttackPlan partial);

  /// 1-based greedy round that failed.
  std::size_t round() const noexcept { return round_; }
  /// Picks completed before the failing round.
  const AttackPlan& partial() const noexcept { return partial_; }

 private:
  std::size_t round_;
  AttackPlan partial_;
};

/// (1 - lambda) log|I + W Saa| - log|sigma^2 I + Saa| + lambda tr(W Saa).
///
/// Equals 2 (I(X;Y_A) + lambda D(P_{Y_A} || P_Y)) - log|Syy|, so differences
/// between two attacks are twice the differences of the information cost.
double stealth_objective(const StateModel& state, const Eigen::MatrixXd& sigma_aa, double lambda);

/// Non-sparse attack covariance (1 / lambda) H Sxx H^T. Requires lambda >= 1.
Eigen::MatrixXd unconstrained_optimum(const StateModel& state, double lambda);

/// Minimizer over r >= 0 of
///   (1 - lambda) log(1 + w r) - log(sigma^2 + r) + lambda w r,
/// i.e. -sigma^2/2 + sqrt(sigma^4 - 4 (w sigma^2 - 1) / (lambda w^2)) / 2,
/// evaluated in a cancellation-free form.
double optimal_single_variance(double w, double noise_variance, double lambda);

/// Best single-sensor attack: the sensor with the smallest diagonal
/// precision entry (lowest index on ties) and its optimal variance.
SingleSensorSolution single_sensor_attack(const StateModel& state, double lambda);

/// Greedy k-sparse construction. Round j restricts the observation
/// covariance to sensors not yet attacked, inverts it, and attacks the
/// sensor with the smallest diagonal precision. Selection never depends on
/// lambda; only the variances do.
AttackPlan greedy_k_sparse(const MeasurementModel& meas, const Eigen::MatrixXd& sigma_xx, double lambda,
                           Eigen::Index k);
AttackPlan greedy_k_sparse(const StateModel& state, double lambda, Eigen::Index k);

/// Diagonal covariance with variances[j] at support[j].
Eigen::MatrixXd assemble_cov(const std::vector<Eigen::Index>& support, const std::vector<double>& variances,
                             Eigen::Index m);

}  // namespace sgl
