#include "stealth_grid/stealth_attack.hpp"

#include <cmath>
#include <string>

#include "stealth_grid/errors.hpp"

namespace sgl {

namespace {

// w sigma^2 within this distance of 1 means the sensor is uninformative.
constexpr double kDegenerateTolerance = 1e-12;

void require_lambda_above_one(double lambda) {
  if (!(lambda > 1.0)) throw DomainError("lambda must be greater than 1");
}

struct Pick {
  Eigen::Index position = 0;
  double w = 0.0;
};

Pick argmin_diagonal(const Eigen::MatrixXd& w) {
  Pick best{0, w(0, 0)};
  for (Eigen::Index i = 1; i < w.rows(); ++i) {
    if (w(i, i) < best.w) best = {i, w(i, i)};
  }
  return best;
}

bool is_degenerate(double w, double noise_variance) {
  return 1.0 - w * noise_variance <= kDegenerateTolerance;
}

AttackPlan greedy_from_covariance(const Eigen::MatrixXd& sigma_yy, double noise_variance, double lambda,
                                  Eigen::Index k) {
  require_lambda_above_one(lambda);
  const auto m = sigma_yy.rows();
  if (k < 1 || k > m) {
    throw DomainError("k must lie in [1, " + std::to_string(m) + "], got " + std::to_string(k));
  }

  AttackPlan plan;
  plan.lambda = lambda;
  plan.sensors = m;
  std::vector<Eigen::Index> remaining(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) remaining[static_cast<std::size_t>(i)] = i;

  for (Eigen::Index round = 1; round <= k; ++round) {
    // H_j Sxx H_j^T + sigma^2 I is the principal submatrix of Syy on the
    // sensors that are still unattacked.
    const Eigen::MatrixXd reduced = sigma_yy(remaining, remaining);
    const Eigen::MatrixXd w = spd_inverse(reduced);
    const auto pick = argmin_diagonal(w);
    if (is_degenerate(pick.w, noise_variance)) {
      plan.sigma_aa = assemble_cov(plan.support, plan.variances, m);
      throw DegenerateAttackError(static_cast<std::size_t>(round), std::move(plan));
    }
    // Map the reduced position back to the original sensor index.
    const auto sensor = remaining[static_cast<std::size_t>(pick.position)];
    plan.support.push_back(sensor);
    plan.w_min.push_back(pick.w);
    plan.variances.push_back(optimal_single_variance(pick.w, noise_variance, lambda));
    remaining.erase(remaining.begin() + pick.position);
  }
  plan.sigma_aa = assemble_cov(plan.support, plan.variances, m);
  return plan;
}

}  // namespace

AttackPlan AttackPlan::prefix(std::size_t k) const {
  if (k > support.size()) throw DomainError("prefix longer than the plan");
  AttackPlan p;
  p.support.assign(support.begin(), support.begin() + static_cast<std::ptrdiff_t>(k));
  p.variances.assign(variances.begin(), variances.begin() + static_cast<std::ptrdiff_t>(k));
  p.w_min.assign(w_min.begin(), w_min.begin() + static_cast<std::ptrdiff_t>(k));
  p.lambda = lambda;
  p.sensors = sensors;
  p.sigma_aa = assemble_cov(p.support, p.variances, sensors);
  return p;
}

DegenerateAttackError::DegenerateAttackError(std::size_t round, AttackPlan partial)
    : std::runtime_error("degenerate attack in greedy round " + std::to_string(round) +
                         ": best remaining sensor is uninformative (w * sigma^2 = 1)"),
      round_(round),
      partial_(std::move(partial)) {}

double stealth_objective(const StateModel& state, const Eigen::MatrixXd& sigma_aa, double lambda) {
  const auto m = state.sensors();
  if (sigma_aa.rows() != m || sigma_aa.cols() != m) throw DomainError("attack covariance has wrong shape");
  require_psd(sigma_aa, "attack covariance");

  // log|I + W Saa| = log|Syy + Saa| - log|Syy|
  const double log_det_attacked = log_det_spd(state.sigma_yy + sigma_aa);
  Eigen::MatrixXd noise = sigma_aa;
  noise.diagonal().array() += state.noise_variance;
  const double trace = (state.w.cwiseProduct(sigma_aa)).sum();
  return (1.0 - lambda) * (log_det_attacked - state.log_det_yy) - log_det_spd(noise) + lambda * trace;
}

Eigen::MatrixXd unconstrained_optimum(const StateModel& state, double lambda) {
  if (!(lambda >= 1.0)) throw DomainError("lambda must be at least 1");
  Eigen::MatrixXd signal = state.sigma_yy;
  signal.diagonal().array() -= state.noise_variance;
  return signal / lambda;
}

double optimal_single_variance(double w, double noise_variance, double lambda) {
  // r = (sqrt(s^4 + c) - s^2) / 2 = c / (2 (s^2 + sqrt(s^4 + c)))
  const double s2 = noise_variance;
  const double c = 4.0 * (1.0 - w * s2) / (lambda * w * w);
  return c / (2.0 * (s2 + std::sqrt(s2 * s2 + c)));
}

SingleSensorSolution single_sensor_attack(const StateModel& state, double lambda) {
  require_lambda_above_one(lambda);
  const auto pick = argmin_diagonal(state.w);
  if (is_degenerate(pick.w, state.noise_variance)) {
    AttackPlan empty;
    empty.lambda = lambda;
    empty.sensors = state.sensors();
    empty.sigma_aa = Eigen::MatrixXd::Zero(state.sensors(), state.sensors());
    throw DegenerateAttackError(1, std::move(empty));
  }
  return {pick.position, pick.w, optimal_single_variance(pick.w, state.noise_variance, lambda)};
}

AttackPlan greedy_k_sparse(const MeasurementModel& meas, const Eigen::MatrixXd& sigma_xx, double lambda,
                           Eigen::Index k) {
  if (sigma_xx.rows() != meas.states() || sigma_xx.cols() != meas.states()) {
    throw DomainError("state covariance does not match the Jacobian column count");
  }
  Eigen::MatrixXd signal = meas.jacobian * sigma_xx * meas.jacobian.transpose();
  Eigen::MatrixXd sigma_yy = 0.5 * (signal + signal.transpose());
  sigma_yy.diagonal().array() += meas.noise_variance;
  return greedy_from_covariance(sigma_yy, meas.noise_variance, lambda, k);
}

AttackPlan greedy_k_sparse(const StateModel& state, double lambda, Eigen::Index k) {
  return greedy_from_covariance(state.sigma_yy, state.noise_variance, lambda, k);
}

Eigen::MatrixXd assemble_cov(const std::vector<Eigen::Index>& support, const std::vector<double>& variances,
                             Eigen::Index m) {
  if (support.size() != variances.size()) throw DomainError("support and variances differ in length");
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t j = 0; j < support.size(); ++j) {
    const auto i = support[j];
    if (i < 0 || i >= m) throw DomainError("sensor index " + std::to_string(i) + " out of range");
    if (s(i, i) != 0.0) throw DomainError("sensor index " + std::to_string(i) + " listed twice");
    s(i, i) = variances[j];
  }
  return s;
}

}  // namespace sgl
