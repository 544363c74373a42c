#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "stealth_grid/gaussian_toolkit.hpp"

namespace sgl {

/// Likelihood ratio test between N(0, Sya) (attacked) and N(0, Syy) (nominal).
struct LrtModel {
  Eigen::MatrixXd chol_yy;
  Eigen::MatrixXd chol_yaya;
  double log_det_yy = 0.0;
  double log_det_yaya = 0.0;
  double log_tau = 0.0;
};

LrtModel make_lrt_model(const StateModel& state, const Eigen::MatrixXd& sigma_aa, double tau);

/// log f_{Y_A}(y) - log f_Y(y), quadratic forms by forward substitution.
double log_likelihood_ratio(const LrtModel& model, const Eigen::VectorXd& y);

/// Empirical detection and false-alarm rates of the test "L(y) >= tau".
struct DetectionEstimate {
  double p_detection = 0.0;    ///< fraction of attacked draws flagged (1 - Type II)
  double p_false_alarm = 0.0;  ///< fraction of nominal draws flagged (Type I)
  std::int64_t trials = 0;
  std::uint64_t seed = 0;
};

/// Monte Carlo estimate over `trials` paired draws. Trial t draws the
/// nominal observation y = chol_yy g from stream (seed, 2t) and the attack
/// a = F h from stream (seed, 2t + 1), with F F^T = sigma_aa, and tests both
/// y and y + a. The result is bit-identical for any `threads` value.
DetectionEstimate estimate_probabilities(const StateModel& state, const Eigen::MatrixXd& sigma_aa, double tau,
                                         std::int64_t trials, std::uint64_t seed, unsigned threads = 1);

}  // namespace sgl
