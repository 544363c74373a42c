#pragma once

#include <cstdint>
#include <limits>
#include <optional>

#include <Eigen/Dense>

#include "stealth_grid/grid_model.hpp"

namespace sgl {

/// Zero-mean Gaussian prior on the state together with the induced
/// observation covariance and its precision.
///
///   sigma_yy = H sigma_xx H^T + noise_variance I,   w = sigma_yy^-1
///
/// Immutable after construction; safe to share across threads.
struct StateModel {
  Eigen::MatrixXd sigma_xx;
  std::optional<double> rho;  ///< set when sigma_xx came from toeplitz_cov()
  double noise_variance = 1.0;
  Eigen::MatrixXd sigma_yy;
  Eigen::MatrixXd w;
  Eigen::MatrixXd chol_yy;  ///< lower-triangular, chol_yy * chol_yy^T = sigma_yy
  double log_det_yy = 0.0;

  Eigen::Index sensors() const { return sigma_yy.rows(); }
};

/// Exponentially decaying correlation, entries rho^|i-j|. Requires 0 <= rho < 1.
Eigen::MatrixXd toeplitz_cov(Eigen::Index n, double rho);

StateModel build_state_model(const MeasurementModel& meas, double rho);
StateModel build_state_model(const MeasurementModel& meas, const Eigen::MatrixXd& sigma_xx);

/// Inverse of an SPD matrix through its Cholesky factor, symmetrized.
/// Throws NumericalError if the matrix is not numerically positive definite.
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a);

/// log det of an SPD matrix from its Cholesky factor.
double log_det_spd(const Eigen::MatrixXd& a);

/// Accepts a symmetric matrix whose smallest eigenvalue is at least
/// -1e-9 * max(1, largest eigenvalue); throws DomainError otherwise.
void require_psd(const Eigen::MatrixXd& a, const char* what = "matrix");

/// 10 log10(tr(H Sxx H^T) / (m sigma^2)).
double snr_db(const Eigen::MatrixXd& jacobian, const Eigen::MatrixXd& sigma_xx, double noise_variance);

/// Noise variance that yields the requested SNR in dB.
double snr_to_noise_variance(const Eigen::MatrixXd& jacobian, const Eigen::MatrixXd& sigma_xx,
                             double snr_db);

/// I(X; Y_A) in nats for an additive zero-mean Gaussian attack with
/// covariance sigma_aa.
double mutual_information(const StateModel& state, const Eigen::MatrixXd& sigma_aa);

/// D(P_{Y_A} || P_Y) in nats.
double kl_divergence(const StateModel& state, const Eigen::MatrixXd& sigma_aa);

/// Key of a deterministic random substream. Draws depend only on
/// (seed, trial_counter), never on which thread consumes them.
struct SampleStream {
  std::uint64_t seed = 0;
  std::uint64_t trial_counter = 0;
};

/// Mixes a parent seed with a sequence of integer keys into a child seed.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

/// SplitMix64 sequence started from a state hashed out of a SampleStream.
/// Satisfies UniformRandomBitGenerator.
class StreamEngine {
 public:
  using result_type = std::uint64_t;

  explicit StreamEngine(SampleStream stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

 private:
  std::uint64_t state_;
};

/// n independent standard normal draws from the stream.
Eigen::VectorXd standard_normal(Eigen::Index n, SampleStream stream);

/// factor * g with g ~ N(0, I) drawn from the stream. With a Cholesky factor
/// L of S the result is distributed as N(0, S).
Eigen::VectorXd sample_mvn(const Eigen::MatrixXd& factor, SampleStream stream);

}  // namespace sgl
