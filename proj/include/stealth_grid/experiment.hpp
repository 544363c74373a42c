#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stealth_grid/gaussian_toolkit.hpp"
#include "stealth_grid/grid_model.hpp"

namespace sgl {

struct ExperimentConfig {
  std::string case_path;
  double snr_db = 30.0;
  double rho = 0.1;
  double tau = 2.0;
  std::vector<double> lambdas{2.0, 30.0};
  std::optional<Eigen::Index> k_max;  ///< defaults to the number of sensors
  std::int64_t trials = 20000;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "results";
  bool plots = false;
  unsigned threads = 1;  ///< Monte Carlo workers; results do not depend on it
};

/// Throws ConfigError when a field is out of range for a model with m sensors.
void validate(const ExperimentConfig& config, Eigen::Index m);

struct SweepRow {
  Eigen::Index k = 0;
  Eigen::Index sensor = 0;  ///< 0-based sensor added at this step
  double variance = 0.0;    ///< attack variance of that sensor
  double w_min = 0.0;
  double mi_nats = 0.0;
  double kl_nats = 0.0;
  double objective = 0.0;
  double p_detection = 0.0;
  double p_false_alarm = 0.0;
};

struct LambdaSweep {
  double lambda = 0.0;
  std::vector<SweepRow> rows;      ///< ordered by k, k = 1..rows.size()
  std::optional<std::string> truncation;  ///< why the sweep stopped before k_max
};

struct EvalReport {
  std::string case_path;
  Eigen::Index sensors = 0;
  Eigen::Index states = 0;
  double noise_variance = 0.0;
  double snr_db = 0.0;
  double rho = 0.0;
  double tau = 0.0;
  std::int64_t trials = 0;
  std::uint64_t seed = 0;
  std::vector<LambdaSweep> sweeps;
};

/// Measurement model of a case with the noise variance calibrated to `snr_db`
/// under the Toeplitz prior with parameter `rho`.
MeasurementModel calibrated_model(const GridCase& grid, double snr_db, double rho);

/// Loads the case, calibrates the noise and runs the full sweep. Case-file
/// problems surface as InputError, bad settings as ConfigError.
EvalReport run_sweep(const ExperimentConfig& config);

/// Sweep over an in-memory model. For each lambda one greedy construction
/// to k_max is built and its prefixes are evaluated; Monte Carlo draws for
/// lambda index l use the substream seed derive_seed(seed, {l}) with the
/// trial number as counter, so every k of a lambda shares the same draws.
EvalReport run_sweep(const StateModel& state, const ExperimentConfig& config);

/// Shortest round-trip rendering of lambda used in file names ("2", "1.5").
std::string lambda_tag(double lambda);
/// Nine significant digits, locale independent.
std::string format_number(double value);

std::string csv_text(const LambdaSweep& sweep);

/// Writes sweep_lambda<tag>.csv per lambda. Throws OutputError on I/O failure.
std::vector<std::filesystem::path> emit_csv(const EvalReport& report, const std::filesystem::path& dir);

/// Writes the SVG figures: mutual information and detection probability
/// against k for all lambdas, and per lambda the attack variance, detection
/// and false-alarm probabilities against k.
std::vector<std::filesystem::path> emit_plots(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace sgl
