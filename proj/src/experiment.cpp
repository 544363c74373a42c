#include "stealth_grid/experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "stealth_grid/detector.hpp"
#include "stealth_grid/errors.hpp"
#include "stealth_grid/stealth_attack.hpp"

namespace sgl {

void validate(const ExperimentConfig& config, Eigen::Index m) {
  if (!(config.rho >= 0.0 && config.rho < 1.0)) throw ConfigError("rho must lie in [0, 1)");
  if (!(config.tau > 0.0)) throw ConfigError("tau must be positive");
  if (config.lambdas.empty()) throw ConfigError("at least one lambda is required");
  for (const double l : config.lambdas) {
    if (!(l > 1.0)) throw ConfigError("every lambda must be greater than 1, got " + format_number(l));
  }
  if (config.trials < 1) throw ConfigError("trials must be at least 1");
  if (config.k_max && (*config.k_max < 1 || *config.k_max > m)) {
    throw ConfigError("k-max must lie in [1, " + std::to_string(m) + "]");
  }
  if (!std::isfinite(config.snr_db)) throw ConfigError("snr-db must be finite");
}

MeasurementModel calibrated_model(const GridCase& grid, double snr_db, double rho) {
  auto meas = build_jacobian(grid, 1.0);
  meas.noise_variance = snr_to_noise_variance(meas.jacobian, toeplitz_cov(meas.states(), rho), snr_db);
  return meas;
}

EvalReport run_sweep(const ExperimentConfig& config) {
  if (!(config.rho >= 0.0 && config.rho < 1.0)) throw ConfigError("rho must lie in [0, 1)");
  MeasurementModel meas;
  try {
    meas = calibrated_model(load_case(config.case_path), config.snr_db, config.rho);
  } catch (const std::exception& e) {
    throw InputError(config.case_path + ": " + e.what());
  }
  auto report = run_sweep(build_state_model(meas, config.rho), config);
  report.case_path = config.case_path;
  return report;
}

EvalReport run_sweep(const StateModel& state, const ExperimentConfig& config) {
  const auto m = state.sensors();
  validate(config, m);
  const auto k_max = config.k_max.value_or(m);

  EvalReport report;
  report.sensors = m;
  report.states = state.sigma_xx.rows();
  report.noise_variance = state.noise_variance;
  report.snr_db = config.snr_db;
  report.rho = state.rho.value_or(config.rho);
  report.tau = config.tau;
  report.trials = config.trials;
  report.seed = config.seed;

  for (std::size_t l = 0; l < config.lambdas.size(); ++l) {
    LambdaSweep sweep;
    sweep.lambda = config.lambdas[l];
    AttackPlan plan;
    try {
      plan = greedy_k_sparse(state, sweep.lambda, k_max);
    } catch (const DegenerateAttackError& e) {
      plan = e.partial();
      sweep.truncation = e.what();
    }

    const auto mc_seed = derive_seed(config.seed, {static_cast<std::uint64_t>(l)});
    for (std::size_t k = 1; k <= plan.size(); ++k) {
      const auto prefix = plan.prefix(k);
      const auto est = estimate_probabilities(state, prefix.sigma_aa, config.tau, config.trials, mc_seed,
                                              config.threads);
      SweepRow row;
      row.k = static_cast<Eigen::Index>(k);
      row.sensor = plan.support[k - 1];
      row.variance = plan.variances[k - 1];
      row.w_min = plan.w_min[k - 1];
      row.mi_nats = mutual_information(state, prefix.sigma_aa);
      row.kl_nats = kl_divergence(state, prefix.sigma_aa);
      row.objective = stealth_objective(state, prefix.sigma_aa, sweep.lambda);
      row.p_detection = est.p_detection;
      row.p_false_alarm = est.p_false_alarm;
      sweep.rows.push_back(row);
    }
    report.sweeps.push_back(std::move(sweep));
  }
  return report;
}

std::string lambda_tag(double lambda) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, lambda);
  return std::string(buf, ptr);
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 9);
  return std::string(buf, ptr);
}

std::string csv_text(const LambdaSweep& sweep) {
  std::string out = "k,sensor,variance,mi_nats,mi_bits,kl_nats,objective,p_detection,p_false_alarm\n";
  const double ln2 = std::log(2.0);
  for (const auto& r : sweep.rows) {
    out += std::to_string(r.k);
    out += ',' + std::to_string(r.sensor + 1);
    for (const double v : {r.variance, r.mi_nats, r.mi_nats / ln2, r.kl_nats, r.objective, r.p_detection,
                           r.p_false_alarm}) {
      out += ',' + format_number(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<std::filesystem::path> emit_csv(const EvalReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw OutputError("cannot create output directory '" + dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const auto& sweep : report.sweeps) {
    const auto path = dir / ("sweep_lambda" + lambda_tag(sweep.lambda) + ".csv");
    std::ofstream out(path, std::ios::binary);
    out << csv_text(sweep);
    out.close();
    if (!out) throw OutputError("cannot write '" + path.string() + "'");
    written.push_back(path);
  }
  return written;
}

}  // namespace sgl
