// stealth-grid-lab: builds greedy sparse stealth attacks on a DC state
// estimation model and evaluates them.
//
// Exit codes: 0 success, 1 configuration error, 2 input-data error,
// 3 output error.

#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "stealth_grid/errors.hpp"
#include "stealth_grid/experiment.hpp"
#include "stealth_grid/gaussian_toolkit.hpp"
#include "stealth_grid/grid_model.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 1, kInput = 2, kOutput = 3 };

int inspect_command(const std::string& case_path, double snr_db, double rho) {
  sgl::MeasurementModel meas;
  sgl::StateModel state;
  try {
    meas = sgl::calibrated_model(sgl::load_case(case_path), snr_db, rho);
    state = sgl::build_state_model(meas, rho);
  } catch (const sgl::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << case_path << ": " << e.what() << '\n';
    return kInput;
  }
  std::cout << "m," << meas.sensors() << '\n';
  std::cout << "n," << meas.states() << '\n';
  std::cout << "noise_variance," << sgl::format_number(meas.noise_variance) << '\n';
  std::cout << "sensor,label,w_diag\n";
  for (Eigen::Index i = 0; i < meas.sensors(); ++i) {
    std::cout << i + 1 << ',' << sgl::to_string(meas.labels[static_cast<std::size_t>(i)]) << ','
              << sgl::format_number(state.w(i, i)) << '\n';
  }
  return kOk;
}

int sweep_command(const sgl::ExperimentConfig& config) {
  sgl::EvalReport report;
  try {
    report = sgl::run_sweep(config);
  } catch (const sgl::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const sgl::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInput;
  }
  for (const auto& sweep : report.sweeps) {
    if (sweep.truncation) {
      std::cerr << "warning: lambda " << sgl::lambda_tag(sweep.lambda) << " stopped at k = " << sweep.rows.size()
                << ": " << *sweep.truncation << '\n';
    }
  }
  try {
    for (const auto& path : sgl::emit_csv(report, config.output_dir)) std::cout << path.string() << '\n';
    if (config.plots) {
      for (const auto& path : sgl::emit_plots(report, config.output_dir)) std::cout << path.string() << '\n';
    }
  } catch (const sgl::OutputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOutput;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse information-theoretic stealth attacks on DC state estimation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with sweep settings; command-line flags take precedence");

  sgl::ExperimentConfig config;
  std::string output_dir = config.output_dir.string();
  Eigen::Index k_max = 0;
  std::uint64_t seed = config.seed;

  auto* sweep = app.add_subcommand("sweep", "Greedy attack sweep over k for each lambda");
  sweep->configurable();
  sweep->add_option("--case", config.case_path, "MATPOWER case file")->required();
  sweep->add_option("--snr-db", config.snr_db, "signal-to-noise ratio in dB")->capture_default_str();
  sweep->add_option("--rho", config.rho, "Toeplitz correlation of the state prior")->capture_default_str();
  sweep->add_option("--tau", config.tau, "likelihood-ratio threshold")->capture_default_str();
  auto* lambdas = sweep->add_option("--lambda", config.lambdas, "weighting parameter (repeatable)")
                      ->capture_default_str();
  auto* k_max_opt = sweep->add_option("--k-max", k_max, "largest number of attacked sensors (default: all)");
  sweep->add_option("--trials", config.trials, "Monte Carlo realizations per point")->capture_default_str();
  sweep->add_option("--seed", seed, "random seed")->capture_default_str();
  sweep->add_option("--out", output_dir, "output directory")->capture_default_str();
  sweep->add_option("--threads", config.threads, "Monte Carlo worker threads (0: all cores)")
      ->capture_default_str();
  sweep->add_flag("--plots", config.plots, "also write SVG figures");
  // Repeated --lambda flags replace the defaults instead of appending.
  lambdas->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

  std::string inspect_case;
  double inspect_snr = config.snr_db;
  double inspect_rho = config.rho;
  auto* inspect = app.add_subcommand("inspect", "Print model dimensions, noise variance and diag(W) as CSV");
  inspect->add_option("--case", inspect_case, "MATPOWER case file")->required();
  inspect->add_option("--snr-db", inspect_snr, "signal-to-noise ratio in dB")->capture_default_str();
  inspect->add_option("--rho", inspect_rho, "Toeplitz correlation of the state prior")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  if (*inspect) return inspect_command(inspect_case, inspect_snr, inspect_rho);

  if (k_max_opt->count() > 0) config.k_max = k_max;
  config.seed = seed;
  config.output_dir = output_dir;
  if (config.threads == 0) config.threads = std::max(1u, std::thread::hardware_concurrency());
  return sweep_command(config);
}
