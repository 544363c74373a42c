#include "stealth_grid/gaussian_toolkit.hpp"

#include <cmath>
#include <random>
#include <string>

#include "stealth_grid/errors.hpp"

namespace sgl {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Eigen::LLT<Eigen::MatrixXd> factorize(const Eigen::MatrixXd& a, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(what) + " is not positive definite");
  }
  return llt;
}

double log_det_from(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

void require_square(const StateModel& state, const Eigen::MatrixXd& sigma_aa) {
  if (sigma_aa.rows() != state.sensors() || sigma_aa.cols() != state.sensors()) {
    throw DomainError("attack covariance must be " + std::to_string(state.sensors()) + "x" +
                      std::to_string(state.sensors()));
  }
}

}  // namespace

Eigen::MatrixXd toeplitz_cov(Eigen::Index n, double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) throw DomainError("rho must lie in [0, 1)");
  if (n < 0) throw DomainError("dimension must be non-negative");
  Eigen::MatrixXd s(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      s(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
    }
  }
  return s;
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a) {
  const auto llt = factorize(a, "covariance");
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
  return 0.5 * (inv + inv.transpose());
}

double log_det_spd(const Eigen::MatrixXd& a) { return log_det_from(factorize(a, "matrix")); }

void require_psd(const Eigen::MatrixXd& a, const char* what) {
  if (a.rows() != a.cols()) throw DomainError(std::string(what) + " must be square");
  if (a.size() == 0) return;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw DomainError(std::string(what) + " must be symmetric");
  }
  if (a.isDiagonal(0.0)) {
    const double lmax = a.diagonal().maxCoeff();
    if (a.diagonal().minCoeff() < -1e-9 * std::max(1.0, lmax)) {
      throw DomainError(std::string(what) + " is not positive semidefinite");
    }
    return;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  if (ev.minCoeff() < -1e-9 * std::max(1.0, ev.maxCoeff())) {
    throw DomainError(std::string(what) + " is not positive semidefinite");
  }
}

StateModel build_state_model(const MeasurementModel& meas, double rho) {
  auto state = build_state_model(meas, toeplitz_cov(meas.states(), rho));
  state.rho = rho;
  return state;
}

StateModel build_state_model(const MeasurementModel& meas, const Eigen::MatrixXd& sigma_xx) {
  if (sigma_xx.rows() != meas.states() || sigma_xx.cols() != meas.states()) {
    throw DomainError("state covariance does not match the Jacobian column count");
  }
  if (!(meas.noise_variance >= 0)) throw DomainError("noise variance must be non-negative");
  require_psd(sigma_xx, "state covariance");

  StateModel state;
  state.sigma_xx = sigma_xx;
  state.noise_variance = meas.noise_variance;
  const auto m = meas.sensors();
  Eigen::MatrixXd signal = meas.jacobian * sigma_xx * meas.jacobian.transpose();
  state.sigma_yy = 0.5 * (signal + signal.transpose());
  state.sigma_yy.diagonal().array() += meas.noise_variance;

  const auto llt = factorize(state.sigma_yy, "observation covariance");
  state.chol_yy = llt.matrixL();
  state.log_det_yy = log_det_from(llt);
  Eigen::MatrixXd w = llt.solve(Eigen::MatrixXd::Identity(m, m));
  state.w = 0.5 * (w + w.transpose());
  return state;
}

double snr_db(const Eigen::MatrixXd& jacobian, const Eigen::MatrixXd& sigma_xx, double noise_variance) {
  const double tr = (jacobian * sigma_xx * jacobian.transpose()).trace();
  return 10.0 * std::log10(tr / (static_cast<double>(jacobian.rows()) * noise_variance));
}

double snr_to_noise_variance(const Eigen::MatrixXd& jacobian, const Eigen::MatrixXd& sigma_xx,
                             double snr_db) {
  const double tr = (jacobian * sigma_xx * jacobian.transpose()).trace();
  if (!(tr > 0)) throw DomainError("signal power tr(H Sxx H^T) must be positive");
  return tr / (static_cast<double>(jacobian.rows()) * std::pow(10.0, snr_db / 10.0));
}

double mutual_information(const StateModel& state, const Eigen::MatrixXd& sigma_aa) {
  require_square(state, sigma_aa);
  require_psd(sigma_aa, "attack covariance");
  Eigen::MatrixXd attacked = state.sigma_yy + sigma_aa;
  Eigen::MatrixXd noise = sigma_aa;
  noise.diagonal().array() += state.noise_variance;
  const double mi = 0.5 * (log_det_spd(attacked) - log_det_spd(noise));
  return std::max(mi, 0.0);
}

double kl_divergence(const StateModel& state, const Eigen::MatrixXd& sigma_aa) {
  require_square(state, sigma_aa);
  require_psd(sigma_aa, "attack covariance");
  // With L L^T = Syy and M = L^-1 Saa L^-T, W Sya has the spectrum of I + M,
  // so D = 1/2 sum(mu - log1p(mu)) over the eigenvalues mu of M.
  const auto lower = state.chol_yy.triangularView<Eigen::Lower>();
  Eigen::MatrixXd m = lower.solve(sigma_aa);
  m = lower.solve(m.transpose().eval());
  m = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  double d = 0.0;
  for (const double mu : eig.eigenvalues()) {
    const double clamped = std::max(mu, 0.0);
    d += clamped - std::log1p(clamped);
  }
  return 0.5 * d;
}

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix64(seed + kGolden);
  for (const auto key : keys) h = mix64(h ^ mix64(key + kGolden));
  return h;
}

StreamEngine::StreamEngine(SampleStream stream)
    : state_(mix64(stream.seed ^ mix64(stream.trial_counter * kGolden + 0xD1B54A32D192ED03ULL))) {}

StreamEngine::result_type StreamEngine::operator()() { return mix64(state_ += kGolden); }

Eigen::VectorXd standard_normal(Eigen::Index n, SampleStream stream) {
  StreamEngine engine(stream);
  std::normal_distribution<double> normal;
  Eigen::VectorXd g(n);
  for (Eigen::Index i = 0; i < n; ++i) g(i) = normal(engine);
  return g;
}

Eigen::VectorXd sample_mvn(const Eigen::MatrixXd& factor, SampleStream stream) {
  return factor * standard_normal(factor.cols(), stream);
}

}  // namespace sgl
