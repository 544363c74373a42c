#include "stealth_grid/detector.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>
#include <vector>

#include "stealth_grid/errors.hpp"

namespace sgl {

namespace {

void fill_standard_normal(Eigen::VectorXd& out, SampleStream stream) {
  StreamEngine engine(stream);
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = normal(engine);
}

// Square root of a PSD attack covariance. Diagonal inputs (the only kind the
// greedy construction produces) keep a diagonal factor.
struct AttackFactor {
  bool diagonal = true;
  Eigen::VectorXd scale;
  Eigen::MatrixXd dense;

  explicit AttackFactor(const Eigen::MatrixXd& sigma_aa) {
    if (sigma_aa.isDiagonal(0.0)) {
      scale = sigma_aa.diagonal().cwiseMax(0.0).cwiseSqrt();
      return;
    }
    diagonal = false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma_aa);
    dense = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }

  void apply_add(const Eigen::VectorXd& h, Eigen::VectorXd& y) const {
    if (diagonal) {
      y.array() += scale.array() * h.array();
    } else {
      y.noalias() += dense * h;
    }
  }
};

struct Counts {
  std::int64_t detections = 0;
  std::int64_t false_alarms = 0;
};

}  // namespace

LrtModel make_lrt_model(const StateModel& state, const Eigen::MatrixXd& sigma_aa, double tau) {
  if (!(tau > 0)) throw DomainError("tau must be positive");
  if (sigma_aa.rows() != state.sensors() || sigma_aa.cols() != state.sensors()) {
    throw DomainError("attack covariance has wrong shape");
  }
  require_psd(sigma_aa, "attack covariance");
  LrtModel model;
  model.chol_yy = state.chol_yy;
  model.log_det_yy = state.log_det_yy;
  Eigen::LLT<Eigen::MatrixXd> llt(state.sigma_yy + sigma_aa);
  if (llt.info() != Eigen::Success) throw NumericalError("attacked covariance is not positive definite");
  model.chol_yaya = llt.matrixL();
  model.log_det_yaya = 2.0 * model.chol_yaya.diagonal().array().log().sum();
  model.log_tau = std::log(tau);
  return model;
}

double log_likelihood_ratio(const LrtModel& model, const Eigen::VectorXd& y) {
  if (y.size() != model.chol_yy.rows()) throw DomainError("observation has wrong length");
  const double q_yy = model.chol_yy.triangularView<Eigen::Lower>().solve(y).squaredNorm();
  const double q_yaya = model.chol_yaya.triangularView<Eigen::Lower>().solve(y).squaredNorm();
  return 0.5 * (q_yy - q_yaya + model.log_det_yy - model.log_det_yaya);
}

DetectionEstimate estimate_probabilities(const StateModel& state, const Eigen::MatrixXd& sigma_aa, double tau,
                                         std::int64_t trials, std::uint64_t seed, unsigned threads) {
  if (trials < 1) throw DomainError("trials must be at least 1");
  const auto model = make_lrt_model(state, sigma_aa, tau);
  const AttackFactor attack(sigma_aa);
  const auto m = state.sensors();

  auto run_range = [&](std::int64_t begin, std::int64_t end) {
    Counts counts;
    Eigen::VectorXd g(m), h(m), y(m), work(m);
    const auto lower_yy = model.chol_yy.triangularView<Eigen::Lower>();
    const auto lower_ya = model.chol_yaya.triangularView<Eigen::Lower>();
    auto llr = [&](const Eigen::VectorXd& obs) {
      work = obs;
      lower_yy.solveInPlace(work);
      const double q_yy = work.squaredNorm();
      work = obs;
      lower_ya.solveInPlace(work);
      const double q_ya = work.squaredNorm();
      return 0.5 * (q_yy - q_ya + model.log_det_yy - model.log_det_yaya);
    };
    for (std::int64_t t = begin; t < end; ++t) {
      const auto counter = static_cast<std::uint64_t>(t);
      fill_standard_normal(g, {seed, 2 * counter});
      fill_standard_normal(h, {seed, 2 * counter + 1});
      y.noalias() = lower_yy * g;
      if (llr(y) >= model.log_tau) ++counts.false_alarms;
      attack.apply_add(h, y);
      if (llr(y) >= model.log_tau) ++counts.detections;
    }
    return counts;
  };

  const auto workers = static_cast<std::int64_t>(std::max(1u, std::min<unsigned>(threads, 256u)));
  std::vector<Counts> partial(static_cast<std::size_t>(workers));
  if (workers == 1) {
    partial[0] = run_range(0, trials);
  } else {
    std::vector<std::jthread> pool;
    const auto chunk = (trials + workers - 1) / workers;
    for (std::int64_t w = 0; w < workers; ++w) {
      const auto begin = std::min(trials, w * chunk);
      const auto end = std::min(trials, begin + chunk);
      pool.emplace_back([&, w, begin, end] { partial[static_cast<std::size_t>(w)] = run_range(begin, end); });
    }
  }

  Counts total;
  for (const auto& c : partial) {
    total.detections += c.detections;
    total.false_alarms += c.false_alarms;
  }
  DetectionEstimate est;
  est.trials = trials;
  est.seed = seed;
  est.p_detection = static_cast<double>(total.detections) / static_cast<double>(trials);
  est.p_false_alarm = static_cast<double>(total.false_alarms) / static_cast<double>(trials);
  return est;
}

}  // namespace sgl
