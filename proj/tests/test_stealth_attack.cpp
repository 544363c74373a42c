#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "stealth_grid/errors.hpp"
#include "stealth_grid/experiment.hpp"
#include "stealth_grid/stealth_attack.hpp"
#include "test_support.hpp"

using namespace sgl;

namespace {

Eigen::MatrixXd scalar(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

StateModel scalar_state() {
  return build_state_model(oracle::make_measurement(scalar(1.0), 1.0), scalar(1.0));
}

const StateModel& ieee30_state() {
  static const StateModel state = [] {
    const auto meas = calibrated_model(load_case(oracle::case_path("case_ieee30.m")), 30.0, 0.1);
    return build_state_model(meas, 0.1);
  }();
  return state;
}

double printed_variance(double w, double s2, double lambda) {
  return -s2 / 2.0 + 0.5 * std::sqrt(s2 * s2 - 4.0 * (w * s2 - 1.0) / (lambda * w * w));
}

}  // namespace

TEST(StealthObjective, ZeroAttackUnitNoise) {
  std::mt19937_64 rng(1);
  const auto s = build_state_model(oracle::make_measurement(oracle::random_matrix(5, 3, rng), 1.0),
                                   oracle::random_spd(3, rng));
  EXPECT_NEAR(stealth_objective(s, Eigen::MatrixXd::Zero(5, 5), 2.0), 0.0, 1e-12);
}

TEST(StealthObjective, ScalarValue) {
  // (1 - 2) ln 1.5 - ln 2 + 2 * 0.5 by hand ...
  const double direct = -std::log(1.5) - std::log(2.0) + 1.0;
  // ... and 2 (I + lambda D) - ln Syy with I = ln(1.5)/2 and D from quadrature.
  auto integrand = [](double y) {
    const double la = oracle::log_normal_pdf(y, 3.0);
    return std::exp(la) * (la - oracle::log_normal_pdf(y, 2.0));
  };
  const double kl = oracle::simpson(integrand, -40.0, 40.0, 20000);
  const double via_information = 2.0 * (0.5 * std::log(1.5) + 2.0 * kl) - std::log(2.0);
  EXPECT_NEAR(direct, via_information, 1e-9);
  EXPECT_NEAR(direct, -0.0986123, 1e-7);
  EXPECT_NEAR(stealth_objective(scalar_state(), scalar(1.0), 2.0), direct, 1e-14);
}

TEST(StealthObjective, DifferencesMatchInformationCost) {
  std::mt19937_64 rng(8);
  const auto s = build_state_model(oracle::make_measurement(oracle::random_matrix(7, 4, rng), 0.3),
                                   oracle::random_spd(4, rng));
  for (const double lambda : {1.5, 2.0, 30.0}) {
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::MatrixXd b1 = oracle::random_matrix(7, 3, rng);
      const Eigen::MatrixXd b2 = oracle::random_matrix(7, 3, rng);
      const Eigen::MatrixXd a1 = 0.2 * b1 * b1.transpose();
      const Eigen::MatrixXd a2 = 0.2 * b2 * b2.transpose();
      const double lhs = stealth_objective(s, a1, lambda) - stealth_objective(s, a2, lambda);
      const double rhs = 2.0 * (mutual_information(s, a1) + lambda * kl_divergence(s, a1) -
                                mutual_information(s, a2) - lambda * kl_divergence(s, a2));
      EXPECT_NEAR(lhs, rhs, 1e-9);
    }
  }
}

TEST(StealthObjective, RejectsNonPsd) {
  EXPECT_THROW(stealth_objective(scalar_state(), scalar(-1.0), 2.0), DomainError);
}

TEST(UnconstrainedOptimum, Scaling) {
  const auto& s = ieee30_state();
  const auto m = s.sensors();
  const Eigen::MatrixXd signal = s.sigma_yy - s.noise_variance * Eigen::MatrixXd::Identity(m, m);
  const auto at_one = unconstrained_optimum(s, 1.0);
  EXPECT_EQ(at_one, signal);
  EXPECT_EQ(unconstrained_optimum(s, 2.0), at_one / 2.0);
  EXPECT_NO_THROW(require_psd(unconstrained_optimum(s, 30.0)));
  EXPECT_THROW(unconstrained_optimum(s, 0.5), DomainError);
}

TEST(UnconstrainedOptimum, MinimizesObjectiveAtUnitLambda) {
  // With lambda = 1 the cost reduces to -log|s2 I + Saa| + tr(W Saa), whose
  // gradient vanishes at Saa = H Sxx H^T.
  const auto& s = ieee30_state();
  const auto m = s.sensors();
  const auto best = unconstrained_optimum(s, 1.0);
  const double at_best = stealth_objective(s, best, 1.0);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> scale(0.5, 1.5);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd candidate;
    if (trial % 2 == 0) {
      const Eigen::MatrixXd b = oracle::random_matrix(m, 3, rng);
      candidate = best + 1e-2 * s.noise_variance * b * b.transpose();
    } else {
      candidate = scale(rng) * best;
    }
    EXPECT_LE(at_best, stealth_objective(s, candidate, 1.0) + 1e-9) << "trial " << trial;
  }
}

TEST(SingleSensorVariance, ClosedFormExample) {
  const double r = optimal_single_variance(0.5, 1.0, 2.0);
  EXPECT_NEAR(r, (std::sqrt(5.0) - 1.0) / 2.0, 1e-15);
  EXPECT_NEAR(r, 0.618034, 1e-6);
  EXPECT_NEAR(oracle::numeric_single_minimizer(0.5, 1.0, 2.0), r, 1e-6);
}

TEST(SingleSensorVariance, MatchesPrintedFormula) {
  for (const double s2 : {1e-3, 0.05, 1.0}) {
    for (const double lambda : {1.5, 2.0, 30.0}) {
      for (const double frac : {0.01, 0.3, 0.9, 0.999}) {
        const double w = frac / s2;
        const double r = optimal_single_variance(w, s2, lambda);
        EXPECT_NEAR(r, printed_variance(w, s2, lambda), 1e-12 * std::max(1.0, r));
        EXPECT_NEAR(r / oracle::numeric_single_minimizer(w, s2, lambda), 1.0, 1e-6);
      }
    }
  }
}

TEST(SingleSensorVariance, VanishesAsLambdaGrows) {
  double previous = optimal_single_variance(0.5, 1.0, 2.0);
  for (const double lambda : {1e3, 1e6, 1e9}) {
    const double r = optimal_single_variance(0.5, 1.0, lambda);
    EXPECT_LT(r, previous);
    EXPECT_GT(r, 0.0);
    previous = r;
  }
  EXPECT_LT(previous, 1e-8);
  EXPECT_EQ(optimal_single_variance(1.0, 1.0, 5.0), 0.0);
}

TEST(SingleSensorAttack, PicksSmallestPrecision) {
  const auto& s = ieee30_state();
  const auto sol = single_sensor_attack(s, 2.0);
  Eigen::Index expected = 0;
  s.w.diagonal().minCoeff(&expected);
  EXPECT_EQ(sol.alpha, expected);
  EXPECT_EQ(sol.w_min, s.w(expected, expected));
  EXPECT_NEAR(sol.variance, printed_variance(sol.w_min, s.noise_variance, 2.0), 1e-12);
}

TEST(SingleSensorAttack, TiesGoToLowestIndex) {
  const auto s = build_state_model(oracle::make_measurement(Eigen::MatrixXd::Identity(3, 3), 0.5),
                                   Eigen::MatrixXd::Identity(3, 3));
  EXPECT_EQ(single_sensor_attack(s, 2.0).alpha, 0);
  EXPECT_EQ(greedy_k_sparse(s, 2.0, 3).support, (std::vector<Eigen::Index>{0, 1, 2}));
}

TEST(SingleSensorAttack, Errors) {
  EXPECT_THROW(single_sensor_attack(scalar_state(), 1.0), DomainError);
  EXPECT_THROW(single_sensor_attack(scalar_state(), 0.5), DomainError);
  // Sensors that do not observe the state: w sigma^2 = 1.
  const auto blind = build_state_model(oracle::make_measurement(Eigen::MatrixXd::Zero(2, 1), 0.7), scalar(1.0));
  EXPECT_THROW(single_sensor_attack(blind, 2.0), DegenerateAttackError);
}

TEST(SingleSensorAttack, ExhaustiveSearchAgrees) {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> log_s2(std::log(1e-3), 0.0);
  for (int trial = 0; trial < 25; ++trial) {
    const double s2 = std::exp(log_s2(rng));
    const auto meas = oracle::make_measurement(oracle::random_matrix(4, 3, rng), s2);
    const auto s = build_state_model(meas, oracle::random_spd(3, rng));
    for (const double lambda : {1.5, 2.0, 30.0}) {
      const auto sol = single_sensor_attack(s, lambda);
      Eigen::Index best_i = -1;
      double best_cost = 0.0, best_r = 0.0;
      const Eigen::MatrixXd w = s.sigma_yy.inverse();
      for (Eigen::Index i = 0; i < 4; ++i) {
        const double r = oracle::numeric_single_minimizer(w(i, i), s2, lambda);
        const double cost = oracle::single_cost(r, w(i, i), s2, lambda);
        if (best_i < 0 || cost < best_cost) best_i = i, best_cost = cost, best_r = r;
      }
      EXPECT_EQ(sol.alpha, best_i);
      EXPECT_NEAR(sol.variance / best_r, 1.0, 1e-6);
    }
  }
}

TEST(GreedyKSparse, FirstRoundIsSingleSensorAttack) {
  const auto& s = ieee30_state();
  for (const double lambda : {1.5, 2.0, 30.0}) {
    const auto plan = greedy_k_sparse(s, lambda, 1);
    const auto sol = single_sensor_attack(s, lambda);
    ASSERT_EQ(plan.size(), 1u);
    EXPECT_EQ(plan.support[0], sol.alpha);
    EXPECT_EQ(plan.variances[0], sol.variance);
  }
}

TEST(GreedyKSparse, ToyModelMatchesNaiveRecomputation) {
  Eigen::MatrixXd h(3, 2);
  h << 1.0, 0.0, 1.0, 1.0, 0.0, 2.0;
  Eigen::MatrixXd sxx(2, 2);
  sxx << 1.0, 0.3, 0.3, 1.0;
  const auto meas = oracle::make_measurement(h, 0.5);
  const auto plan = greedy_k_sparse(meas, sxx, 2.0, 2);
  const auto naive = oracle::naive_greedy(h, sxx, 0.5, 2.0, 2);
  ASSERT_EQ(plan.size(), 2u);
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_EQ(plan.support[j], naive[j].sensor);
    EXPECT_NEAR(plan.w_min[j], naive[j].w, 1e-12);
    EXPECT_NEAR(plan.variances[j], naive[j].variance, 1e-12);
  }
  EXPECT_EQ(greedy_k_sparse(build_state_model(meas, sxx), 2.0, 2).support, plan.support);
}

TEST(GreedyKSparse, SelectionIndependentOfLambda) {
  const auto& s = ieee30_state();
  const auto base = greedy_k_sparse(s, 2.0, 20);
  for (const double lambda : {1.01, 5.0, 30.0, 1e4}) {
    EXPECT_EQ(greedy_k_sparse(s, lambda, 20).support, base.support);
  }
}

TEST(GreedyKSparse, MutualInformationNonIncreasing) {
  const auto& s = ieee30_state();
  const auto plan = greedy_k_sparse(s, 2.0, s.sensors());
  double previous = mutual_information(s, Eigen::MatrixXd::Zero(s.sensors(), s.sensors()));
  for (std::size_t k = 1; k <= plan.size(); ++k) {
    const double mi = mutual_information(s, plan.prefix(k).sigma_aa);
    EXPECT_LE(mi, previous + 1e-9) << "k = " << k;
    previous = mi;
  }
}

TEST(GreedyKSparse, VariancesFollowClosedForm) {
  const auto& s = ieee30_state();
  const auto plan = greedy_k_sparse(s, 2.0, s.sensors());
  ASSERT_EQ(plan.size(), static_cast<std::size_t>(s.sensors()));
  std::vector<bool> seen(plan.size(), false);
  for (std::size_t j = 0; j < plan.size(); ++j) {
    EXPECT_GT(plan.variances[j], 0.0);
    const double expected = printed_variance(plan.w_min[j], s.noise_variance, 2.0);
    EXPECT_NEAR(plan.variances[j], expected, 1e-12 * std::max(1.0, expected));
    ASSERT_FALSE(seen[static_cast<std::size_t>(plan.support[j])]);
    seen[static_cast<std::size_t>(plan.support[j])] = true;
  }
  // Assembled covariance is in the diagonal k-sparse family.
  EXPECT_TRUE(plan.sigma_aa.isDiagonal(0.0));
  EXPECT_EQ((plan.sigma_aa.diagonal().array() != 0.0).count(), s.sensors());
}

TEST(GreedyKSparse, DomainErrors) {
  const auto& s = ieee30_state();
  EXPECT_THROW(greedy_k_sparse(s, 2.0, 0), DomainError);
  EXPECT_THROW(greedy_k_sparse(s, 2.0, s.sensors() + 1), DomainError);
  EXPECT_THROW(greedy_k_sparse(s, 1.0, 3), DomainError);
}

TEST(GreedyKSparse, DegenerateRoundIsReported) {
  Eigen::MatrixXd h(3, 2);
  h << 1.0, 0.0, 0.0, 1.0, 0.0, 0.0;
  const auto meas = oracle::make_measurement(h, 0.5);
  EXPECT_NO_THROW(greedy_k_sparse(meas, Eigen::MatrixXd::Identity(2, 2), 2.0, 2));
  try {
    greedy_k_sparse(meas, Eigen::MatrixXd::Identity(2, 2), 2.0, 3);
    FAIL() << "expected DegenerateAttackError";
  } catch (const DegenerateAttackError& e) {
    EXPECT_EQ(e.round(), 3u);
    EXPECT_EQ(e.partial().size(), 2u);
    EXPECT_EQ(e.partial().support, (std::vector<Eigen::Index>{0, 1}));
  }
}

TEST(AssembleCov, Examples) {
  const auto s = assemble_cov({1}, {0.5}, 3);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(3, 3);
  expected(1, 1) = 0.5;
  EXPECT_EQ(s, expected);
  EXPECT_EQ(assemble_cov({}, {}, 4), Eigen::MatrixXd::Zero(4, 4));
  EXPECT_THROW(assemble_cov({3}, {0.5}, 3), DomainError);
  EXPECT_THROW(assemble_cov({0, 0}, {0.5, 0.2}, 3), DomainError);

  const auto& state = ieee30_state();
  const auto plan = greedy_k_sparse(state, 2.0, 10);
  EXPECT_EQ((plan.sigma_aa.diagonal().array() != 0.0).count(), 10);
  double total = 0.0;
  for (const double v : plan.variances) total += v;
  EXPECT_NEAR(plan.sigma_aa.trace(), total, 1e-12 * total);
}

TEST(TheoremStructure, InnerCostMidpointConvex) {
  for (const double lambda : {1.5, 2.0, 30.0}) {
    auto f = [lambda](double t) { return lambda * t - lambda + (1.0 - lambda) * std::log(t); };
    for (double t1 = 1.0; t1 <= 10.0; t1 += 0.25) {
      for (double t2 = t1; t2 <= 10.0; t2 += 0.25) {
        EXPECT_LE(f(0.5 * (t1 + t2)), 0.5 * (f(t1) + f(t2)) + 1e-12);
      }
    }
  }
}

TEST(TheoremStructure, OuterCostHasSingleMinimizer) {
  for (const double s2 : {1e-3, 1.0}) {
    for (const double lambda : {1.5, 2.0, 30.0}) {
      const double w = 0.4 / s2;
      const double r_star = optimal_single_variance(w, s2, lambda);
      double previous = oracle::single_cost(r_star * 1e-4, w, s2, lambda);
      for (double f = 1e-4 * 1.1; f < 1e4; f *= 1.1) {
        const double g = oracle::single_cost(r_star * f, w, s2, lambda);
        if (f < 1.0) {
          EXPECT_LT(g, previous) << "should decrease below r*";
        } else if (f > 1.1) {
          EXPECT_GT(g, previous) << "should increase above r*";
        }
        previous = g;
      }
    }
  }
}
