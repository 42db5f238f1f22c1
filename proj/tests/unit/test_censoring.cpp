#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace owsurv;

namespace {

// Independent exponential failure and censoring, no covariate effects.
SurvivalDataset exponential_dataset(std::size_t n, double fail_rate, double cens_rate, std::uint64_t seed) {
  RandomStream rng(seed, 0, StreamDomain::test);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 1);
  std::vector<int> a(n), d(n);
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(static_cast<Eigen::Index>(i), 0) = rng.normal();
    a[i] = i % 2 == 0 ? kTreated : kControl;
    const double t = -std::log(rng.uniform()) / fail_rate;
    const double c = -std::log(rng.uniform()) / cens_rate;
    u[i] = std::min(t, c);
    d[i] = t <= c;
  }
  return SurvivalDataset(std::move(x), std::move(a), std::move(u), std::move(d));
}

}  // namespace

TEST(Censoring, ExponentialRecovery) {
  const SurvivalDataset d = exponential_dataset(100000, 0.3, 0.5, 1);
  WeibullOptions opt;
  opt.use_covariates = false;
  const WeibullCensoringFit f = fit_weibull_censoring(d, kTreated, opt);
  ASSERT_TRUE(f.converged);
  EXPECT_NEAR(f.log_gamma, 0.0, 0.02);
  EXPECT_NEAR(f.theta(0), std::log(0.5), 0.03);
  EXPECT_EQ(f.theta.size(), 2);
  EXPECT_EQ(f.theta(1), 0.0);
}

TEST(Censoring, BruteForceOracleSmallSample) {
  // Ten subjects in the treated arm with a covariate; two controls fill the other arm.
  const auto d = fixture::make_dataset(
      {{0.3}, {-1.0}, {0.8}, {1.5}, {-0.2}, {0.0}, {-0.6}, {1.1}, {0.4}, {-1.4}, {0.0}, {1.0}},
      {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0}, {0.5, 1.2, 2.3, 0.8, 3.1, 1.7, 0.9, 2.6, 0.3, 4.0, 1.0, 2.0},
      {0, 1, 0, 0, 1, 0, 1, 0, 1, 0, 1, 0});
  const WeibullCensoringFit f = fit_weibull_censoring(d, kTreated);
  Eigen::VectorXd fit(3);
  fit << f.log_gamma, f.theta(0), f.theta(1);
  const Eigen::VectorXd oracle = fixture::grid_maximize(
      [&](const Eigen::VectorXd& p) { return fixture::weibull_censoring_loglik(d, kTreated, p); },
      Eigen::VectorXd::Zero(3), 4.0);
  EXPECT_LE((fit - oracle).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_NEAR(f.log_likelihood, fixture::weibull_censoring_loglik(d, kTreated, oracle), 1e-6);
}

TEST(Censoring, RecoversSimulationCensoringModel) {
  ScenarioConfig cfg;
  cfg.n = 200000;
  cfg.psi = 1.0;
  const SurvivalDataset d = generate_dataset(cfg, 0.35, 0);
  const WeibullCensoringFit f = fit_weibull_censoring(d, kControl);
  EXPECT_NEAR(f.log_gamma, 0.0, 0.03);
  EXPECT_NEAR(f.theta(0), -3.0, 0.08);
  for (std::size_t j = 0; j < kCovariates; ++j) EXPECT_NEAR(f.theta(static_cast<Eigen::Index>(j + 1)), kCensorSlopes[j], 0.06);
}

TEST(Censoring, ScoreBasics) {
  WeibullCensoringFit f;
  f.log_gamma = 0.0;
  f.theta = Eigen::Vector2d(std::log(2.0), 0.0);
  const Eigen::RowVectorXd x = Eigen::RowVectorXd::Constant(1, 0.7);
  EXPECT_EQ(f.survival(0.0, x), 1.0);
  EXPECT_NEAR(f.survival(0.5, x), std::exp(-1.0), 1e-15);
  EXPECT_THROW(f.survival(-0.1, x), UsageError);

  std::size_t floors = 0;
  EXPECT_EQ(eval_censoring_score(f, 100.0, x, floors, 1e-6), 1e-6);
  EXPECT_EQ(floors, 1u);
  EXPECT_NEAR(eval_censoring_score(f, 0.5, x, floors, 1e-6), std::exp(-1.0), 1e-15);
  EXPECT_EQ(floors, 1u);

  CensoringScore score(f);
  EXPECT_TRUE(score.floored(100.0, x));
  EXPECT_EQ(score(100.0, x), kDefaultCensoringFloor);
  EXPECT_EQ(score.floor_count(), 1u);
  CensoringScore none(NoCensoringModel{});
  EXPECT_EQ(none(12.0, x), 1.0);
}

TEST(Censoring, KaplanMeierHandTable) {
  const auto d = fixture::make_dataset({{0.0}, {0.0}, {0.0}, {1.0}, {1.0}}, {1, 1, 1, 0, 0}, {1, 2, 3, 1, 2},
                                       {0, 1, 0, 1, 1});
  const KaplanMeierCensoring km = fit_km_censoring(d, kTreated);
  EXPECT_EQ(km.survival(0.0), 1.0);
  EXPECT_EQ(km.survival(1.0), 1.0);
  EXPECT_NEAR(km.survival(1.0001), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(km.survival(2.5), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(km.survival(3.0), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(km.survival(3.5), 0.0);
  EXPECT_THROW(km.survival(-1.0), UsageError);

  const KaplanMeierCensoring all_events = fit_km_censoring(d, kControl);
  for (double t : {0.0, 1.0, 5.0}) EXPECT_EQ(all_events.survival(t), 1.0);
}

TEST(Censoring, ScoresAreNonIncreasing) {
  const SurvivalDataset d = fixture::random_dataset(8, {.n = 600});
  const WeibullCensoringFit w = fit_weibull_censoring(d, kTreated);
  const KaplanMeierCensoring km = fit_km_censoring(d, kTreated);
  const Eigen::RowVectorXd x = d.covariates().row(0);
  double prev_w = 1.0, prev_k = 1.0;
  for (double t = 0.0; t < 20.0; t += 0.05) {
    const double sw = w.survival(t, x), sk = km.survival(t);
    EXPECT_LE(sw, prev_w + 1e-15);
    EXPECT_LE(sk, prev_k + 1e-15);
    EXPECT_GE(sw, 0.0);
    EXPECT_GE(sk, 0.0);
    prev_w = sw;
    prev_k = sk;
  }
}

TEST(Censoring, InterceptOnlyWeibullTracksKaplanMeier) {
  const SurvivalDataset d = exponential_dataset(20000, 0.2, 0.15, 2);
  WeibullOptions opt;
  opt.use_covariates = false;
  const WeibullCensoringFit w = fit_weibull_censoring(d, kControl, opt);
  const KaplanMeierCensoring km = fit_km_censoring(d, kControl);
  std::vector<double> u;
  for (auto i : d.arm_rows(kControl)) u.push_back(d.time()[i]);
  const Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(1);
  for (int q = 1; q <= 9; ++q) {
    const double t = nearest_rank_quantile(u, q / 10.0);
    EXPECT_NEAR(w.survival(t, x), km.survival(t), 0.02) << "decile " << q;
  }
}

TEST(Censoring, Errors) {
  const auto no_cens = fixture::make_dataset({{0.0}, {1.0}, {0.5}}, {1, 0, 1}, {1, 2, 3}, {1, 1, 1});
  EXPECT_THROW(fit_weibull_censoring(no_cens, kTreated), ModelError);
  const auto zero_time = fixture::make_dataset({{0.0}, {1.0}, {0.5}}, {1, 0, 1}, {0, 2, 3}, {0, 0, 1});
  try {
    fit_weibull_censoring(zero_time, kTreated);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.row(), 1u);
  }
}
