#include <gtest/gtest.h>

#include <algorithm>

#include "helpers.hpp"

using namespace owsurv;

namespace {

PropensityFit fixed_ps(std::vector<double> ps) {
  PropensityFit f;
  f.beta = Eigen::VectorXd::Zero(2);
  f.converged = true;
  f.fitted_ps = std::move(ps);
  return f;
}

double weighted_mean_gap(const SurvivalDataset& d, const WeightSet& ws, std::size_t j) {
  double s[2] = {0, 0}, w[2] = {0, 0};
  for (std::size_t i = 0; i < d.n(); ++i) {
    const int a = d.treatment()[i];
    s[a] += ws.weights[i] * d.covariates()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    w[a] += ws.weights[i];
  }
  return s[1] / w[1] - s[0] / w[0];
}

}  // namespace

TEST(Weights, ClosedForms) {
  EXPECT_NEAR(weight_for(WeightKind::overlap, kTreated, 0.8), 0.2, 1e-15);
  EXPECT_NEAR(weight_for(WeightKind::iptw, kTreated, 0.8), 1.25, 1e-15);
  EXPECT_NEAR(weight_for(WeightKind::matching, kTreated, 0.8), 0.25, 1e-15);
  EXPECT_NEAR(weight_for(WeightKind::overlap, kControl, 0.8), 0.8, 1e-15);
  EXPECT_NEAR(weight_for(WeightKind::iptw, kControl, 0.8), 5.0, 1e-12);
  EXPECT_NEAR(weight_for(WeightKind::matching, kControl, 0.8), 1.0, 1e-15);
  for (int a : {kTreated, kControl}) {
    EXPECT_EQ(weight_for(WeightKind::overlap, a, 0.5), 0.5);
    EXPECT_EQ(weight_for(WeightKind::iptw, a, 0.5), 2.0);
    EXPECT_EQ(weight_for(WeightKind::matching, a, 0.5), 1.0);
  }
}

TEST(Weights, SchemeValidationAndLabels) {
  EXPECT_THROW(WeightScheme::symmetric_trim(0.5), UsageError);
  EXPECT_THROW(WeightScheme::asymmetric_trim(-0.1), UsageError);
  EXPECT_EQ(WeightScheme::symmetric_trim(0.1).label(), "symtrim(0.1)");
  EXPECT_EQ(WeightScheme::overlap().label(), "ow");
  EXPECT_EQ(WeightScheme::symmetric_trim(0.1).target_kind(), WeightKind::iptw);
}

TEST(Weights, SymmetricMask) {
  EXPECT_EQ(detail::symmetric_mask({0.05, 0.5, 0.95}, 0.1), (std::vector<std::uint8_t>{0, 1, 0}));
  EXPECT_EQ(detail::symmetric_mask({0.1, 0.9, 0.1000001}, 0.1), (std::vector<std::uint8_t>{0, 0, 1}));
}

TEST(Weights, NearestRankQuantile) {
  const std::vector<double> v = {10, 3, 7, 1, 5, 9, 2, 8, 4, 6};
  EXPECT_EQ(nearest_rank_quantile(v, 0.0), 1.0);
  EXPECT_EQ(nearest_rank_quantile(v, 0.25), 3.0);
  EXPECT_EQ(nearest_rank_quantile(v, 0.3), 3.0);
  EXPECT_EQ(nearest_rank_quantile(v, 0.31), 4.0);
  EXPECT_EQ(nearest_rank_quantile(v, 1.0), 10.0);
  EXPECT_THROW(nearest_rank_quantile({}, 0.5), UsageError);
}

TEST(Weights, AsymmetricMaskMatchesRowScan) {
  RandomStream rng(17, 0, StreamDomain::test);
  for (double q : {0.0, 0.01, 0.05, 0.2}) {
    std::vector<double> ps;
    std::vector<int> arm;
    // Treated PS spread over (0.2, 0.9), controls over (0.1, 0.8), endpoints attained.
    ps.insert(ps.end(), {0.2, 0.9, 0.1, 0.8});
    arm.insert(arm.end(), {1, 1, 0, 0});
    for (int i = 0; i < 200; ++i) {
      ps.push_back(0.2 + 0.7 * rng.uniform());
      arm.push_back(1);
      ps.push_back(0.1 + 0.7 * rng.uniform());
      arm.push_back(0);
    }
    const auto mask = detail::asymmetric_mask(ps, arm, q);
    // Oracle: scan rows for common support, then rank-based quantiles on survivors.
    std::vector<double> st, sc;
    for (std::size_t i = 0; i < ps.size(); ++i)
      if (ps[i] >= 0.2 && ps[i] <= 0.8) (arm[i] ? st : sc).push_back(ps[i]);
    std::sort(st.begin(), st.end());
    std::sort(sc.begin(), sc.end());
    std::size_t rt = static_cast<std::size_t>(std::ceil(q * st.size() - 1e-9)), rc = static_cast<std::size_t>(std::ceil((1 - q) * sc.size() - 1e-9));
    rt = std::max<std::size_t>(rt, 1);
    rc = std::max<std::size_t>(rc, 1);
    const double lo = st[rt - 1], hi = sc[rc - 1];
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const bool keep = ps[i] >= 0.2 && ps[i] <= 0.8 && ps[i] >= lo && ps[i] <= hi;
      EXPECT_EQ(mask[i] != 0, keep) << "q=" << q << " row " << i << " ps " << ps[i];
    }
    if (q == 0.0) {
      for (std::size_t i = 0; i < ps.size(); ++i) EXPECT_EQ(mask[i] != 0, ps[i] >= 0.2 && ps[i] <= 0.8);
    }
  }
}

TEST(Weights, ComputeWeightsInvariants) {
  const SurvivalDataset d = fixture::random_dataset(31, {.n = 800, .p = 3, .ps_strength = 1.2});
  const PropensityFit f = fit_logistic(d);
  const WeightSet iptw = compute_weights(WeightScheme::iptw(), d, f);
  const WeightSet ow = compute_weights(WeightScheme::overlap(), d, f);
  const WeightSet mw = compute_weights(WeightScheme::matching(), d, f);
  double tot[2] = {0, 0};
  for (std::size_t i = 0; i < d.n(); ++i) {
    EXPECT_GT(iptw.weights[i], 1.0);
    EXPECT_GT(ow.weights[i], 0.0);
    EXPECT_LT(ow.weights[i], 1.0);
    EXPECT_GT(mw.weights[i], 0.0);
    EXPECT_LE(mw.weights[i], 1.0);
    tot[d.treatment()[i]] += iptw.weights[i];
  }
  EXPECT_NEAR(iptw.effective_n_treated, tot[1], 1e-9);
  EXPECT_NEAR(iptw.effective_n_control, tot[0], 1e-9);

  for (double alpha : {0.05, 0.1, 0.2}) {
    const WeightSet t = compute_weights(WeightScheme::symmetric_trim(alpha), d, f);
    ASSERT_TRUE(t.refit.has_value());
    for (std::size_t i = 0; i < d.n(); ++i) {
      EXPECT_EQ(t.included[i] != 0, f.fitted_ps[i] > alpha && f.fitted_ps[i] < 1 - alpha);
      EXPECT_EQ(t.included[i] == 0, t.weights[i] == 0.0);
      EXPECT_TRUE(std::isfinite(t.weights[i]));
      if (t.included[i])
        EXPECT_NEAR(t.weights[i], weight_for(WeightKind::iptw, d.treatment()[i], t.ps_used[i]), 1e-15);
    }
    const WeightSet nr = compute_weights(WeightScheme::symmetric_trim(alpha, false), d, f);
    EXPECT_FALSE(nr.refit.has_value());
    EXPECT_EQ(nr.ps_used, f.fitted_ps);
  }
}

TEST(Weights, RefitUsesRetainedRows) {
  const SurvivalDataset d = fixture::random_dataset(32, {.n = 800, .p = 3, .ps_strength = 1.2});
  const PropensityFit f = fit_logistic(d);
  const WeightSet t = compute_weights(WeightScheme::asymmetric_trim(0.05), d, f);
  ASSERT_TRUE(t.refit.has_value());
  const PropensityFit direct = fit_logistic(d.subset(t.retained_rows()));
  EXPECT_LE((direct.beta - t.refit->beta).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(t.n_retained(), d.n());
}

TEST(Weights, MonotoneTrimming) {
  const SurvivalDataset d = fixture::random_dataset(33, {.n = 1000, .p = 3, .ps_strength = 1.5});
  const PropensityFit f = fit_logistic(d);
  const auto m1 = detail::symmetric_mask(f.fitted_ps, 0.05), m2 = detail::symmetric_mask(f.fitted_ps, 0.15);
  for (std::size_t i = 0; i < d.n(); ++i)
    if (m2[i]) EXPECT_TRUE(m1[i]);
}

TEST(Weights, PositivityAndEmptyArmErrors) {
  const auto d = fixture::make_dataset({{0.0}, {1.0}, {0.5}, {0.2}}, {1, 0, 1, 0}, {1, 2, 3, 4}, {1, 0, 1, 1});
  try {
    compute_weights(WeightScheme::iptw(), d, fixed_ps({0.5, 1e-13, 0.5, 1.0 - 1e-14}));
    FAIL();
  } catch (const PositivityError& e) {
    EXPECT_EQ(e.rows(), (std::vector<std::size_t>{2, 4}));
  }
  // OW tolerates extreme scores.
  EXPECT_NO_THROW(compute_weights(WeightScheme::overlap(), d, fixed_ps({0.5, 1e-13, 0.5, 0.5})));
  EXPECT_THROW(compute_weights(WeightScheme::symmetric_trim(0.1, false), d, fixed_ps({0.95, 0.5, 0.99, 0.5})),
               EstimationError);
  EXPECT_THROW(compute_weights(WeightScheme::iptw(), d, fixed_ps({0.5})), UsageError);
}

TEST(Weights, OverlapWeightsBalanceExactly) {
  for (std::uint64_t seed = 40; seed < 45; ++seed) {
    const SurvivalDataset d = fixture::random_dataset(seed, {.n = 500, .p = 4, .ps_strength = 0.9});
    const PropensityFit f = fit_logistic(d);
    const WeightSet ow = compute_weights(WeightScheme::overlap(), d, f);
    const BalanceTable t = balance_table(d, ow);
    for (std::size_t j = 0; j < d.p(); ++j) {
      EXPECT_LE(std::abs(weighted_mean_gap(d, ow, j)), 1e-6);
      EXPECT_LE(std::abs(t.rows[j].mean_treated_wt - t.rows[j].mean_control_wt), 1e-6);
    }
  }
}

TEST(Weights, BalanceTableUniformAndHand) {
  const SurvivalDataset d = fixture::random_dataset(50, {.n = 300});
  const BalanceTable u = balance_table(d, uniform_weights(d));
  for (const auto& r : u.rows) {
    EXPECT_NEAR(r.mean_treated_wt, r.mean_treated_unwt, 1e-12);
    EXPECT_NEAR(r.mean_control_wt, r.mean_control_unwt, 1e-12);
    EXPECT_NEAR(r.smd_wt, r.smd_unwt, 1e-12);
  }

  // Five rows, arbitrary weights, recomputed cell by cell.
  const auto h = fixture::make_dataset({{1.0}, {3.0}, {2.0}, {6.0}, {4.0}}, {1, 1, 0, 0, 0}, {1, 1, 1, 1, 1},
                                       {1, 1, 1, 1, 1});
  WeightSet ws = uniform_weights(h);
  ws.weights = {0.5, 1.5, 2.0, 1.0, 1.0};
  const BalanceRow r = balance_table(h, ws).rows.at(0);
  EXPECT_NEAR(r.mean_treated_unwt, 2.0, 1e-15);
  EXPECT_NEAR(r.mean_control_unwt, 4.0, 1e-15);
  EXPECT_NEAR(r.mean_treated_wt, (0.5 * 1 + 1.5 * 3) / 2.0, 1e-15);
  EXPECT_NEAR(r.mean_control_wt, (2.0 * 2 + 6.0 + 4.0) / 4.0, 1e-15);
  // Variances: treated 2, control 4; pooled sd sqrt(3).
  EXPECT_NEAR(r.smd_unwt, -2.0 / std::sqrt(3.0), 1e-14);
  EXPECT_NEAR(r.smd_wt, (2.5 - 3.5) / std::sqrt(3.0), 1e-14);

  ws.weights = {0.0, 0.0, 1.0, 1.0, 1.0};
  EXPECT_THROW(balance_table(h, ws), EstimationError);
}
