#pragma once

// Weighted IPCW estimators of the counterfactual survival curves S^(1), S^(0)
// and their difference, plus the weighted Kaplan-Meier reference estimator
// and the running-minimum monotonicity correction.
//
//   I : S(t) = 1 - sum w A d 1{U <= t} / K(U, X) / sum w A
//   II: S(t) =     sum w A 1{U > t} / K(t, X)   / sum w A

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "owsurv/censoring.hpp"
#include "owsurv/core_data.hpp"
#include "owsurv/weights.hpp"

namespace owsurv {

enum class EstimatorKind { I, II };

inline std::string to_string(EstimatorKind k) { return k == EstimatorKind::I ? "I" : "II"; }

struct PointwiseVariance {
  std::vector<double> s1, s0, delta;
  std::vector<double> cov_s1_s0;
  std::string method;  // "sandwich" or "bootstrap"
};

inline constexpr double kWaldZ = 1.96;

struct CurveEstimate {
  TimeGrid grid;
  std::vector<double> s1, s0, delta;
  EstimatorKind estimator_kind = EstimatorKind::I;
  WeightScheme scheme;
  std::optional<PointwiseVariance> variance;
  std::vector<double> ci_low, ci_high;  // empty without variance
  bool monotonized = false;
  std::size_t floor_count = 0;
  std::vector<std::string> warnings;

  void attach_variance(PointwiseVariance v) {
    ci_low.resize(delta.size());
    ci_high.resize(delta.size());
    for (std::size_t k = 0; k < delta.size(); ++k) {
      const double se = std::sqrt(std::max(0.0, v.delta[k]));
      ci_low[k] = delta[k] - kWaldZ * se;
      ci_high[k] = delta[k] + kWaldZ * se;
    }
    variance = std::move(v);
  }
};

namespace detail {

inline double arm_weight_total(const SurvivalDataset& data, const WeightSet& ws, int arm) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i)
    if (data.treatment()[i] == arm) total += ws.weights[i];
  if (!(total > 0.0)) throw EstimationError("zero total weight in arm " + std::to_string(arm));
  return total;
}

inline void check_inputs(const SurvivalDataset& data, const WeightSet& ws) {
  if (ws.weights.size() != data.n()) throw UsageError("weight set does not match dataset");
}

inline std::vector<std::size_t> sorted_by_time(const SurvivalDataset& data, int arm) {
  auto rows = data.arm_rows(arm);
  std::stable_sort(rows.begin(), rows.end(), [&](auto l, auto r) { return data.time()[l] < data.time()[r]; });
  return rows;
}

inline std::vector<double> estimator_I_arm(const SurvivalDataset& data, const WeightSet& ws, CensoringScore& score,
                                           int arm, const TimeGrid& grid) {
  const double total = arm_weight_total(data, ws, arm);
  const auto order = sorted_by_time(data, arm);
  std::vector<double> out(grid.size());
  std::size_t pos = 0;
  double mass = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid[k];
    while (pos < order.size() && data.time()[order[pos]] <= t) {
      const auto i = order[pos++];
      if (data.event()[i] != 1 || ws.weights[i] == 0.0) continue;
      const double kv = score(data.time()[i], data.covariates().row(static_cast<Eigen::Index>(i)));
      mass += ws.weights[i] / kv;
    }
    out[k] = 1.0 - mass / total;
  }
  return out;
}

inline std::vector<double> estimator_II_arm(const SurvivalDataset& data, const WeightSet& ws, CensoringScore& score,
                                            int arm, const TimeGrid& grid) {
  const double total = arm_weight_total(data, ws, arm);
  const auto rows = data.arm_rows(arm);
  std::vector<double> out(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid[k];
    double sum = 0.0;
    for (auto i : rows) {
      if (!(data.time()[i] > t) || ws.weights[i] == 0.0) continue;
      sum += ws.weights[i] / score(t, data.covariates().row(static_cast<Eigen::Index>(i)));
    }
    out[k] = sum / total;
  }
  return out;
}

inline CurveEstimate assemble(const TimeGrid& grid, std::vector<double> s1, std::vector<double> s0,
                              EstimatorKind kind, const WeightSet& ws, std::size_t floors) {
  CurveEstimate est;
  est.grid = grid;
  est.delta.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) est.delta[k] = s1[k] - s0[k];
  est.s1 = std::move(s1);
  est.s0 = std::move(s0);
  est.estimator_kind = kind;
  est.scheme = ws.scheme;
  est.floor_count = floors;
  if (floors > 0)
    est.warnings.push_back("censoring score floored " + std::to_string(floors) +
                           " times; positivity of censoring may be violated");
  return est;
}

}  // namespace detail

inline CurveEstimate estimator_I(const SurvivalDataset& data, const WeightSet& ws, const CensoringModel& censor_1,
                                 const CensoringModel& censor_0, const TimeGrid& grid,
                                 double floor = kDefaultCensoringFloor) {
  detail::check_inputs(data, ws);
  CensoringScore k1(censor_1, floor), k0(censor_0, floor);
  auto s1 = detail::estimator_I_arm(data, ws, k1, kTreated, grid);
  auto s0 = detail::estimator_I_arm(data, ws, k0, kControl, grid);
  return detail::assemble(grid, std::move(s1), std::move(s0), EstimatorKind::I, ws,
                          k1.floor_count() + k0.floor_count());
}

inline CurveEstimate estimator_II(const SurvivalDataset& data, const WeightSet& ws, const CensoringModel& censor_1,
                                  const CensoringModel& censor_0, const TimeGrid& grid,
                                  double floor = kDefaultCensoringFloor) {
  detail::check_inputs(data, ws);
  CensoringScore k1(censor_1, floor), k0(censor_0, floor);
  auto s1 = detail::estimator_II_arm(data, ws, k1, kTreated, grid);
  auto s0 = detail::estimator_II_arm(data, ws, k0, kControl, grid);
  return detail::assemble(grid, std::move(s1), std::move(s0), EstimatorKind::II, ws,
                          k1.floor_count() + k0.floor_count());
}

inline CurveEstimate estimate_curve(EstimatorKind kind, const SurvivalDataset& data, const WeightSet& ws,
                                    const CensoringModel& censor_1, const CensoringModel& censor_0,
                                    const TimeGrid& grid, double floor = kDefaultCensoringFloor) {
  return kind == EstimatorKind::I ? estimator_I(data, ws, censor_1, censor_0, grid, floor)
                                  : estimator_II(data, ws, censor_1, censor_0, grid, floor);
}

// Product-limit estimator with weighted risk sets and weighted event counts.
inline CurveEstimate weighted_km(const SurvivalDataset& data, const WeightSet& ws, const TimeGrid& grid) {
  detail::check_inputs(data, ws);
  auto arm_curve = [&](int arm) {
    detail::arm_weight_total(data, ws, arm);
    const auto order = detail::sorted_by_time(data, arm);
    std::vector<double> suffix(order.size() + 1, 0.0);
    for (std::size_t k = order.size(); k-- > 0;) suffix[k] = suffix[k + 1] + ws.weights[order[k]];
    std::vector<double> out(grid.size());
    std::size_t pos = 0;
    double surv = 1.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      while (pos < order.size() && data.time()[order[pos]] <= grid[g]) {
        const double t = data.time()[order[pos]];
        const double risk = suffix[pos];
        double deaths = 0.0;
        while (pos < order.size() && data.time()[order[pos]] == t) {
          const auto i = order[pos++];
          if (data.event()[i] == 1) deaths += ws.weights[i];
        }
        if (deaths > 0.0 && risk > 0.0) surv *= 1.0 - deaths / risk;
      }
      out[g] = surv;
    }
    return out;
  };
  auto s1 = arm_curve(kTreated);
  auto s0 = arm_curve(kControl);
  auto est = detail::assemble(grid, std::move(s1), std::move(s0), EstimatorKind::I, ws, 0);
  return est;
}

// Running minimum of each arm's curve along the grid. Variances are dropped.
inline CurveEstimate monotonize(CurveEstimate est) {
  for (auto* s : {&est.s1, &est.s0})
    for (std::size_t k = 1; k < s->size(); ++k) (*s)[k] = std::min((*s)[k], (*s)[k - 1]);
  for (std::size_t k = 0; k < est.delta.size(); ++k) est.delta[k] = est.s1[k] - est.s0[k];
  est.variance.reset();
  est.ci_low.clear();
  est.ci_high.clear();
  est.monotonized = true;
  return est;
}

}  // namespace owsurv
