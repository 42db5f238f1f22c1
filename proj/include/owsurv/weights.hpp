#pragma once

// Balancing weights (IPTW, overlap, matching, symmetric/asymmetric trimming)
// and covariate-balance diagnostics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "owsurv/core_data.hpp"
#include "owsurv/propensity.hpp"

namespace owsurv {

enum class WeightKind { uniform, iptw, overlap, symmetric_trim, asymmetric_trim, matching };

struct WeightScheme {
  WeightKind kind = WeightKind::overlap;
  double parameter = 0.0;  // alpha for symmetric, q for asymmetric trimming
  bool refit_after_trim = true;

  static WeightScheme uniform() { return {WeightKind::uniform, 0.0, true}; }
  static WeightScheme iptw() { return {WeightKind::iptw, 0.0, true}; }
  static WeightScheme overlap() { return {WeightKind::overlap, 0.0, true}; }
  static WeightScheme matching() { return {WeightKind::matching, 0.0, true}; }
  static WeightScheme symmetric_trim(double alpha, bool refit = true) {
    WeightScheme s{WeightKind::symmetric_trim, alpha, refit};
    s.validate();
    return s;
  }
  static WeightScheme asymmetric_trim(double q, bool refit = true) {
    WeightScheme s{WeightKind::asymmetric_trim, q, refit};
    s.validate();
    return s;
  }

  bool trims() const { return kind == WeightKind::symmetric_trim || kind == WeightKind::asymmetric_trim; }

  // Weighting rule applied to the analysis rows after any trimming.
  WeightKind target_kind() const { return trims() ? WeightKind::iptw : kind; }

  void validate() const {
    if (trims() && !(parameter >= 0.0 && parameter < 0.5))
      throw UsageError("trimming parameter must lie in [0, 0.5)");
  }

  std::string name() const {
    switch (kind) {
      case WeightKind::uniform: return "uniform";
      case WeightKind::iptw: return "iptw";
      case WeightKind::overlap: return "ow";
      case WeightKind::symmetric_trim: return "symtrim";
      case WeightKind::asymmetric_trim: return "asymtrim";
      case WeightKind::matching: return "matching";
    }
    return "unknown";
  }

  std::string label() const {
    if (!trims()) return name();
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s(%g)", name().c_str(), parameter);
    return buf;
  }

  bool operator==(const WeightScheme&) const = default;
};

struct WeightSet {
  std::vector<double> weights;       // 0 for excluded subjects
  std::vector<std::uint8_t> included;
  WeightScheme scheme;
  std::vector<double> ps_used;       // post-refit PS on retained rows
  double effective_n_treated = 0.0;  // sum of weights per arm
  double effective_n_control = 0.0;
  std::optional<PropensityFit> refit;  // set when the PS was refitted after trimming

  std::vector<std::size_t> retained_rows() const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < included.size(); ++i)
      if (included[i]) rows.push_back(i);
    return rows;
  }
  std::size_t n_retained() const {
    return static_cast<std::size_t>(std::count(included.begin(), included.end(), std::uint8_t{1}));
  }
};

inline constexpr double kPositivityBound = 1e-12;

// Lower-convention inverse empirical CDF: smallest v with F(v) >= q.
inline double nearest_rank_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw UsageError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double m = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * m - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

inline double weight_for(WeightKind kind, int arm, double ps) {
  switch (kind) {
    case WeightKind::uniform: return 1.0;
    case WeightKind::iptw: return arm == kTreated ? 1.0 / ps : 1.0 / (1.0 - ps);
    case WeightKind::overlap: return arm == kTreated ? 1.0 - ps : ps;
    case WeightKind::matching: return std::min(ps, 1.0 - ps) / (arm == kTreated ? ps : 1.0 - ps);
    default: throw UsageError("weight_for: trimming schemes have no closed-form weight");
  }
}

namespace detail {

inline void check_positivity(const std::vector<double>& ps, const std::vector<std::uint8_t>& included) {
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (included[i] && (ps[i] < kPositivityBound || ps[i] > 1.0 - kPositivityBound)) bad.push_back(i + 1);
  if (bad.empty()) return;
  std::string rows;
  for (std::size_t k = 0; k < bad.size() && k < 20; ++k) rows += (k ? ", " : "") + std::to_string(bad[k]);
  if (bad.size() > 20) rows += ", ...";
  throw PositivityError("propensity scores too close to 0 or 1 for IPTW at rows " + rows, bad);
}

// Retention mask of the asymmetric rule, computed from one PS vector.
inline std::vector<std::uint8_t> asymmetric_mask(const std::vector<double>& ps, const std::vector<int>& arm, double q) {
  double min_t = 1.0, max_t = 0.0, min_c = 1.0, max_c = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (arm[i] == kTreated) {
      min_t = std::min(min_t, ps[i]);
      max_t = std::max(max_t, ps[i]);
    } else {
      min_c = std::min(min_c, ps[i]);
      max_c = std::max(max_c, ps[i]);
    }
  }
  const double lo = std::max(min_t, min_c), hi = std::min(max_t, max_c);
  std::vector<std::uint8_t> keep(ps.size(), 0);
  std::vector<double> ps_t, ps_c;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    keep[i] = ps[i] >= lo && ps[i] <= hi;
    if (!keep[i]) continue;
    (arm[i] == kTreated ? ps_t : ps_c).push_back(ps[i]);
  }
  if (ps_t.empty() || ps_c.empty()) return keep;
  const double lower = nearest_rank_quantile(ps_t, q);
  const double upper = nearest_rank_quantile(ps_c, 1.0 - q);
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (keep[i] && (ps[i] < lower || ps[i] > upper)) keep[i] = 0;
  return keep;
}

inline std::vector<std::uint8_t> symmetric_mask(const std::vector<double>& ps, double alpha) {
  std::vector<std::uint8_t> keep(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) keep[i] = ps[i] > alpha && ps[i] < 1.0 - alpha;
  return keep;
}

}  // namespace detail

// Weights for `scheme` from a PS model fitted on `data`. Trimming schemes
// exclude rows and, when refit_after_trim is set, refit the PS on the kept
// rows before assigning IPTW weights.
inline WeightSet compute_weights(const WeightScheme& scheme, const SurvivalDataset& data, const PropensityFit& ps_fit) {
  scheme.validate();
  const std::size_t n = data.n();
  if (ps_fit.fitted_ps.size() != n) throw UsageError("compute_weights: propensity fit does not match dataset");
  WeightSet ws;
  ws.scheme = scheme;
  ws.ps_used = ps_fit.fitted_ps;
  ws.included.assign(n, 1);
  ws.weights.assign(n, 0.0);

  if (scheme.trims()) {
    ws.included = scheme.kind == WeightKind::symmetric_trim
                      ? detail::symmetric_mask(ps_fit.fitted_ps, scheme.parameter)
                      : detail::asymmetric_mask(ps_fit.fitted_ps, data.treatment(), scheme.parameter);
    std::size_t kept_t = 0, kept_c = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (ws.included[i]) (data.treatment()[i] == kTreated ? kept_t : kept_c)++;
    if (kept_t == 0 || kept_c == 0)
      throw EstimationError("trimming " + scheme.label() + " removed an entire treatment arm");
    if (scheme.refit_after_trim) {
      const auto rows = ws.retained_rows();
      const SurvivalDataset sub = data.subset(rows);
      PropensityFit refit = fit_logistic(sub);
      for (std::size_t k = 0; k < rows.size(); ++k) ws.ps_used[rows[k]] = refit.fitted_ps[k];
      ws.refit = std::move(refit);
    }
  }

  const WeightKind target = scheme.target_kind();
  if (target == WeightKind::iptw) detail::check_positivity(ws.ps_used, ws.included);
  for (std::size_t i = 0; i < n; ++i) {
    if (!ws.included[i]) continue;
    const int a = data.treatment()[i];
    ws.weights[i] = weight_for(target, a, ws.ps_used[i]);
    (a == kTreated ? ws.effective_n_treated : ws.effective_n_control) += ws.weights[i];
  }
  return ws;
}

// Uniform weights over all rows, no PS model.
inline WeightSet uniform_weights(const SurvivalDataset& data) {
  WeightSet ws;
  ws.scheme = WeightScheme::uniform();
  ws.weights.assign(data.n(), 1.0);
  ws.included.assign(data.n(), 1);
  ws.ps_used.assign(data.n(), 0.5);
  ws.effective_n_treated = static_cast<double>(data.arm_size(kTreated));
  ws.effective_n_control = static_cast<double>(data.arm_size(kControl));
  return ws;
}

struct BalanceRow {
  std::string covariate;
  double mean_treated_unwt = 0.0;
  double mean_control_unwt = 0.0;
  double smd_unwt = 0.0;
  double mean_treated_wt = 0.0;
  double mean_control_wt = 0.0;
  double smd_wt = 0.0;
};

struct BalanceTable {
  std::vector<BalanceRow> rows;
};

// Standardized differences use the unweighted per-arm variances of the full
// sample in the denominator for both columns. Zero pooled variance yields NaN.
inline BalanceTable balance_table(const SurvivalDataset& data, const WeightSet& ws) {
  if (ws.weights.size() != data.n()) throw UsageError("balance_table: weight set does not match dataset");
  double sum_w[2] = {0.0, 0.0};
  double count[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < data.n(); ++i) {
    sum_w[data.treatment()[i]] += ws.weights[i];
    count[data.treatment()[i]] += 1.0;
  }
  if (!(sum_w[0] > 0.0) || !(sum_w[1] > 0.0)) throw EstimationError("zero total weight in an arm");

  BalanceTable table;
  for (std::size_t j = 0; j < data.p(); ++j) {
    double mean[2] = {0.0, 0.0}, wmean[2] = {0.0, 0.0}, ss[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < data.n(); ++i) {
      const int a = data.treatment()[i];
      const double x = data.covariates()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      mean[a] += x;
      wmean[a] += ws.weights[i] * x;
    }
    for (int a = 0; a < 2; ++a) {
      mean[a] /= count[a];
      wmean[a] /= sum_w[a];
    }
    for (std::size_t i = 0; i < data.n(); ++i) {
      const int a = data.treatment()[i];
      const double x = data.covariates()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      ss[a] += (x - mean[a]) * (x - mean[a]);
    }
    const double var1 = count[1] > 1 ? ss[1] / (count[1] - 1.0) : 0.0;
    const double var0 = count[0] > 1 ? ss[0] / (count[0] - 1.0) : 0.0;
    const double pooled = std::sqrt(0.5 * (var1 + var0));
    const double nan = std::numeric_limits<double>::quiet_NaN();
    BalanceRow row;
    row.covariate = data.covariate_names()[j];
    row.mean_treated_unwt = mean[1];
    row.mean_control_unwt = mean[0];
    row.mean_treated_wt = wmean[1];
    row.mean_control_wt = wmean[0];
    row.smd_unwt = pooled > 0.0 ? (mean[1] - mean[0]) / pooled : nan;
    row.smd_wt = pooled > 0.0 ? (wmean[1] - wmean[0]) / pooled : nan;
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace owsurv
