#pragma once

// End-to-end estimation: PS fit -> per-arm censoring fits -> weights (with
// trimming and refitting) -> curve estimate.

#include <optional>
#include <string>
#include <vector>

#include "owsurv/censoring.hpp"
#include "owsurv/core_data.hpp"
#include "owsurv/estimators.hpp"
#include "owsurv/propensity.hpp"
#include "owsurv/weights.hpp"

namespace owsurv {

enum class CensoringMethod { weibull, kaplan_meier, none };

inline std::string to_string(CensoringMethod m) {
  switch (m) {
    case CensoringMethod::weibull: return "weibull";
    case CensoringMethod::kaplan_meier: return "km";
    case CensoringMethod::none: return "none";
  }
  return "unknown";
}

struct PipelineOptions {
  CensoringMethod censoring = CensoringMethod::weibull;
  double censoring_floor = kDefaultCensoringFloor;
};

// Models fitted once on the full sample and shared by untrimmed schemes.
struct NuisanceFits {
  std::optional<PropensityFit> ps;  // absent for uniform-only use
  std::optional<CensoringModel> censor_1, censor_0;  // Weibull fits when requested
};

inline NuisanceFits fit_nuisance(const SurvivalDataset& data, const PipelineOptions& opt = {}, bool with_ps = true) {
  NuisanceFits fits;
  if (with_ps) fits.ps = fit_logistic(data);
  if (opt.censoring == CensoringMethod::weibull) {
    fits.censor_1 = fit_weibull_censoring(data, kTreated);
    fits.censor_0 = fit_weibull_censoring(data, kControl);
  }
  return fits;
}

// Everything needed to estimate (and compute a sandwich variance) for one
// weighting scheme: the analysis rows after trimming, their weights, and the
// PS / censoring models fitted on those rows.
struct SchemeAnalysis {
  WeightScheme scheme;
  WeightSet full_weights;           // indexed by rows of the input dataset
  std::vector<std::size_t> rows;    // analysis rows (all rows unless trimmed)
  SurvivalDataset data;             // input restricted to `rows`
  WeightSet weights;                // indexed by rows of `data`
  std::optional<PropensityFit> ps;  // model behind the weights, fitted on `data` when refit
  CensoringModel censor_1, censor_0;
  CensoringMethod censoring = CensoringMethod::weibull;
};

namespace detail {

inline WeightSet restrict_weights(const WeightSet& ws, const std::vector<std::size_t>& rows) {
  WeightSet out;
  out.scheme = ws.scheme;
  out.refit = ws.refit;
  out.weights.reserve(rows.size());
  for (auto r : rows) {
    out.weights.push_back(ws.weights[r]);
    out.included.push_back(1);
    out.ps_used.push_back(ws.ps_used[r]);
  }
  out.effective_n_treated = ws.effective_n_treated;
  out.effective_n_control = ws.effective_n_control;
  return out;
}

}  // namespace detail

inline SchemeAnalysis analyze_scheme(const SurvivalDataset& data, const WeightScheme& scheme, const NuisanceFits& base,
                                     const PipelineOptions& opt = {}) {
  WeightSet full;
  if (scheme.kind == WeightKind::uniform) {
    full = uniform_weights(data);
  } else {
    if (!base.ps) throw UsageError("analyze_scheme: scheme " + scheme.label() + " needs a propensity fit");
    full = compute_weights(scheme, data, *base.ps);
  }
  std::vector<std::size_t> rows = full.retained_rows();
  const bool trimmed = rows.size() != data.n();
  SurvivalDataset sub = trimmed ? data.subset(rows) : data;
  WeightSet ws = trimmed ? detail::restrict_weights(full, rows) : full;

  std::optional<PropensityFit> ps;
  if (full.refit) ps = full.refit;
  else if (!trimmed || !scheme.trims()) ps = base.ps;

  const bool refit_models = trimmed && scheme.refit_after_trim;
  CensoringModel c1 = NoCensoringModel{}, c0 = NoCensoringModel{};
  switch (opt.censoring) {
    case CensoringMethod::weibull:
      if (refit_models || !base.censor_1 || !base.censor_0) {
        c1 = fit_weibull_censoring(sub, kTreated);
        c0 = fit_weibull_censoring(sub, kControl);
      } else {
        c1 = *base.censor_1;
        c0 = *base.censor_0;
      }
      break;
    case CensoringMethod::kaplan_meier:
      c1 = fit_km_censoring(sub, kTreated, ws.weights);
      c0 = fit_km_censoring(sub, kControl, ws.weights);
      break;
    case CensoringMethod::none:
      break;
  }
  return SchemeAnalysis{scheme, std::move(full), std::move(rows), std::move(sub), std::move(ws),
                        std::move(ps), std::move(c1), std::move(c0), opt.censoring};
}

inline CurveEstimate estimate_curve(const SchemeAnalysis& an, EstimatorKind kind, const TimeGrid& grid,
                                    double floor = kDefaultCensoringFloor) {
  return estimate_curve(kind, an.data, an.weights, an.censor_1, an.censor_0, grid, floor);
}

// One analysis in a batch: weighting scheme plus estimator.
struct AnalysisSpec {
  WeightScheme scheme;
  EstimatorKind estimator = EstimatorKind::I;

  std::string label() const { return scheme.label() + "/" + to_string(estimator); }
  bool operator==(const AnalysisSpec&) const = default;
};

struct PipelineResult {
  NuisanceFits base;
  SchemeAnalysis analysis;
  CurveEstimate estimate;
};

inline PipelineResult run_pipeline(const SurvivalDataset& data, const WeightScheme& scheme, EstimatorKind kind,
                                   const TimeGrid& grid, const PipelineOptions& opt = {}) {
  NuisanceFits base = fit_nuisance(data, opt, scheme.kind != WeightKind::uniform);
  SchemeAnalysis an = analyze_scheme(data, scheme, base, opt);
  CurveEstimate est = estimate_curve(an, kind, grid, opt.censoring_floor);
  return PipelineResult{std::move(base), std::move(an), std::move(est)};
}

}  // namespace owsurv
