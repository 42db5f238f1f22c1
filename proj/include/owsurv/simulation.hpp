#pragma once

// Simulation study: data-generating process, population truths, at-risk time
// points and the Monte Carlo driver.
//
// X1..X3 ~ N(0, R) with unit variances and pairwise correlation 0.5, X4..X6 ~ Bernoulli(0.5).
// logit e(X) = b0 + psi (0.2, 0.3, 0.3, -0.2, -0.3, -0.2) . X, b0 calibrated to half treated.
// P(T(a) > t | X) = exp(-t^g exp(m_a(X))),
//   m_a = (-1, 0.4, 0.2, 0.1, -0.1, -0.2, -0.3) - eta_a applied to (1, X),
//   eta = 0.4 in the treated arm so that treatment lowers the hazard.
// C ~ Exp(rate exp(lambda - 0.3 X1 + 0.5 X2 + 0.5 X3 + 0.2 X4 - 0.4 X5 - 0.5 X6)).

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "owsurv/core_data.hpp"
#include "owsurv/error.hpp"
#include "owsurv/estimators.hpp"
#include "owsurv/parallel.hpp"
#include "owsurv/pipeline.hpp"
#include "owsurv/random.hpp"
#include "owsurv/variance.hpp"
#include "owsurv/weights.hpp"

namespace owsurv {

inline constexpr std::size_t kCovariates = 6;
inline constexpr std::array<double, kCovariates> kPsSlopes = {0.2, 0.3, 0.3, -0.2, -0.3, -0.2};
inline constexpr std::array<double, kCovariates + 1> kOutcomeBase = {-1.0, 0.4, 0.2, 0.1, -0.1, -0.2, -0.3};
inline constexpr std::array<double, kCovariates> kCensorSlopes = {-0.3, 0.5, 0.5, 0.2, -0.4, -0.5};
inline constexpr std::size_t kCalibrationDraws = 1'000'000;
inline constexpr std::size_t kMinPopulation = 10'000;
inline constexpr std::size_t kPopulationChunk = 10'000;
inline constexpr double kMaxReplicateFailureRate = 0.05;

// Censoring intercepts for the two censoring settings.
inline double lambda_for_censor_rate(double rate) {
  if (std::abs(rate - 0.25) < 1e-9) return -3.0;
  if (std::abs(rate - 0.5) < 1e-9) return -1.6;
  throw UsageError("censoring rate must be 0.25 or 0.5 (use --lambda for other settings)");
}

inline std::vector<AnalysisSpec> default_analyses() {
  std::vector<AnalysisSpec> out;
  std::vector<WeightScheme> schemes = {WeightScheme::overlap(), WeightScheme::iptw()};
  for (double a : {0.05, 0.10, 0.15}) schemes.push_back(WeightScheme::symmetric_trim(a));
  for (double q : {0.0, 0.01, 0.05}) schemes.push_back(WeightScheme::asymmetric_trim(q));
  for (const auto& s : schemes)
    for (auto k : {EstimatorKind::I, EstimatorKind::II}) out.push_back({s, k});
  return out;
}

struct ScenarioConfig {
  double psi = 1.0;
  double lambda_c = -3.0;
  std::size_t n = 2000;
  std::size_t replicates = 2000;
  std::uint64_t seed = 1;
  double gamma_outcome = 0.95;
  double eta_treated = 0.4;
  double eta_control = 0.0;
  std::vector<AnalysisSpec> analyses = default_analyses();
  std::optional<std::vector<double>> time_points;  // empty: found from the population
  std::size_t pop_size = 500'000;

  void validate() const {
    if (!(psi > 0.0) || !std::isfinite(psi)) throw UsageError("psi must be positive");
    if (!std::isfinite(lambda_c)) throw UsageError("censoring intercept must be finite");
    if (n < 50) throw UsageError("sample size must be at least 50");
    if (replicates < 1) throw UsageError("replicates must be at least 1");
    if (!(gamma_outcome > 0.0)) throw UsageError("outcome shape must be positive");
    if (pop_size < kMinPopulation) throw UsageError("population size must be at least 10000");
    for (const auto& a : analyses) a.scheme.validate();
    if (time_points) {
      if (time_points->empty()) throw UsageError("time points list is empty");
      for (double t : *time_points)
        if (!(t > 0.0)) throw UsageError("time points must be positive");
      TimeGrid check(*time_points);
    }
  }
};

// Lower-triangular factor of the 3x3 equicorrelation (0.5) matrix.
inline void correlated_normals(RandomStream& rng, double* x) {
  const double z1 = rng.normal(), z2 = rng.normal(), z3 = rng.normal();
  x[0] = z1;
  x[1] = 0.5 * z1 + std::sqrt(0.75) * z2;
  x[2] = 0.5 * z1 + z2 / (2.0 * std::sqrt(3.0)) + std::sqrt(2.0 / 3.0) * z3;
}

inline void draw_covariates(RandomStream& rng, double* x) {
  correlated_normals(rng, x);
  for (std::size_t j = 3; j < kCovariates; ++j) x[j] = rng.bernoulli(0.5) ? 1.0 : 0.0;
}

inline double ps_slope_term(double psi, const double* x) {
  double s = 0.0;
  for (std::size_t j = 0; j < kCovariates; ++j) s += psi * kPsSlopes[j] * x[j];
  return s;
}

inline double outcome_lp(const ScenarioConfig& c, int arm, const double* x) {
  const double eta = arm == kTreated ? c.eta_treated : c.eta_control;
  double m = kOutcomeBase[0] - eta;
  for (std::size_t j = 0; j < kCovariates; ++j) m += (kOutcomeBase[j + 1] - eta) * x[j];
  return m;
}

inline double censor_lp(const ScenarioConfig& c, const double* x) {
  double l = c.lambda_c;
  for (std::size_t j = 0; j < kCovariates; ++j) l += kCensorSlopes[j] * x[j];
  return l;
}

inline double true_survival(const ScenarioConfig& c, int arm, double t, const double* x) {
  if (t <= 0.0) return 1.0;
  return std::exp(-std::pow(t, c.gamma_outcome) * std::exp(outcome_lp(c, arm, x)));
}

// Intercept giving a mean true PS of 0.5 over a frozen sample of 10^6
// covariate draws; bisection on [-10, 10].
inline double calibrate_intercept(double psi, std::uint64_t seed) {
  if (!(psi > 0.0)) throw UsageError("psi must be positive");
  RandomStream rng(seed, 0, StreamDomain::calibration);
  std::vector<double> slope_term(kCalibrationDraws);
  double x[kCovariates];
  for (auto& s : slope_term) {
    draw_covariates(rng, x);
    s = ps_slope_term(psi, x);
  }
  auto mean_ps = [&](double b0) {
    double sum = 0.0;
    for (double s : slope_term) sum += logistic(b0 + s);
    return sum / static_cast<double>(slope_term.size());
  };
  double lo = -10.0, hi = 10.0;
  for (int it = 0; it < 60 && hi - lo > 1e-10; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_ps(mid) < 0.5 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// One subject's draws, in a fixed order: covariates, treatment, outcome and censoring uniforms.
struct SimulatedSubject {
  double x[kCovariates];
  double ps;
  int arm;
  double t, c;
};

inline SimulatedSubject draw_subject(const ScenarioConfig& cfg, double beta0, RandomStream& rng) {
  SimulatedSubject s;
  draw_covariates(rng, s.x);
  s.ps = logistic(beta0 + ps_slope_term(cfg.psi, s.x));
  s.arm = rng.uniform() < s.ps ? kTreated : kControl;
  const double v = rng.uniform(), vc = rng.uniform();
  s.t = std::pow(-std::log(v) / std::exp(outcome_lp(cfg, s.arm, s.x)), 1.0 / cfg.gamma_outcome);
  s.c = -std::log(vc) / std::exp(censor_lp(cfg, s.x));
  return s;
}

inline SurvivalDataset generate_dataset(const ScenarioConfig& cfg, double beta0, std::uint64_t replicate) {
  RandomStream rng(cfg.seed, replicate, StreamDomain::replicate);
  const auto n = static_cast<Eigen::Index>(cfg.n);
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(kCovariates));
  std::vector<int> a(cfg.n), d(cfg.n);
  std::vector<double> u(cfg.n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto s = draw_subject(cfg, beta0, rng);
    for (std::size_t j = 0; j < kCovariates; ++j) x(i, static_cast<Eigen::Index>(j)) = s.x[j];
    const auto si = static_cast<std::size_t>(i);
    a[si] = s.arm;
    u[si] = std::min(s.t, s.c);
    d[si] = s.t <= s.c ? 1 : 0;
  }
  return SurvivalDataset(std::move(x), std::move(a), std::move(u), std::move(d));
}

inline SurvivalDataset generate_dataset(const ScenarioConfig& cfg, std::uint64_t replicate) {
  return generate_dataset(cfg, calibrate_intercept(cfg.psi, cfg.seed), replicate);
}

// Large sample drawn in fixed chunks with their own streams.
struct Population {
  std::vector<SimulatedSubject> subjects;
  double beta0 = 0.0;
};

inline Population draw_population(const ScenarioConfig& cfg, double beta0, std::size_t size, std::uint64_t seed,
                                  unsigned threads = 0) {
  if (size < kMinPopulation) throw UsageError("population size must be at least 10000");
  Population pop;
  pop.beta0 = beta0;
  pop.subjects.resize(size);
  const std::size_t chunks = (size + kPopulationChunk - 1) / kPopulationChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    RandomStream rng(seed, c, StreamDomain::truth);
    const std::size_t end = std::min(size, (c + 1) * kPopulationChunk);
    for (std::size_t i = c * kPopulationChunk; i < end; ++i) pop.subjects[i] = draw_subject(cfg, beta0, rng);
  });
  return pop;
}

// Times at which 80/60/40/20 percent of the population remain at risk.
inline std::vector<double> at_risk_time_points(std::span<const double> observed) {
  if (observed.empty()) throw UsageError("no observed times");
  std::vector<double> out;
  for (double q : {0.2, 0.4, 0.6, 0.8}) out.push_back(nearest_rank_quantile({observed.begin(), observed.end()}, q));
  return out;
}

inline std::vector<double> find_time_points(const Population& pop) {
  std::vector<double> u;
  u.reserve(pop.subjects.size());
  for (const auto& s : pop.subjects) u.push_back(std::min(s.t, s.c));
  std::sort(u.begin(), u.end());
  return at_risk_time_points(u);
}

inline std::vector<double> find_time_points(const ScenarioConfig& cfg, std::size_t pop_size, std::uint64_t seed,
                                            unsigned threads = 0) {
  cfg.validate();
  return find_time_points(draw_population(cfg, calibrate_intercept(cfg.psi, seed), pop_size, seed, threads));
}

struct TruthEntry {
  WeightScheme scheme;
  std::vector<double> s1, s0, delta, mc_se;
  double population_fraction = 1.0;  // share of the population with nonzero weight
};

struct TruthTable {
  double psi = 0.0, lambda_c = 0.0, beta0 = 0.0;
  std::size_t pop_size = 0;
  std::uint64_t seed = 0;
  std::vector<double> times;
  std::vector<TruthEntry> entries;

  const TruthEntry& at(const WeightScheme& s) const {
    const auto key = population_key(s);
    for (const auto& e : entries)
      if (population_key(e.scheme) == key) return e;
    throw UsageError("no truth for scheme " + s.label());
  }

  // Schemes sharing a target population share a truth; refitting does not change it.
  static WeightScheme population_key(WeightScheme s) {
    if (s.kind == WeightKind::uniform) s = WeightScheme::iptw();
    s.refit_after_trim = true;
    return s;
  }
};

// Population weight of each subject under the true PS.
inline std::vector<double> population_weights(const Population& pop, const WeightScheme& scheme) {
  const std::size_t m = pop.subjects.size();
  std::vector<double> w(m, 1.0);
  std::vector<double> ps(m);
  for (std::size_t i = 0; i < m; ++i) ps[i] = pop.subjects[i].ps;
  switch (scheme.kind) {
    case WeightKind::uniform:
    case WeightKind::iptw: break;
    case WeightKind::overlap:
      for (std::size_t i = 0; i < m; ++i) w[i] = ps[i] * (1.0 - ps[i]);
      break;
    case WeightKind::matching:
      for (std::size_t i = 0; i < m; ++i) w[i] = std::min(ps[i], 1.0 - ps[i]);
      break;
    case WeightKind::symmetric_trim: {
      const auto keep = detail::symmetric_mask(ps, scheme.parameter);
      for (std::size_t i = 0; i < m; ++i) w[i] = keep[i];
      break;
    }
    case WeightKind::asymmetric_trim: {
      std::vector<int> arm(m);
      for (std::size_t i = 0; i < m; ++i) arm[i] = pop.subjects[i].arm;
      const auto keep = detail::asymmetric_mask(ps, arm, scheme.parameter);
      for (std::size_t i = 0; i < m; ++i) w[i] = keep[i];
      break;
    }
  }
  return w;
}

inline TruthEntry population_truth(const ScenarioConfig& cfg, const Population& pop, const WeightScheme& scheme,
                                   const std::vector<double>& times) {
  const auto w = population_weights(pop, scheme);
  const std::size_t m = pop.subjects.size(), K = times.size();
  TruthEntry e;
  e.scheme = TruthTable::population_key(scheme);
  e.s1.assign(K, 0.0);
  e.s0.assign(K, 0.0);
  e.delta.assign(K, 0.0);
  e.mc_se.assign(K, 0.0);
  double total = 0.0, total_sq = 0.0;
  std::size_t positive = 0;
  std::vector<double> d_sum(K, 0.0), d_sq(K, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (w[i] == 0.0) continue;
    ++positive;
    total += w[i];
    total_sq += w[i] * w[i];
    for (std::size_t k = 0; k < K; ++k) {
      const double a = true_survival(cfg, kTreated, times[k], pop.subjects[i].x);
      const double b = true_survival(cfg, kControl, times[k], pop.subjects[i].x);
      e.s1[k] += w[i] * a;
      e.s0[k] += w[i] * b;
      d_sum[k] += w[i] * (a - b);
      d_sq[k] += w[i] * (a - b) * (a - b);
    }
  }
  if (!(total > 0.0)) throw EstimationError("scheme " + scheme.label() + " retains no population mass");
  for (std::size_t k = 0; k < K; ++k) {
    e.s1[k] /= total;
    e.s0[k] /= total;
    e.delta[k] = e.s1[k] - e.s0[k];
    // Ratio-estimator standard error of the weighted mean of S1 - S0.
    const double var_d = std::max(0.0, d_sq[k] / total - e.delta[k] * e.delta[k]);
    e.mc_se[k] = std::sqrt(var_d * total_sq) / total;
  }
  e.population_fraction = static_cast<double>(positive) / static_cast<double>(m);
  return e;
}

inline TruthTable true_estimands(const ScenarioConfig& cfg, const Population& pop, const std::vector<double>& times,
                                 std::uint64_t seed) {
  TruthTable tt;
  tt.psi = cfg.psi;
  tt.lambda_c = cfg.lambda_c;
  tt.beta0 = pop.beta0;
  tt.pop_size = pop.subjects.size();
  tt.seed = seed;
  tt.times = times;
  std::vector<WeightScheme> keys = {WeightScheme::iptw(), WeightScheme::overlap()};
  for (const auto& a : cfg.analyses) {
    const auto k = TruthTable::population_key(a.scheme);
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  }
  for (const auto& k : keys) tt.entries.push_back(population_truth(cfg, pop, k, times));
  return tt;
}

// Truths at `times`, or at the population's at-risk time points when empty.
inline TruthTable true_estimands(const ScenarioConfig& cfg, std::size_t pop_size, std::uint64_t seed,
                                 std::optional<std::vector<double>> times = std::nullopt, unsigned threads = 0) {
  cfg.validate();
  const Population pop = draw_population(cfg, calibrate_intercept(cfg.psi, seed), pop_size, seed, threads);
  const std::vector<double> t = times ? *times : find_time_points(pop);
  return true_estimands(cfg, pop, t, seed);
}

// Per-replicate output of the Monte Carlo study.
struct ReplicateResult {
  bool data_ok = false;
  double censoring_rate = 0.0, treated_fraction = 0.0;
  std::vector<std::uint8_t> ok;             // per analysis
  std::vector<std::vector<double>> delta;   // per analysis, per time point
  std::vector<std::vector<double>> var;     // sandwich variance of delta; NaN when unavailable
};

struct MonteCarloRun {
  ScenarioConfig config;
  double beta0 = 0.0;
  std::vector<double> times;
  std::vector<ReplicateResult> replicates;
};

inline ReplicateResult run_replicate(const ScenarioConfig& cfg, double beta0, const TimeGrid& grid,
                                     std::uint64_t r) {
  ReplicateResult res;
  const std::size_t A = cfg.analyses.size(), K = grid.size() - 1;
  res.ok.assign(A, 0);
  res.delta.assign(A, std::vector<double>(K, std::numeric_limits<double>::quiet_NaN()));
  res.var = res.delta;
  std::optional<SurvivalDataset> data;
  try {
    data.emplace(generate_dataset(cfg, beta0, r));
  } catch (const Error&) {
    return res;
  }
  res.data_ok = true;
  const double n = static_cast<double>(data->n());
  res.treated_fraction = static_cast<double>(data->arm_size(kTreated)) / n;
  res.censoring_rate = 1.0 - static_cast<double>(std::count(data->event().begin(), data->event().end(), 1)) / n;

  std::optional<NuisanceFits> base;
  try {
    base.emplace(fit_nuisance(*data));
  } catch (const Error&) {
    return res;
  }
  // Schemes are analyzed once and shared by both estimators.
  std::vector<std::pair<WeightScheme, std::optional<SchemeAnalysis>>> cache;
  std::vector<std::uint8_t> cache_failed;
  for (std::size_t a = 0; a < A; ++a) {
    const auto& spec = cfg.analyses[a];
    std::size_t slot = cache.size();
    for (std::size_t c = 0; c < cache.size(); ++c)
      if (cache[c].first == spec.scheme) slot = c;
    if (slot == cache.size()) {
      cache.emplace_back(spec.scheme, std::nullopt);
      cache_failed.push_back(0);
      try {
        cache[slot].second.emplace(analyze_scheme(*data, spec.scheme, *base));
      } catch (const Error&) {
        cache_failed[slot] = 1;
      }
    }
    if (cache_failed[slot]) continue;
    try {
      const auto& an = *cache[slot].second;
      const CurveEstimate est = estimate_curve(an, spec.estimator, grid);
      for (std::size_t k = 0; k < K; ++k) res.delta[a][k] = est.delta[k + 1];
      res.ok[a] = 1;
      try {
        const auto v = sandwich_variance(an, est);
        for (std::size_t k = 0; k < K; ++k) res.var[a][k] = v.delta[k + 1];
      } catch (const Error&) {
      }
    } catch (const Error&) {
    }
  }
  return res;
}

inline MonteCarloRun run_replicates(const ScenarioConfig& cfg, const std::vector<double>& times, unsigned threads = 0) {
  cfg.validate();
  MonteCarloRun run;
  run.config = cfg;
  run.beta0 = calibrate_intercept(cfg.psi, cfg.seed);
  run.times = times;
  const TimeGrid grid(times);
  run.replicates.resize(cfg.replicates);
  parallel_for(cfg.replicates, threads,
               [&](std::size_t r) { run.replicates[r] = run_replicate(cfg, run.beta0, grid, r); });
  return run;
}

struct MetricRow {
  AnalysisSpec analysis;
  std::vector<double> truth, mean_estimate, percent_bias, mc_variance, relative_efficiency, coverage, mean_se;
  std::size_t successes = 0, failures = 0;
};

struct SimulationReport {
  ScenarioConfig config;
  double beta0 = 0.0;
  std::vector<double> times;
  std::size_t replicates = 0;
  double censoring_rate = 0.0, treated_fraction = 0.0;
  std::vector<MetricRow> rows;
  bool error_flag = false;
  std::string error_message;

  const MetricRow& at(const AnalysisSpec& a) const {
    for (const auto& r : rows)
      if (r.analysis == a) return r;
    throw UsageError("no report row for " + a.label());
  }
};

// Aggregates the first `count` replicates (all when 0). Relative efficiency is
// against IPTW with estimator I, which must be among the analyses.
inline SimulationReport summarize(const MonteCarloRun& run, const TruthTable& truth, std::size_t count = 0) {
  if (count == 0 || count > run.replicates.size()) count = run.replicates.size();
  const auto& cfg = run.config;
  const std::size_t A = cfg.analyses.size(), K = run.times.size();
  if (truth.times.size() != K) throw UsageError("truth table time points do not match the run");
  SimulationReport rep;
  rep.config = cfg;
  rep.config.replicates = count;
  rep.beta0 = run.beta0;
  rep.times = run.times;
  rep.replicates = count;
  std::size_t data_ok = 0;
  for (std::size_t r = 0; r < count; ++r) {
    const auto& rr = run.replicates[r];
    if (!rr.data_ok) continue;
    ++data_ok;
    rep.censoring_rate += rr.censoring_rate;
    rep.treated_fraction += rr.treated_fraction;
  }
  if (data_ok) {
    rep.censoring_rate /= static_cast<double>(data_ok);
    rep.treated_fraction /= static_cast<double>(data_ok);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t a = 0; a < A; ++a) {
    MetricRow row;
    row.analysis = cfg.analyses[a];
    const auto& te = truth.at(row.analysis.scheme);
    row.truth = te.delta;
    row.mean_estimate.assign(K, nan);
    row.percent_bias.assign(K, nan);
    row.mc_variance.assign(K, nan);
    row.relative_efficiency.assign(K, nan);
    row.coverage.assign(K, nan);
    row.mean_se.assign(K, nan);
    for (std::size_t r = 0; r < count; ++r) (run.replicates[r].ok[a] ? row.successes : row.failures)++;
    for (std::size_t k = 0; k < K && row.successes > 0; ++k) {
      double sum = 0.0;
      for (std::size_t r = 0; r < count; ++r)
        if (run.replicates[r].ok[a]) sum += run.replicates[r].delta[a][k];
      const double m = static_cast<double>(row.successes);
      const double mean = sum / m;
      double ss = 0.0, se_sum = 0.0;
      std::size_t covered = 0, with_var = 0;
      for (std::size_t r = 0; r < count; ++r) {
        if (!run.replicates[r].ok[a]) continue;
        const double d = run.replicates[r].delta[a][k];
        ss += (d - mean) * (d - mean);
        const double v = run.replicates[r].var[a][k];
        if (!std::isfinite(v)) continue;
        ++with_var;
        const double se = std::sqrt(std::max(0.0, v));
        se_sum += se;
        if (std::abs(d - row.truth[k]) <= kWaldZ * se) ++covered;
      }
      row.mean_estimate[k] = mean;
      row.percent_bias[k] = row.truth[k] != 0.0 ? 100.0 * (mean - row.truth[k]) / row.truth[k] : nan;
      row.mc_variance[k] = row.successes > 1 ? ss / (m - 1.0) : nan;
      if (with_var > 0) {
        row.coverage[k] = 100.0 * static_cast<double>(covered) / static_cast<double>(with_var);
        row.mean_se[k] = se_sum / static_cast<double>(with_var);
      }
    }
    if (static_cast<double>(row.failures) > kMaxReplicateFailureRate * static_cast<double>(count)) {
      rep.error_flag = true;
      rep.error_message += (rep.error_message.empty() ? "" : "; ") + row.analysis.label() + " failed in " +
                           std::to_string(row.failures) + " of " + std::to_string(count) + " replicates";
    }
    rep.rows.push_back(std::move(row));
  }
  const AnalysisSpec benchmark{WeightScheme::iptw(), EstimatorKind::I};
  const MetricRow* ref = nullptr;
  for (const auto& r : rep.rows)
    if (r.analysis == benchmark) ref = &r;
  if (ref) {
    const auto ref_var = ref->mc_variance;
    for (auto& r : rep.rows)
      for (std::size_t k = 0; k < K; ++k)
        r.relative_efficiency[k] = r.analysis == benchmark ? 1.0 : ref_var[k] / r.mc_variance[k];
  }
  return rep;
}

// Full study: time points and truths from the population, then replicates.
struct MonteCarloStudy {
  TruthTable truth;
  MonteCarloRun run;
  SimulationReport report;
};

inline MonteCarloStudy run_monte_carlo(ScenarioConfig cfg, unsigned threads = 0) {
  const AnalysisSpec benchmark{WeightScheme::iptw(), EstimatorKind::I};
  if (std::find(cfg.analyses.begin(), cfg.analyses.end(), benchmark) == cfg.analyses.end())
    cfg.analyses.insert(cfg.analyses.begin(), benchmark);
  cfg.validate();
  MonteCarloStudy study;
  study.truth = true_estimands(cfg, cfg.pop_size, cfg.seed, cfg.time_points, threads);
  study.run = run_replicates(cfg, study.truth.times, threads);
  study.report = summarize(study.run, study.truth);
  return study;
}

}  // namespace owsurv
