#pragma once

// File formats: curve CSV/JSON, balance CSV, truth CSV, simulation report
// JSON/CSV and a static SVG plot of the estimated curves.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "owsurv/core_data.hpp"
#include "owsurv/error.hpp"
#include "owsurv/estimators.hpp"
#include "owsurv/simulation.hpp"
#include "owsurv/weights.hpp"

namespace owsurv {

inline constexpr int kReportSchemaVersion = 1;

namespace detail {

inline std::string fmt_or_na(double v) { return std::isfinite(v) ? format_double(v) : std::string("NA"); }

inline nlohmann::json num_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline nlohmann::json array_or_null(const std::vector<double>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (double x : v) a.push_back(num_or_null(x));
  return a;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path + " for writing");
  f.precision(17);
  return f;
}

}  // namespace detail

inline void write_curve_csv(std::ostream& out, const CurveEstimate& est) {
  out << "t,s1,s0,delta,var_delta,ci_low,ci_high\n";
  for (std::size_t k = 0; k < est.grid.size(); ++k) {
    const bool v = est.variance.has_value();
    out << detail::format_double(est.grid[k]) << ',' << detail::format_double(est.s1[k]) << ',' << detail::format_double(est.s0[k]) << ','
        << detail::format_double(est.delta[k]) << ',' << (v ? detail::fmt_or_na(est.variance->delta[k]) : "NA") << ','
        << (v ? detail::fmt_or_na(est.ci_low[k]) : "NA") << ',' << (v ? detail::fmt_or_na(est.ci_high[k]) : "NA")
        << '\n';
  }
}

inline nlohmann::json curve_json(const CurveEstimate& est) {
  nlohmann::json j;
  j["scheme"] = est.scheme.label();
  j["estimator"] = to_string(est.estimator_kind);
  j["t"] = est.grid.times();
  j["s1"] = detail::array_or_null(est.s1);
  j["s0"] = detail::array_or_null(est.s0);
  j["delta"] = detail::array_or_null(est.delta);
  if (est.variance) {
    j["variance_method"] = est.variance->method;
    j["var_s1"] = detail::array_or_null(est.variance->s1);
    j["var_s0"] = detail::array_or_null(est.variance->s0);
    j["var_delta"] = detail::array_or_null(est.variance->delta);
    j["ci_low"] = detail::array_or_null(est.ci_low);
    j["ci_high"] = detail::array_or_null(est.ci_high);
  }
  j["monotonized"] = est.monotonized;
  j["floor_count"] = est.floor_count;
  j["warnings"] = est.warnings;
  return j;
}

inline void write_balance_csv(std::ostream& out, const BalanceTable& table) {
  out << "covariate,mean_treated_unwt,mean_control_unwt,smd_unwt,mean_treated_wt,mean_control_wt,smd_wt\n";
  for (const auto& r : table.rows)
    out << r.covariate << ',' << detail::fmt_or_na(r.mean_treated_unwt) << ','
        << detail::fmt_or_na(r.mean_control_unwt) << ',' << detail::fmt_or_na(r.smd_unwt) << ','
        << detail::fmt_or_na(r.mean_treated_wt) << ',' << detail::fmt_or_na(r.mean_control_wt) << ','
        << detail::fmt_or_na(r.smd_wt) << '\n';
}

// Rows t1..tK, then S1, S0 and delta per population, with MC standard errors.
inline void write_truth_csv(std::ostream& out, const TruthTable& tt) {
  out << "quantity,population";
  for (std::size_t k = 0; k < tt.times.size(); ++k) out << ",t" << k + 1;
  out << '\n';
  out << "time,";
  for (double t : tt.times) out << ',' << detail::format_double(t);
  out << '\n';
  for (const auto& e : tt.entries) {
    auto row = [&](const char* name, const std::vector<double>& v) {
      out << name << ',' << e.scheme.label();
      for (double x : v) out << ',' << detail::format_double(x);
      out << '\n';
    };
    row("delta", e.delta);
    row("s1", e.s1);
    row("s0", e.s0);
    row("mc_se", e.mc_se);
  }
}

inline void write_timepoints_csv(std::ostream& out, const std::vector<double>& times) {
  out << "point,time,at_risk_fraction\n";
  const double levels[] = {0.8, 0.6, 0.4, 0.2};
  for (std::size_t k = 0; k < times.size(); ++k)
    out << 't' << k + 1 << ',' << detail::format_double(times[k]) << ',' << (k < 4 ? detail::format_double(levels[k]) : "NA")
        << '\n';
}

inline nlohmann::json scenario_json(const ScenarioConfig& c) {
  nlohmann::json j;
  j["psi"] = c.psi;
  j["lambda"] = c.lambda_c;
  j["n"] = c.n;
  j["replicates"] = c.replicates;
  j["seed"] = c.seed;
  j["gamma_outcome"] = c.gamma_outcome;
  j["eta_treated"] = c.eta_treated;
  j["eta_control"] = c.eta_control;
  j["pop_size"] = c.pop_size;
  return j;
}

inline nlohmann::json truth_json(const TruthTable& tt) {
  nlohmann::json j;
  j["pop_size"] = tt.pop_size;
  j["seed"] = tt.seed;
  j["beta0"] = tt.beta0;
  j["times"] = tt.times;
  for (const auto& e : tt.entries) {
    nlohmann::json p;
    p["s1"] = e.s1;
    p["s0"] = e.s0;
    p["delta"] = e.delta;
    p["mc_se"] = e.mc_se;
    p["population_fraction"] = e.population_fraction;
    j["populations"][e.scheme.label()] = p;
  }
  return j;
}

// scenario -> scheme -> estimator -> time point.
inline nlohmann::json report_json(const SimulationReport& rep) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  nlohmann::json sc = scenario_json(rep.config);
  sc["replicates"] = rep.replicates;
  sc["beta0"] = rep.beta0;
  sc["time_points"] = rep.times;
  sc["censoring_rate"] = rep.censoring_rate;
  sc["treated_fraction"] = rep.treated_fraction;
  sc["error"] = rep.error_flag;
  if (rep.error_flag) sc["error_message"] = rep.error_message;
  nlohmann::json schemes = nlohmann::json::object();
  for (const auto& r : rep.rows) {
    nlohmann::json est;
    est["successes"] = r.successes;
    est["failures"] = r.failures;
    nlohmann::json pts = nlohmann::json::array();
    for (std::size_t k = 0; k < rep.times.size(); ++k) {
      nlohmann::json p;
      p["t"] = rep.times[k];
      p["truth"] = detail::num_or_null(r.truth[k]);
      p["mean_estimate"] = detail::num_or_null(r.mean_estimate[k]);
      p["percent_bias"] = detail::num_or_null(r.percent_bias[k]);
      p["mc_variance"] = detail::num_or_null(r.mc_variance[k]);
      p["relative_efficiency"] = detail::num_or_null(r.relative_efficiency[k]);
      p["coverage"] = detail::num_or_null(r.coverage[k]);
      p["mean_se"] = detail::num_or_null(r.mean_se[k]);
      pts.push_back(p);
    }
    est["time_points"] = pts;
    schemes[r.analysis.scheme.label()][to_string(r.analysis.estimator)] = est;
  }
  sc["schemes"] = schemes;
  j["scenario"] = sc;
  return j;
}

// One line per (metric, scheme, estimator), columns t1..tK.
inline void write_report_csv(std::ostream& out, const SimulationReport& rep) {
  out << "metric,scheme,param,estimator";
  for (std::size_t k = 0; k < rep.times.size(); ++k) out << ",t" << k + 1;
  out << '\n';
  const std::pair<const char*, std::vector<double> MetricRow::*> metrics[] = {
      {"percent_bias", &MetricRow::percent_bias},
      {"relative_efficiency", &MetricRow::relative_efficiency},
      {"coverage", &MetricRow::coverage},
      {"mc_variance", &MetricRow::mc_variance},
      {"mean_se", &MetricRow::mean_se},
      {"mean_estimate", &MetricRow::mean_estimate},
      {"truth", &MetricRow::truth},
  };
  for (const auto& [name, member] : metrics)
    for (const auto& r : rep.rows) {
      const auto& s = r.analysis.scheme;
      out << name << ',' << s.name() << ',' << (s.trims() ? detail::format_double(s.parameter) : "") << ','
          << to_string(r.analysis.estimator);
      for (double v : r.*member) out << ',' << detail::fmt_or_na(v);
      out << '\n';
    }
}

// Step curves of S1 and S0 with a shaded band for the difference CI, drawn
// around S0 + delta so the band follows the treated curve.
inline void write_curve_svg(std::ostream& out, const CurveEstimate& est) {
  const double W = 640, H = 420, L = 60, R = 20, T = 20, B = 50;
  const double tmax = est.grid.t_max() > 0 ? est.grid.t_max() : 1.0;
  auto px = [&](double t) { return L + (W - L - R) * t / tmax; };
  auto py = [&](double s) { return T + (H - T - B) * (1.0 - std::clamp(s, 0.0, 1.0)); };
  char buf[160];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L, H - B, W - R,
                H - B);
  out << buf;
  std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L, T, L, H - B);
  out << buf;
  for (int k = 0; k <= 4; ++k) {
    const double s = k / 4.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"end\">%.2f</text>\n",
                  L - 6, py(s) + 4, s);
    out << buf;
    const double t = tmax * k / 4.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"middle\">%.3g</text>\n",
                  px(t), H - B + 16, t);
    out << buf;
  }
  auto step_path = [&](const std::vector<double>& s) {
    std::ostringstream p;
    p.precision(6);
    p << "M" << px(est.grid[0]) << ' ' << py(s[0]);
    for (std::size_t k = 1; k < s.size(); ++k)
      p << " H" << px(est.grid[k]) << " V" << py(s[k]);
    return p.str();
  };
  if (est.variance) {
    std::ostringstream band;
    band.precision(6);
    const std::size_t K = est.grid.size();
    for (std::size_t k = 0; k < K; ++k)
      band << (k ? " L" : "M") << px(est.grid[k]) << ' ' << py(est.s0[k] + est.ci_high[k]);
    for (std::size_t k = K; k-- > 0;) band << " L" << px(est.grid[k]) << ' ' << py(est.s0[k] + est.ci_low[k]);
    out << "<path d=\"" << band.str() << " Z\" fill=\"#3366cc\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
  }
  out << "<path d=\"" << step_path(est.s1) << "\" fill=\"none\" stroke=\"#3366cc\" stroke-width=\"1.5\"/>\n";
  out << "<path d=\"" << step_path(est.s0) << "\" fill=\"none\" stroke=\"#cc3333\" stroke-width=\"1.5\"/>\n";
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"12\" fill=\"#3366cc\">treated</text>\n",
                W - R - 110, T + 14);
  out << buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"12\" fill=\"#cc3333\">control</text>\n",
                W - R - 110, T + 30);
  out << buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"12\" text-anchor=\"middle\">time</text>\n",
                (L + W - R) / 2, H - 12);
  out << buf;
  out << "</svg>\n";
}

}  // namespace owsurv
