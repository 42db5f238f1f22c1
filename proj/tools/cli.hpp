#pragma once

// Command-line front end. run_cli() is the whole program minus process exit,
// so tests can drive it in-process.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "owsurv/owsurv.hpp"

namespace owsurv::cli {

using nlohmann::json;

// key=value lines; '#' starts a comment. Keys are long option names.
inline std::vector<std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::vector<std::string> args;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config file line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = detail::trim(line.substr(0, eq)), value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw UsageError("config file line " + std::to_string(lineno) + ": empty key");
    args.push_back("--" + key + "=" + value);
  }
  return args;
}

// Splices config-file options in front of the command-line options so flags win.
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::optional<std::string> path;
  std::vector<std::string> rest;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config") {
      if (k + 1 >= args.size()) throw UsageError("--config needs a file name");
      path = args[++k];
    } else if (args[k].rfind("--config=", 0) == 0) {
      path = args[k].substr(9);
    } else {
      rest.push_back(args[k]);
    }
  }
  if (!path) return rest;
  if (rest.empty()) throw UsageError("--config needs a subcommand");
  auto file = read_config_file(*path);
  rest.insert(rest.begin() + 1, file.begin(), file.end());
  return rest;
}

inline WeightScheme parse_scheme(const std::string& name, std::optional<double> alpha, std::optional<double> q,
                                 bool refit) {
  if (name == "ow" || name == "overlap") return WeightScheme::overlap();
  if (name == "iptw") return WeightScheme::iptw();
  if (name == "matching") return WeightScheme::matching();
  if (name == "uniform" || name == "unadjusted") return WeightScheme::uniform();
  if (name == "symtrim") {
    if (!alpha) throw UsageError("scheme symtrim requires --alpha");
    return WeightScheme::symmetric_trim(*alpha, refit);
  }
  if (name == "asymtrim") {
    if (!q) throw UsageError("scheme asymtrim requires --q");
    return WeightScheme::asymmetric_trim(*q, refit);
  }
  throw UsageError("unknown scheme '" + name + "'");
}

// "symtrim:0.1" style entries for batch runs.
inline WeightScheme parse_scheme_token(const std::string& token) {
  const auto colon = token.find(':');
  const std::string name = token.substr(0, colon);
  std::optional<double> par;
  if (colon != std::string::npos) {
    try {
      par = std::stod(token.substr(colon + 1));
    } catch (const std::exception&) {
      throw UsageError("bad scheme parameter in '" + token + "'");
    }
  }
  return parse_scheme(name, par, par, true);
}

inline EstimatorKind parse_estimator(const std::string& s) {
  if (s == "I" || s == "i" || s == "1") return EstimatorKind::I;
  if (s == "II" || s == "ii" || s == "2") return EstimatorKind::II;
  throw UsageError("estimator must be I or II");
}

inline CensoringMethod parse_censoring(const std::string& s) {
  if (s == "weibull") return CensoringMethod::weibull;
  if (s == "km") return CensoringMethod::kaplan_meier;
  if (s == "none") return CensoringMethod::none;
  throw UsageError("censoring must be weibull, km or none");
}

inline json ps_json(const PropensityFit& f) {
  json j;
  j["beta"] = std::vector<double>(f.beta.data(), f.beta.data() + f.beta.size());
  j["log_likelihood"] = f.log_likelihood;
  j["iterations"] = f.iterations;
  j["converged"] = f.converged;
  j["separation_flag"] = f.separation_flag;
  j["score_norm"] = f.score_norm;
  j["warnings"] = f.warnings;
  return j;
}

inline json censoring_json(const CensoringModel& m) {
  json j;
  if (const auto* w = std::get_if<WeibullCensoringFit>(&m)) {
    j["model"] = "weibull";
    j["arm"] = w->arm;
    j["log_gamma"] = w->log_gamma;
    j["theta"] = std::vector<double>(w->theta.data(), w->theta.data() + w->theta.size());
    j["covariates_used"] = w->covariates_used;
    j["converged"] = w->converged;
    j["iterations"] = w->iterations;
    j["log_likelihood"] = w->log_likelihood;
  } else if (const auto* k = std::get_if<KaplanMeierCensoring>(&m)) {
    j["model"] = "km";
    j["jumps"] = k->jump_times.size();
  } else {
    j["model"] = "none";
  }
  return j;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path + " for writing");
  f << text;
  if (!f) throw DataError("failed writing " + path);
}

struct DataOptions {
  std::string input, time_col = "time", event_col = "event", treatment_col = "treatment";
  std::vector<std::string> covariates;

  void add(CLI::App* app) {
    app->add_option("--input,-i", input, "Dataset CSV")->required();
    app->add_option("--time-col", time_col, "Observed time column");
    app->add_option("--event-col", event_col, "Event indicator column");
    app->add_option("--treatment-col", treatment_col, "Treatment column");
    app->add_option("--covariates", covariates, "Covariate columns (default: all others)")->delimiter(',');
  }
  SurvivalDataset load() const {
    ColumnMap map;
    map.time = time_col;
    map.event = event_col;
    map.treatment = treatment_col;
    map.covariates = covariates;
    return load_csv(input, map);
  }
};

struct SchemeOptions {
  std::string scheme = "ow";
  std::optional<double> alpha, q;
  bool no_refit = false;

  void add(CLI::App* app) {
    app->add_option("--scheme", scheme, "ow, iptw, symtrim, asymtrim, matching or uniform");
    app->add_option("--alpha", alpha, "Symmetric trimming threshold");
    app->add_option("--q", q, "Asymmetric trimming quantile");
    app->add_flag("--no-refit", no_refit, "Keep the original PS and censoring fits after trimming");
  }
  WeightScheme get() const { return parse_scheme(scheme, alpha, q, !no_refit); }
};

struct ScenarioOptions {
  double psi = 1.0;
  std::optional<double> censor_rate, lambda;
  std::size_t n = 2000;
  std::optional<std::uint64_t> seed;
  std::size_t pop_size = 500'000;
  std::vector<double> times;

  void add(CLI::App* app, bool with_n) {
    app->add_option("--psi", psi, "Overlap multiplier");
    app->add_option("--censor-rate", censor_rate, "Target censoring rate: 0.25 or 0.5");
    app->add_option("--lambda", lambda, "Censoring intercept (overrides --censor-rate)");
    if (with_n) app->add_option("--n", n, "Sample size per replicate");
    app->add_option("--seed", seed, "Random seed");
    app->add_option("--pop-size", pop_size, "Population size for truths and time points");
    app->add_option("--times", times, "Explicit evaluation times")->delimiter(',');
  }
  ScenarioConfig get(bool need_seed) const {
    if (need_seed && !seed) throw UsageError("--seed is required");
    ScenarioConfig c;
    c.psi = psi;
    c.lambda_c = lambda ? *lambda : lambda_for_censor_rate(censor_rate.value_or(0.25));
    c.n = n;
    c.seed = seed.value_or(0);
    c.pop_size = pop_size;
    if (!times.empty()) c.time_points = times;
    return c;
  }
};

inline int run_estimate(const DataOptions& d, const SchemeOptions& so, const std::string& estimator,
                        const std::string& variance, int reps, std::optional<std::uint64_t> seed,
                        const std::vector<double>& times, bool mono, const std::string& censoring,
                        const std::string& output, std::string summary, const std::string& svg, unsigned threads,
                        std::ostream& out) {
  const WeightScheme scheme = so.get();
  const EstimatorKind kind = parse_estimator(estimator);
  PipelineOptions opt;
  opt.censoring = parse_censoring(censoring);
  if (variance != "sandwich" && variance != "bootstrap" && variance != "none")
    throw UsageError("variance must be sandwich, bootstrap or none");
  if (variance == "bootstrap") {
    if (reps < 50) throw UsageError("bootstrap needs --bootstrap-reps of at least 50");
    if (!seed) throw UsageError("--seed is required for the bootstrap");
  }
  const SurvivalDataset data = d.load();
  const TimeGrid grid = times.empty() ? default_time_grid(data) : TimeGrid(times);

  const NuisanceFits base = fit_nuisance(data, opt, scheme.kind != WeightKind::uniform);
  const SchemeAnalysis an = analyze_scheme(data, scheme, base, opt);
  CurveEstimate est = estimate_curve(an, kind, grid, opt.censoring_floor);
  if (variance == "sandwich") est.attach_variance(sandwich_variance(an, est));
  if (variance == "bootstrap")
    est.attach_variance(bootstrap_variance(data, scheme, kind, grid, reps, *seed, opt, threads));
  if (mono) {
    if (est.variance) est.warnings.push_back("monotonized curve reported without variance");
    est = monotonize(std::move(est));
  }

  std::ostringstream csv;
  write_curve_csv(csv, est);
  write_text(output, csv.str());
  if (summary.empty()) summary = output + ".json";

  json j;
  j["config"] = {{"input", d.input},
                 {"scheme", scheme.label()},
                 {"refit_after_trim", scheme.refit_after_trim},
                 {"estimator", to_string(kind)},
                 {"variance", variance},
                 {"censoring", to_string(opt.censoring)},
                 {"monotonize", mono}};
  if (variance == "bootstrap") {
    j["config"]["bootstrap_reps"] = reps;
    j["config"]["seed"] = *seed;
  }
  j["n"] = data.n();
  j["n_treated"] = data.arm_size(kTreated);
  j["n_control"] = data.arm_size(kControl);
  j["n_retained"] = an.rows.size();
  j["effective_n_treated"] = an.weights.effective_n_treated;
  j["effective_n_control"] = an.weights.effective_n_control;
  if (base.ps) j["propensity"] = ps_json(*base.ps);
  if (an.weights.refit) j["propensity_refit"] = ps_json(*an.weights.refit);
  j["censoring_treated"] = censoring_json(an.censor_1);
  j["censoring_control"] = censoring_json(an.censor_0);
  j["floor_count"] = est.floor_count;
  j["curve"] = curve_json(est);
  std::vector<std::string> warnings = est.warnings;
  if (base.ps)
    for (const auto& w : base.ps->warnings) warnings.push_back("propensity: " + w);
  j["warnings"] = warnings;
  write_text(summary, j.dump(2) + "\n");
  if (!svg.empty()) {
    std::ostringstream s;
    write_curve_svg(s, est);
    write_text(svg, s.str());
  }
  out << json{{"status", "ok"}, {"curve", output}, {"summary", summary}}.dump() << "\n";
  return 0;
}

inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  auto emit_error = [&](const char* kind, const std::string& msg, int code, std::size_t row = 0) {
    json e{{"kind", kind}, {"message", msg}, {"exit_code", code}};
    if (row) e["row"] = row;
    err << json{{"error", e}}.dump() << "\n";
    return code;
  };
  try {
    args = expand_config(std::move(args));
    CLI::App app{"Propensity-score weighted survival curves with censoring weights", "owsurv"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    unsigned threads = 0;

    // estimate
    auto* est = app.add_subcommand("estimate", "Estimate counterfactual survival curves");
    DataOptions est_data;
    SchemeOptions est_scheme;
    std::string estimator = "I", variance = "sandwich", censoring = "weibull", output, summary, svg;
    int reps = 500;
    std::optional<std::uint64_t> est_seed;
    std::vector<double> est_times;
    bool mono = false;
    est_data.add(est);
    est_scheme.add(est);
    est->add_option("--estimator", estimator, "I or II");
    est->add_option("--variance", variance, "sandwich, bootstrap or none");
    est->add_option("--bootstrap-reps", reps, "Bootstrap replicates (>= 50)");
    est->add_option("--seed", est_seed, "Seed for the bootstrap");
    est->add_option("--times", est_times, "Evaluation times (default: observed event times)")->delimiter(',');
    est->add_flag("--monotonize", mono, "Apply the running-minimum correction");
    est->add_option("--censoring", censoring, "weibull, km or none");
    est->add_option("--output,-o", output, "Curve CSV")->required();
    est->add_option("--summary", summary, "Summary JSON (default: <output>.json)");
    est->add_option("--svg", svg, "Write an SVG plot of the curves");
    est->add_option("--threads", threads, "Worker threads");

    // balance
    auto* bal = app.add_subcommand("balance", "Covariate balance before and after weighting");
    DataOptions bal_data;
    SchemeOptions bal_scheme;
    std::string bal_out;
    bal_data.add(bal);
    bal_scheme.add(bal);
    bal->add_option("--output,-o", bal_out, "Balance CSV")->required();

    // simulate
    auto* sim = app.add_subcommand("simulate", "Monte Carlo study");
    ScenarioOptions sim_sc;
    std::size_t sim_reps = 2000;
    std::vector<std::string> sim_schemes, sim_estimators = {"I", "II"};
    std::string sim_json, sim_csv;
    sim_sc.add(sim, true);
    sim->add_option("--reps", sim_reps, "Replicates");
    sim->add_option("--schemes", sim_schemes, "Schemes, e.g. ow,iptw,symtrim:0.1 (default: full set)")
        ->delimiter(',');
    sim->add_option("--estimators", sim_estimators, "Estimators")->delimiter(',');
    sim->add_option("--output-json", sim_json, "Report JSON")->required();
    sim->add_option("--output-csv", sim_csv, "Report CSV")->required();
    sim->add_option("--threads", threads, "Worker threads");

    // truth
    auto* tru = app.add_subcommand("truth", "True estimands on a large population");
    ScenarioOptions tru_sc;
    std::string tru_out;
    tru_sc.add(tru, false);
    tru->add_option("--output,-o", tru_out, "Truth CSV")->required();
    tru->add_option("--threads", threads, "Worker threads");

    // timepoints
    auto* tp = app.add_subcommand("timepoints", "At-risk time points on a large population");
    ScenarioOptions tp_sc;
    std::string tp_out;
    tp_sc.add(tp, false);
    tp->add_option("--output,-o", tp_out, "Time point CSV")->required();
    tp->add_option("--threads", threads, "Worker threads");

    // generate
    auto* gen = app.add_subcommand("generate", "Write one simulated dataset");
    ScenarioOptions gen_sc;
    std::uint64_t gen_rep = 0;
    std::string gen_out;
    gen_sc.add(gen, true);
    gen->add_option("--replicate", gen_rep, "Replicate index");
    gen->add_option("--output,-o", gen_out, "Dataset CSV")->required();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
      app.parse(rev);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::ParseError& e) {
      return emit_error("usage_error", e.what(), 2);
    }

    if (*est) {
      return run_estimate(est_data, est_scheme, estimator, variance, reps, est_seed, est_times, mono, censoring,
                          output, summary, svg, threads, out);
    }
    if (*bal) {
      const WeightScheme scheme = bal_scheme.get();
      const SurvivalDataset data = bal_data.load();
      WeightSet ws;
      if (scheme.kind == WeightKind::uniform) ws = uniform_weights(data);
      else ws = compute_weights(scheme, data, fit_logistic(data));
      std::ostringstream csv;
      write_balance_csv(csv, balance_table(data, ws));
      write_text(bal_out, csv.str());
      out << json{{"status", "ok"}, {"balance", bal_out}}.dump() << "\n";
      return 0;
    }
    if (*sim) {
      if (sim_reps < 1) throw UsageError("--reps must be at least 1");
      ScenarioConfig cfg = sim_sc.get(true);
      cfg.replicates = sim_reps;
      if (!sim_schemes.empty()) {
        cfg.analyses.clear();
        for (const auto& s : sim_schemes)
          for (const auto& e : sim_estimators) cfg.analyses.push_back({parse_scheme_token(s), parse_estimator(e)});
      } else {
        std::vector<EstimatorKind> kinds;
        for (const auto& e : sim_estimators) kinds.push_back(parse_estimator(e));
        std::erase_if(cfg.analyses, [&](const AnalysisSpec& a) {
          return std::find(kinds.begin(), kinds.end(), a.estimator) == kinds.end();
        });
      }
      const MonteCarloStudy study = run_monte_carlo(cfg, threads);
      json j = report_json(study.report);
      j["truth"] = truth_json(study.truth);
      write_text(sim_json, j.dump(2) + "\n");
      std::ostringstream csv;
      write_report_csv(csv, study.report);
      write_text(sim_csv, csv.str());
      out << json{{"status", study.report.error_flag ? "error" : "ok"},
                  {"beta0", study.report.beta0},
                  {"time_points", study.report.times},
                  {"censoring_rate", study.report.censoring_rate},
                  {"treated_fraction", study.report.treated_fraction}}
                 .dump()
          << "\n";
      if (study.report.error_flag) return emit_error("estimation_error", study.report.error_message, 1);
      return 0;
    }
    if (*tru) {
      ScenarioConfig cfg = tru_sc.get(true);
      cfg.validate();
      const TruthTable tt = true_estimands(cfg, cfg.pop_size, cfg.seed, cfg.time_points, threads);
      std::ostringstream csv;
      write_truth_csv(csv, tt);
      write_text(tru_out, csv.str());
      out << json{{"status", "ok"}, {"beta0", tt.beta0}, {"time_points", tt.times}}.dump() << "\n";
      return 0;
    }
    if (*tp) {
      ScenarioConfig cfg = tp_sc.get(true);
      cfg.validate();
      const auto times = find_time_points(cfg, cfg.pop_size, cfg.seed, threads);
      std::ostringstream csv;
      write_timepoints_csv(csv, times);
      write_text(tp_out, csv.str());
      out << json{{"status", "ok"}, {"time_points", times}}.dump() << "\n";
      return 0;
    }
    if (*gen) {
      ScenarioConfig cfg = gen_sc.get(true);
      cfg.validate();
      std::ostringstream csv;
      write_csv(csv, generate_dataset(cfg, gen_rep));
      write_text(gen_out, csv.str());
      out << json{{"status", "ok"}, {"output", gen_out}}.dump() << "\n";
      return 0;
    }
    return emit_error("usage_error", "no subcommand", 2);
  } catch (const DataError& e) {
    return emit_error(e.kind(), e.what(), e.exit_code(), e.row());
  } catch (const Error& e) {
    return emit_error(e.kind(), e.what(), e.exit_code());
  } catch (const std::exception& e) {
    return emit_error("internal_error", e.what(), 1);
  }
}

}  // namespace owsurv::cli
