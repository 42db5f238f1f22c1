#pragma once

// Pointwise variance of the survival-curve estimators.
//
// Sandwich route: the PS score, the per-arm Weibull censoring scores and one
// moment condition per (arm, grid time) are stacked into a single exactly
// identified M-estimator
//
//   eta = (beta, phi_1, phi_0, S_1(t_1..t_K), S_0(t_1..t_K)),  phi_a = (log gamma_a, theta_a)
//   psi_{a,k}(O; eta) = w(beta) 1{A = a} (h_k(O; phi_a) - S_a(t_k))
//
// with h_k = 1 - d 1{U <= t_k} / K_a(U, X) (estimator I) or
// 1{U > t_k} / K_a(t_k, X) (estimator II). Cov(eta) = A^-1 B A^-T / n with
// A = -mean d psi / d eta and B = mean psi psi^T. The bread is block lower
// triangular (nuisance rows never depend on S), which gives the per-point
// variances from influence functions without forming the full matrix.
//
// Bootstrap route: full pipeline refit per row resample.

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "owsurv/censoring.hpp"
#include "owsurv/core_data.hpp"
#include "owsurv/estimators.hpp"
#include "owsurv/parallel.hpp"
#include "owsurv/pipeline.hpp"
#include "owsurv/random.hpp"
#include "owsurv/weights.hpp"

namespace owsurv {

struct StackedSpec {
  WeightKind weight_kind = WeightKind::overlap;  // iptw, overlap or uniform on the analysis rows
  EstimatorKind estimator = EstimatorKind::I;
  std::vector<double> times;
  bool ps_estimated = true;
  std::vector<double> known_ps;  // used when !ps_estimated
  bool censoring_modeled = true;  // Weibull per arm; otherwise K == 1
  bool censor_covariates[2] = {true, true};  // indexed by arm
  double floor = kDefaultCensoringFloor;
};

struct StackedLayout {
  Eigen::Index beta = 0, beta_dim = 0;
  Eigen::Index phi[2] = {0, 0};  // indexed by arm
  Eigen::Index phi_dim[2] = {0, 0};
  Eigen::Index surv[2] = {0, 0};
  Eigen::Index K = 0;
  Eigen::Index nuisance_dim = 0;
  Eigen::Index dim = 0;
};

inline StackedLayout make_layout(std::size_t p, const StackedSpec& spec) {
  StackedLayout l;
  const bool weights_depend_on_ps = spec.ps_estimated && spec.weight_kind != WeightKind::uniform;
  l.beta_dim = weights_depend_on_ps ? static_cast<Eigen::Index>(p) + 1 : 0;
  for (int a : {kTreated, kControl})
    l.phi_dim[a] = spec.censoring_modeled ? 1 + (spec.censor_covariates[a] ? static_cast<Eigen::Index>(p) + 1 : 1) : 0;
  l.phi[kTreated] = l.beta_dim;
  l.phi[kControl] = l.phi[kTreated] + l.phi_dim[kTreated];
  l.nuisance_dim = l.phi[kControl] + l.phi_dim[kControl];
  l.K = static_cast<Eigen::Index>(spec.times.size());
  l.surv[kTreated] = l.nuisance_dim;
  l.surv[kControl] = l.nuisance_dim + l.K;
  l.dim = l.nuisance_dim + 2 * l.K;
  return l;
}

// Packs fitted values into eta. `censor[a]` is ignored when censoring is not modeled.
inline Eigen::VectorXd pack_parameters(const StackedSpec& spec, std::size_t p, const Eigen::VectorXd* beta,
                                       const WeibullCensoringFit* censor_1, const WeibullCensoringFit* censor_0,
                                       const std::vector<double>& s1, const std::vector<double>& s0) {
  const StackedLayout l = make_layout(p, spec);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(l.dim);
  if (l.beta_dim > 0) {
    if (!beta || beta->size() != l.beta_dim) throw UsageError("pack_parameters: beta has wrong size");
    eta.segment(l.beta, l.beta_dim) = *beta;
  }
  const WeibullCensoringFit* fits[2] = {censor_0, censor_1};
  for (int a : {kTreated, kControl}) {
    if (l.phi_dim[a] == 0) continue;
    if (!fits[a]) throw UsageError("pack_parameters: missing censoring fit");
    eta(l.phi[a]) = fits[a]->log_gamma;
    eta.segment(l.phi[a] + 1, l.phi_dim[a] - 1) = fits[a]->theta.head(l.phi_dim[a] - 1);
  }
  if (s1.size() != static_cast<std::size_t>(l.K) || s0.size() != static_cast<std::size_t>(l.K))
    throw UsageError("pack_parameters: survival values do not match the grid");
  for (Eigen::Index k = 0; k < l.K; ++k) {
    eta(l.surv[kTreated] + k) = s1[static_cast<std::size_t>(k)];
    eta(l.surv[kControl] + k) = s0[static_cast<std::size_t>(k)];
  }
  return eta;
}

// Per-subject stacked estimating functions and their analytic derivatives,
// evaluated at a fixed parameter vector.
class StackedEquations {
 public:
  StackedEquations(const SurvivalDataset& data, StackedSpec spec, Eigen::VectorXd eta)
      : data_(data), spec_(std::move(spec)), eta_(std::move(eta)), layout_(make_layout(data.p(), spec_)) {
    if (eta_.size() != layout_.dim) throw UsageError("StackedEquations: parameter vector has wrong size");
    if (spec_.weight_kind != WeightKind::iptw && spec_.weight_kind != WeightKind::overlap &&
        spec_.weight_kind != WeightKind::uniform)
      throw VarianceError("sandwich variance supports IPTW, overlap and uniform weights only");
    if (!spec_.ps_estimated && spec_.weight_kind != WeightKind::uniform && spec_.known_ps.size() != data.n())
      throw UsageError("StackedEquations: known propensity scores missing");
    precompute();
  }

  const StackedLayout& layout() const noexcept { return layout_; }
  const StackedSpec& spec() const noexcept { return spec_; }
  const Eigen::VectorXd& parameters() const noexcept { return eta_; }
  std::size_t n() const noexcept { return data_.n(); }

  // n x nuisance_dim matrix of PS and censoring scores.
  Eigen::MatrixXd nuisance_psi() const {
    const Eigen::Index n = static_cast<Eigen::Index>(data_.n());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, layout_.nuisance_dim);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto si = static_cast<std::size_t>(i);
      if (layout_.beta_dim > 0)
        out.row(i).segment(layout_.beta, layout_.beta_dim) =
            (data_.treatment()[si] - e_[si]) * x_.row(i);
      const int a = data_.treatment()[si];
      if (layout_.phi_dim[a] == 0) continue;
      const double c = data_.event()[si] == 0 ? 1.0 : 0.0;
      const double glu = gamma_[a] * log_u_[si];
      const double lam = lambda_u_[si];
      out(i, layout_.phi[a]) = c * (1.0 + glu) - lam * glu;
      out.row(i).segment(layout_.phi[a] + 1, layout_.phi_dim[a] - 1) = (c - lam) * censor_row(i, a);
    }
    return out;
  }

  // Mean derivative of the nuisance scores (block diagonal).
  Eigen::MatrixXd nuisance_jacobian() const {
    const Eigen::Index n = static_cast<Eigen::Index>(data_.n());
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(layout_.nuisance_dim, layout_.nuisance_dim);
    if (layout_.beta_dim > 0) {
      Eigen::VectorXd v(n);
      for (Eigen::Index i = 0; i < n; ++i) v(i) = e_[static_cast<std::size_t>(i)] * (1.0 - e_[static_cast<std::size_t>(i)]);
      j.block(layout_.beta, layout_.beta, layout_.beta_dim, layout_.beta_dim) = -(x_.transpose() * v.asDiagonal() * x_);
    }
    for (int a : {kTreated, kControl}) {
      const Eigen::Index q = layout_.phi_dim[a];
      if (q == 0) continue;
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(q, q);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto si = static_cast<std::size_t>(i);
        if (data_.treatment()[si] != a) continue;
        const double c = data_.event()[si] == 0 ? 1.0 : 0.0;
        const double glu = gamma_[a] * log_u_[si];
        const double lam = lambda_u_[si];
        const Eigen::RowVectorXd z = censor_row(i, a);
        h(0, 0) += c * glu - lam * glu * (1.0 + glu);
        h.block(1, 0, q - 1, 1) -= lam * glu * z.transpose();
        h.block(1, 1, q - 1, q - 1) -= lam * z.transpose() * z;
      }
      h.block(0, 1, 1, q - 1) = h.block(1, 0, q - 1, 1).transpose();
      j.block(layout_.phi[a], layout_.phi[a], q, q) = h;
    }
    return j / static_cast<double>(n);
  }

  // One survival moment condition: per-subject values, the mean derivative
  // with respect to the nuisance block, and c = mean w 1{A = a} (the
  // negated derivative with respect to S_a(t_k)).
  struct SurvivalColumn {
    Eigen::VectorXd psi;
    Eigen::RowVectorXd d_nuisance;
    double c = 0.0;
  };

  SurvivalColumn survival_column(int arm, Eigen::Index k) const {
    const Eigen::Index n = static_cast<Eigen::Index>(data_.n());
    const double t = spec_.times[static_cast<std::size_t>(k)];
    const double s = eta_(layout_.surv[arm] + k);
    SurvivalColumn col;
    col.psi = Eigen::VectorXd::Zero(n);
    col.d_nuisance = Eigen::RowVectorXd::Zero(layout_.nuisance_dim);
    const Eigen::Index q = layout_.phi_dim[arm];
    const bool at_t = spec_.estimator == EstimatorKind::II;
    // For estimator II every subject of the arm is evaluated at the same t.
    const double log_t = t > 0.0 ? std::log(t) : 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto si = static_cast<std::size_t>(i);
      if (data_.treatment()[si] != arm) continue;
      const double w = w_[si];
      col.c += w;
      const double u = data_.time()[si];
      double h = 0.0;
      double inv_k = 1.0, lam = 0.0, log_s = 0.0;
      bool active = false;
      if (!at_t) {
        active = data_.event()[si] == 1 && u <= t;
        if (active) {
          inv_k = 1.0 / k_u_[si];
          lam = floored_u_[si] ? 0.0 : lambda_u_[si];
          log_s = log_u_[si];
        }
        h = active ? 1.0 - inv_k : 1.0;
      } else {
        active = u > t;
        if (active && q > 0 && t > 0.0) {
          const double l = std::exp(gamma_[arm] * log_t + censor_row(i, arm).dot(theta_[arm]));
          const double kv = std::exp(-l);
          if (kv < spec_.floor) {
            inv_k = 1.0 / spec_.floor;
            lam = 0.0;
          } else {
            inv_k = 1.0 / kv;
            lam = l;
          }
          log_s = log_t;
        }
        h = active ? inv_k : 0.0;
      }
      col.psi(i) = w * (h - s);
      if (layout_.beta_dim > 0)
        col.d_nuisance.segment(layout_.beta, layout_.beta_dim) += (h - s) * dw_.row(i);
      if (q > 0 && active && lam > 0.0) {
        // d(1/K)/d phi = (Lambda / K) (gamma log s, z)
        const double sign = at_t ? 1.0 : -1.0;
        const double f = sign * w * lam * inv_k;
        col.d_nuisance(layout_.phi[arm]) += f * gamma_[arm] * log_s;
        col.d_nuisance.segment(layout_.phi[arm] + 1, q - 1) += f * censor_row(i, arm);
      }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    col.c *= inv_n;
    col.d_nuisance *= inv_n;
    return col;
  }

  // Full n x dim matrix of estimating functions.
  Eigen::MatrixXd psi() const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(data_.n()), layout_.dim);
    out.leftCols(layout_.nuisance_dim) = nuisance_psi();
    for (int a : {kTreated, kControl})
      for (Eigen::Index k = 0; k < layout_.K; ++k) out.col(layout_.surv[a] + k) = survival_column(a, k).psi;
    return out;
  }

  // Full mean Jacobian d mean(psi) / d eta.
  Eigen::MatrixXd jacobian() const {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(layout_.dim, layout_.dim);
    j.topLeftCorner(layout_.nuisance_dim, layout_.nuisance_dim) = nuisance_jacobian();
    for (int a : {kTreated, kControl})
      for (Eigen::Index k = 0; k < layout_.K; ++k) {
        const auto col = survival_column(a, k);
        const Eigen::Index r = layout_.surv[a] + k;
        j.row(r).head(layout_.nuisance_dim) = col.d_nuisance;
        j(r, r) = -col.c;
      }
    return j;
  }

 private:
  Eigen::RowVectorXd censor_row(Eigen::Index i, int arm) const {
    const Eigen::Index q = layout_.phi_dim[arm] - 1;
    Eigen::RowVectorXd z(q);
    z(0) = 1.0;
    if (q > 1) z.tail(q - 1) = data_.covariates().row(i);
    return z;
  }

  void precompute() {
    const std::size_t n = data_.n();
    const Eigen::Index p = static_cast<Eigen::Index>(data_.p());
    x_.resize(static_cast<Eigen::Index>(n), p + 1);
    x_.col(0).setOnes();
    x_.rightCols(p) = data_.covariates();

    e_.assign(n, 0.5);
    w_.assign(n, 1.0);
    dw_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), layout_.beta_dim);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const int a = data_.treatment()[i];
      if (spec_.weight_kind == WeightKind::uniform) continue;
      if (layout_.beta_dim > 0) e_[i] = logistic(x_.row(ii).dot(eta_.segment(layout_.beta, layout_.beta_dim)));
      else e_[i] = spec_.known_ps[i];
      const double e = e_[i];
      w_[i] = weight_for(spec_.weight_kind, a, e);
      if (layout_.beta_dim == 0) continue;
      double f = 0.0;  // dw/d(linear predictor)
      if (spec_.weight_kind == WeightKind::iptw) f = a == kTreated ? -(1.0 - e) / e : e / (1.0 - e);
      else f = a == kTreated ? -e * (1.0 - e) : e * (1.0 - e);
      dw_.row(ii) = f * x_.row(ii);
    }

    log_u_.assign(n, 0.0);
    lambda_u_.assign(n, 0.0);
    k_u_.assign(n, 1.0);
    floored_u_.assign(n, 0);
    for (int a : {kTreated, kControl}) {
      const Eigen::Index q = layout_.phi_dim[a];
      if (q == 0) continue;
      gamma_[a] = std::exp(eta_(layout_.phi[a]));
      theta_[a] = eta_.segment(layout_.phi[a] + 1, q - 1);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const int a = data_.treatment()[i];
      if (layout_.phi_dim[a] == 0) continue;
      const double u = data_.time()[i];
      if (!(u > 0.0)) throw DataError("sandwich variance requires positive observed times", i + 1);
      log_u_[i] = std::log(u);
      const double l = std::exp(gamma_[a] * log_u_[i] + censor_row(static_cast<Eigen::Index>(i), a).dot(theta_[a]));
      lambda_u_[i] = l;
      const double kv = std::exp(-l);
      floored_u_[i] = kv < spec_.floor;
      k_u_[i] = floored_u_[i] ? spec_.floor : kv;
    }
  }

  const SurvivalDataset& data_;
  StackedSpec spec_;
  Eigen::VectorXd eta_;
  StackedLayout layout_;
  Eigen::MatrixXd x_;
  std::vector<double> e_, w_;
  Eigen::MatrixXd dw_;
  double gamma_[2] = {1.0, 1.0};
  Eigen::VectorXd theta_[2];
  std::vector<double> log_u_, lambda_u_, k_u_;
  std::vector<std::uint8_t> floored_u_;
};

struct SandwichComponents {
  StackedLayout layout;
  Eigen::VectorXd eta;
  Eigen::MatrixXd bread;       // A = -mean d psi / d eta
  Eigen::MatrixXd meat;        // B = mean psi psi^T
  Eigen::MatrixXd covariance;  // A^-1 B A^-T / n
};

// Dense sandwich over the whole stacked vector. Size grows with the grid, so
// prefer sandwich_pointwise for long grids.
inline SandwichComponents sandwich_components(const StackedEquations& eq) {
  SandwichComponents sc;
  sc.layout = eq.layout();
  sc.eta = eq.parameters();
  const double n = static_cast<double>(eq.n());
  const Eigen::MatrixXd psi = eq.psi();
  sc.bread = -eq.jacobian();
  sc.meat = psi.transpose() * psi / n;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(sc.bread);
  if (!lu.isInvertible()) throw VarianceError("sandwich bread matrix is singular");
  const Eigen::MatrixXd a_inv = lu.inverse();
  sc.covariance = a_inv * sc.meat * a_inv.transpose() / n;
  return sc;
}

inline PointwiseVariance sandwich_pointwise(const StackedEquations& eq) {
  const StackedLayout& l = eq.layout();
  const Eigen::Index n = static_cast<Eigen::Index>(eq.n());
  const double nn = static_cast<double>(n);
  Eigen::MatrixXd influence_nuisance(n, l.nuisance_dim);
  if (l.nuisance_dim > 0) {
    const Eigen::MatrixXd a_nn = -eq.nuisance_jacobian();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a_nn);
    if (!lu.isInvertible()) throw VarianceError("sandwich bread matrix is singular (nuisance block)");
    influence_nuisance = lu.solve(eq.nuisance_psi().transpose()).transpose();
  }
  PointwiseVariance v;
  v.method = "sandwich";
  const auto K = static_cast<std::size_t>(l.K);
  v.s1.resize(K);
  v.s0.resize(K);
  v.delta.resize(K);
  v.cov_s1_s0.resize(K);
  for (Eigen::Index k = 0; k < l.K; ++k) {
    Eigen::VectorXd inf[2];
    for (int a : {kTreated, kControl}) {
      const auto col = eq.survival_column(a, k);
      if (!(col.c > 0.0)) throw VarianceError("sandwich bread matrix is singular (zero arm weight)");
      inf[a] = col.psi;
      if (l.nuisance_dim > 0) inf[a] += influence_nuisance * col.d_nuisance.transpose();
      inf[a] /= col.c;
    }
    const auto sk = static_cast<std::size_t>(k);
    v.s1[sk] = inf[kTreated].squaredNorm() / (nn * nn);
    v.s0[sk] = inf[kControl].squaredNorm() / (nn * nn);
    v.cov_s1_s0[sk] = inf[kTreated].dot(inf[kControl]) / (nn * nn);
    v.delta[sk] = std::max(0.0, v.s1[sk] + v.s0[sk] - 2.0 * v.cov_s1_s0[sk]);
  }
  return v;
}

// Builds the stacked system for a fitted scheme and its curve estimate.
inline StackedEquations stacked_equations(const SchemeAnalysis& an, const CurveEstimate& est) {
  StackedSpec spec;
  spec.weight_kind = an.scheme.target_kind();
  if (spec.weight_kind == WeightKind::matching)
    throw VarianceError("sandwich variance is not available for matching weights; use the bootstrap");
  if (an.scheme.trims() && !an.scheme.refit_after_trim)
    throw VarianceError("sandwich variance for trimming requires refitting after trimming; use the bootstrap");
  if (an.censoring == CensoringMethod::kaplan_meier)
    throw VarianceError("sandwich variance requires Weibull or no censoring model; use the bootstrap");
  spec.estimator = est.estimator_kind;
  spec.times = est.grid.times();
  spec.censoring_modeled = an.censoring == CensoringMethod::weibull;
  spec.ps_estimated = spec.weight_kind != WeightKind::uniform;
  const Eigen::VectorXd* beta = nullptr;
  if (spec.ps_estimated) {
    if (!an.ps) throw UsageError("sandwich variance needs the propensity fit behind the weights");
    if (!an.ps->converged) throw UsageError("sandwich variance needs a converged propensity fit");
    beta = &an.ps->beta;
  }
  const WeibullCensoringFit* fits[2] = {nullptr, nullptr};
  if (spec.censoring_modeled) {
    for (int a : {kTreated, kControl}) {
      const auto& m = a == kTreated ? an.censor_1 : an.censor_0;
      fits[a] = std::get_if<WeibullCensoringFit>(&m);
      if (!fits[a]) throw UsageError("sandwich variance: censoring model is not a Weibull fit");
      if (!fits[a]->converged) throw UsageError("sandwich variance needs converged censoring fits");
      spec.censor_covariates[a] = fits[a]->covariates_used;
    }
  }
  spec.floor = kDefaultCensoringFloor;
  Eigen::VectorXd eta = pack_parameters(spec, an.data.p(), beta, fits[kTreated], fits[kControl], est.s1, est.s0);
  return StackedEquations(an.data, std::move(spec), std::move(eta));
}

inline PointwiseVariance sandwich_variance(const SchemeAnalysis& an, const CurveEstimate& est) {
  return sandwich_pointwise(stacked_equations(an, est));
}

using BootstrapSpec = AnalysisSpec;

struct BootstrapResult {
  std::vector<PointwiseVariance> variances;  // one per spec
  std::vector<std::size_t> failures;         // failed resamples per spec
  std::size_t replicates = 0;
};

inline constexpr double kMaxBootstrapFailureRate = 0.10;

// B row resamples, each refitting PS, censoring models and weights. Replicate b
// draws from stream (seed, b), so results do not depend on `threads`.
inline BootstrapResult bootstrap_variance(const SurvivalDataset& data, std::span<const BootstrapSpec> specs,
                                          const TimeGrid& grid, int replicates, std::uint64_t seed,
                                          const PipelineOptions& opt = {}, unsigned threads = 0) {
  if (replicates < 50) throw UsageError("bootstrap needs at least 50 replicates");
  if (specs.empty()) throw UsageError("bootstrap needs at least one scheme");
  const std::size_t B = static_cast<std::size_t>(replicates), S = specs.size(), K = grid.size();
  bool needs_ps = false;
  for (const auto& s : specs) needs_ps = needs_ps || s.scheme.kind != WeightKind::uniform;

  // draws[b][s] holds (s1, s0) over the grid; empty when the resample failed.
  std::vector<std::vector<std::vector<double>>> draws(B, std::vector<std::vector<double>>(S));
  parallel_for(B, threads, [&](std::size_t b) {
    RandomStream rng(seed, b, StreamDomain::bootstrap);
    std::vector<std::size_t> rows(data.n());
    for (auto& r : rows) r = static_cast<std::size_t>(rng.below(data.n()));
    try {
      const SurvivalDataset rs = data.subset(rows);
      const NuisanceFits base = fit_nuisance(rs, opt, needs_ps);
      for (std::size_t s = 0; s < S; ++s) {
        try {
          const SchemeAnalysis an = analyze_scheme(rs, specs[s].scheme, base, opt);
          const CurveEstimate est = estimate_curve(an, specs[s].estimator, grid, opt.censoring_floor);
          auto& out = draws[b][s];
          out.reserve(2 * K);
          out.insert(out.end(), est.s1.begin(), est.s1.end());
          out.insert(out.end(), est.s0.begin(), est.s0.end());
        } catch (const Error&) {
        }
      }
    } catch (const Error&) {
    }
  });

  BootstrapResult res;
  res.replicates = B;
  for (std::size_t s = 0; s < S; ++s) {
    std::vector<const std::vector<double>*> ok;
    for (std::size_t b = 0; b < B; ++b)
      if (!draws[b][s].empty()) ok.push_back(&draws[b][s]);
    const std::size_t failed = B - ok.size();
    res.failures.push_back(failed);
    if (static_cast<double>(failed) > kMaxBootstrapFailureRate * static_cast<double>(B) || ok.size() < 2)
      throw VarianceError("bootstrap failure rate " + std::to_string(failed) + "/" + std::to_string(B) +
                          " exceeds 10% for scheme " + specs[s].scheme.label());
    PointwiseVariance v;
    v.method = "bootstrap";
    v.s1.resize(K);
    v.s0.resize(K);
    v.delta.resize(K);
    v.cov_s1_s0.resize(K);
    const double m = static_cast<double>(ok.size());
    for (std::size_t k = 0; k < K; ++k) {
      double mean1 = 0.0, mean0 = 0.0;
      for (const auto* d : ok) {
        mean1 += (*d)[k];
        mean0 += (*d)[K + k];
      }
      mean1 /= m;
      mean0 /= m;
      double v1 = 0.0, v0 = 0.0, c = 0.0, vd = 0.0;
      const double md = mean1 - mean0;
      for (const auto* d : ok) {
        const double a = (*d)[k] - mean1, z = (*d)[K + k] - mean0;
        const double dd = (*d)[k] - (*d)[K + k] - md;
        v1 += a * a;
        v0 += z * z;
        c += a * z;
        vd += dd * dd;
      }
      v.s1[k] = v1 / (m - 1.0);
      v.s0[k] = v0 / (m - 1.0);
      v.cov_s1_s0[k] = c / (m - 1.0);
      v.delta[k] = vd / (m - 1.0);
    }
    res.variances.push_back(std::move(v));
  }
  return res;
}

inline PointwiseVariance bootstrap_variance(const SurvivalDataset& data, const WeightScheme& scheme,
                                            EstimatorKind estimator, const TimeGrid& grid, int replicates,
                                            std::uint64_t seed, const PipelineOptions& opt = {},
                                            unsigned threads = 0) {
  const BootstrapSpec spec{scheme, estimator};
  return bootstrap_variance(data, std::span<const BootstrapSpec>(&spec, 1), grid, replicates, seed, opt, threads)
      .variances.front();
}

}  // namespace owsurv
