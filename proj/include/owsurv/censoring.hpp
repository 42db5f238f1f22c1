#pragma once

// Per-arm censoring-score models K(t, x) = P(C >= t | X = x, A = a).
//
// The Weibull model is fitted by treating censoring (event == 0) as the
// event of interest and an observed failure as right-censoring of C at U.
// Parameters are (log gamma, theta) so Newton runs unconstrained.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "owsurv/core_data.hpp"
#include "owsurv/newton.hpp"

namespace owsurv {

inline constexpr double kDefaultCensoringFloor = 1e-6;

struct WeibullCensoringFit {
  int arm = kTreated;
  double log_gamma = 0.0;
  Eigen::VectorXd theta;  // intercept first, original covariate scale
  bool covariates_used = true;
  bool converged = false;
  int iterations = 0;
  double log_likelihood = 0.0;
  std::vector<double> trace;

  double gamma() const { return std::exp(log_gamma); }

  double linear_predictor(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    if (!covariates_used || theta.size() == 1) return theta(0);
    return theta(0) + x.dot(theta.tail(theta.size() - 1));
  }

  // Cumulative censoring hazard t^gamma * exp(theta' x).
  double cumulative_hazard(double t, const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    if (t <= 0.0) return 0.0;
    return std::exp(gamma() * std::log(t) + linear_predictor(x));
  }

  double survival(double t, const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    if (t < 0.0) throw UsageError("censoring score evaluated at negative time");
    if (t == 0.0) return 1.0;
    return std::exp(-cumulative_hazard(t, x));
  }
};

// Covariate-free product-limit estimate of P(C >= t), left-continuous: the
// product runs over censoring times strictly below t. At ties a failure is
// taken to precede a censoring, so failures at s leave the censoring risk set.
struct KaplanMeierCensoring {
  std::vector<double> jump_times;  // distinct censoring times
  std::vector<double> after;       // value of K on (jump_times[k], next]

  double survival(double t) const {
    if (t < 0.0) throw UsageError("censoring score evaluated at negative time");
    const auto k = std::lower_bound(jump_times.begin(), jump_times.end(), t) - jump_times.begin();
    return k == 0 ? 1.0 : after[static_cast<std::size_t>(k - 1)];
  }
};

// K identically 1 (no censoring adjustment).
struct NoCensoringModel {};

using CensoringModel = std::variant<NoCensoringModel, WeibullCensoringFit, KaplanMeierCensoring>;

inline bool is_weibull(const CensoringModel& m) { return std::holds_alternative<WeibullCensoringFit>(m); }

// Raw (unfloored) score of any censoring model.
inline double raw_censoring_score(const CensoringModel& model, double t,
                                  const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  if (t < 0.0) throw UsageError("censoring score evaluated at negative time");
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, NoCensoringModel>) return 1.0;
        else if constexpr (std::is_same_v<M, WeibullCensoringFit>) return m.survival(t, x);
        else return m.survival(t);
      },
      model);
}

// Evaluator bound to one fitted model. Values below the positivity floor are
// raised to it and counted; the counter is per evaluator, so create one per
// estimation task.
class CensoringScore {
 public:
  explicit CensoringScore(CensoringModel model, double floor = kDefaultCensoringFloor)
      : model_(std::move(model)), floor_(floor) {}

  double operator()(double t, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    const double raw = raw_censoring_score(model_, t, x);
    if (raw < floor_) {
      ++floor_count_;
      return floor_;
    }
    return raw;
  }

  // True when the value at (t, x) would be raised to the floor.
  bool floored(double t, const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    return raw_censoring_score(model_, t, x) < floor_;
  }

  const CensoringModel& model() const noexcept { return model_; }
  double floor() const noexcept { return floor_; }
  std::size_t floor_count() const noexcept { return floor_count_; }

 private:
  CensoringModel model_;
  double floor_;
  std::size_t floor_count_ = 0;
};

// Floored Weibull score at (t, x); increments `floor_count` when flooring.
inline double eval_censoring_score(const WeibullCensoringFit& fit, double t,
                                   const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                   std::size_t& floor_count, double floor = kDefaultCensoringFloor) {
  const double raw = fit.survival(t, x);
  if (raw < floor) {
    ++floor_count;
    return floor;
  }
  return raw;
}

struct WeibullOptions {
  bool use_covariates = true;
  NewtonOptions newton{};
};

inline WeibullCensoringFit fit_weibull_censoring(const SurvivalDataset& data, int arm,
                                                 const WeibullOptions& opt = {}) {
  const auto rows = data.arm_rows(arm);
  if (rows.empty()) throw DataError("arm " + std::to_string(arm) + " is empty");
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = opt.use_covariates ? static_cast<Eigen::Index>(data.p()) : 0;

  Eigen::MatrixXd cov(n, p);
  Eigen::VectorXd log_u(n), cens(n), u(n);
  double n_cens = 0.0, follow_up = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto i = rows[static_cast<std::size_t>(k)];
    if (data.time()[i] <= 0.0)
      throw DataError("censoring model requires positive observed times (row " + std::to_string(i + 1) + ")", i + 1);
    if (p > 0) cov.row(k) = data.covariates().row(static_cast<Eigen::Index>(i));
    u(k) = data.time()[i];
    log_u(k) = std::log(u(k));
    cens(k) = data.event()[i] == 0 ? 1.0 : 0.0;
    n_cens += cens(k);
    follow_up += u(k);
  }
  if (n_cens == 0.0)
    throw ModelError("no censored observations in arm " + std::to_string(arm) +
                     "; censoring distribution is not identifiable");

  const DesignMatrix design(cov);
  const Eigen::MatrixXd& x = design.standardized();
  const Eigen::Index d = x.cols();
  if (d > 1) {
    const auto bad = deficient_columns(x.transpose() * x, opt.newton.rank_tol);
    if (!bad.empty()) throw ModelError("censoring design is rank deficient in arm " + std::to_string(arm));
  }
  const double inv_n = 1.0 / static_cast<double>(n);

  // theta_full = (log gamma, theta_0, ..., theta_p)
  auto eval = [&](const Eigen::VectorXd& par) {
    Objective o;
    const double g = par(0);
    const double gamma = std::exp(g);
    const Eigen::VectorXd eta = x * par.tail(d);
    double ll = 0.0;
    double s_g = 0.0, h_gg = 0.0;
    Eigen::VectorXd lam(n), lam_glu(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double lu = log_u(k);
      const double glu = gamma * lu;
      const double l = std::exp(glu + eta(k));
      lam(k) = l;
      lam_glu(k) = l * glu;
      ll += cens(k) * (g + (gamma - 1.0) * lu + eta(k)) - l;
      s_g += cens(k) * (1.0 + glu) - l * glu;
      h_gg += cens(k) * glu - l * glu * (1.0 + glu);
    }
    const Eigen::VectorXd s_theta = x.transpose() * (cens - lam);
    const Eigen::VectorXd h_gt = -(x.transpose() * lam_glu);
    o.value = ll * inv_n;
    o.gradient.resize(d + 1);
    o.gradient(0) = s_g * inv_n;
    o.gradient.tail(d) = s_theta * inv_n;
    o.hessian.resize(d + 1, d + 1);
    o.hessian(0, 0) = h_gg * inv_n;
    o.hessian.block(1, 0, d, 1) = h_gt * inv_n;
    o.hessian.block(0, 1, 1, d) = (h_gt * inv_n).transpose();
    o.hessian.bottomRightCorner(d, d) = -(x.transpose() * lam.asDiagonal() * x) * inv_n;
    return o;
  };

  Eigen::VectorXd start = Eigen::VectorXd::Zero(d + 1);
  start(1) = std::log(n_cens / follow_up);
  NewtonResult nr = maximize_newton(eval, start, opt.newton);

  WeibullCensoringFit fit;
  fit.arm = arm;
  fit.log_gamma = nr.x(0);
  fit.covariates_used = opt.use_covariates;
  const Eigen::VectorXd theta = design.to_original(nr.x.tail(d));
  if (opt.use_covariates) {
    fit.theta = theta;
  } else {
    fit.theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(data.p()) + 1);
    fit.theta(0) = theta(0);
  }
  fit.converged = nr.converged;
  fit.iterations = nr.iterations;
  fit.log_likelihood = nr.value * static_cast<double>(n);
  fit.trace = std::move(nr.trace);
  if (!fit.converged) {
    std::vector<double> last(nr.x.data(), nr.x.data() + nr.x.size());
    throw ModelError("Weibull censoring fit did not converge in arm " + std::to_string(arm), std::move(last),
                     max_abs(nr.gradient));
  }
  return fit;
}

// Weighted product-limit estimate of the censoring distribution in one arm,
// ignoring covariates. `weights` (length n, optional) default to 1.
inline KaplanMeierCensoring fit_km_censoring(const SurvivalDataset& data, int arm,
                                             std::span<const double> weights = {}) {
  const auto rows = data.arm_rows(arm);
  if (rows.empty()) throw DataError("arm " + std::to_string(arm) + " is empty");
  if (!weights.empty() && weights.size() != data.n()) throw UsageError("fit_km_censoring: weight length mismatch");
  auto w = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };

  std::vector<std::size_t> order = rows;
  std::stable_sort(order.begin(), order.end(), [&](auto l, auto r) { return data.time()[l] < data.time()[r]; });
  std::vector<double> suffix(order.size() + 1, 0.0);
  for (std::size_t k = order.size(); k-- > 0;) suffix[k] = suffix[k + 1] + w(order[k]);

  KaplanMeierCensoring km;
  double k_value = 1.0;
  std::size_t pos = 0;
  while (pos < order.size()) {
    const double t = data.time()[order[pos]];
    double fail = 0.0, cens = 0.0;
    std::size_t end = pos;
    while (end < order.size() && data.time()[order[end]] == t) {
      const auto i = order[end];
      (data.event()[i] == 1 ? fail : cens) += w(i);
      ++end;
    }
    if (cens > 0.0) {
      const double risk = suffix[pos] - fail;
      k_value *= risk > 0.0 ? 1.0 - cens / risk : 0.0;
      km.jump_times.push_back(t);
      km.after.push_back(std::max(0.0, k_value));
    }
    pos = end;
  }
  return km;
}

}  // namespace owsurv
