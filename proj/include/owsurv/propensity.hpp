#pragma once

// Logistic propensity-score model fitted by maximum likelihood.

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "owsurv/core_data.hpp"
#include "owsurv/newton.hpp"

namespace owsurv {

inline double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// log(1 + exp(eta)) without overflow.
inline double log1p_exp(double eta) {
  return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

struct PropensityFit {
  Eigen::VectorXd beta;  // intercept first, original covariate scale
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  bool separation_flag = false;
  double score_norm = 0.0;  // max-norm of the mean score at beta
  std::vector<double> fitted_ps;
  std::vector<double> trace;  // mean log-likelihood per accepted step
  std::vector<std::string> warnings;
};

inline std::vector<double> predict_ps(const PropensityFit& fit, const Eigen::MatrixXd& covariates) {
  if (covariates.cols() + 1 != fit.beta.size())
    throw UsageError("predict_ps: covariate matrix has " + std::to_string(covariates.cols()) +
                     " columns, model expects " + std::to_string(fit.beta.size() - 1));
  std::vector<double> out(static_cast<std::size_t>(covariates.rows()));
  for (Eigen::Index i = 0; i < covariates.rows(); ++i) {
    const double eta = fit.beta(0) + covariates.row(i).dot(fit.beta.tail(covariates.cols()));
    out[static_cast<std::size_t>(i)] = logistic(eta);
  }
  return out;
}

inline PropensityFit fit_logistic(const Eigen::MatrixXd& covariates, const std::vector<int>& treatment,
                                  const std::vector<std::string>& names = {},
                                  const NewtonOptions& opt = {}) {
  const DesignMatrix design(covariates);
  const Eigen::MatrixXd& x = design.standardized();
  const Eigen::Index n = x.rows(), d = x.cols();
  if (static_cast<std::size_t>(n) != treatment.size()) throw UsageError("fit_logistic: length mismatch");
  Eigen::VectorXd a(n);
  for (Eigen::Index i = 0; i < n; ++i) a(i) = treatment[static_cast<std::size_t>(i)];
  if (a.sum() == 0.0 || a.sum() == static_cast<double>(n))
    throw ModelError("propensity model needs both arms present");

  const auto bad = deficient_columns(x.transpose() * x, opt.rank_tol);
  if (!bad.empty()) {
    std::string cols;
    for (auto j : bad) {
      if (!cols.empty()) cols += ", ";
      cols += j == 0 ? std::string("(intercept)")
                     : (static_cast<std::size_t>(j - 1) < names.size() ? names[static_cast<std::size_t>(j - 1)]
                                                                       : "x" + std::to_string(j));
    }
    throw ModelError("propensity design is rank deficient; collinear columns: " + cols);
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  auto eval = [&](const Eigen::VectorXd& b) {
    Objective o;
    const Eigen::VectorXd eta = x * b;
    Eigen::VectorXd resid(n), w(n);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double e = logistic(eta(i));
      ll += a(i) * eta(i) - log1p_exp(eta(i));
      resid(i) = a(i) - e;
      w(i) = e * (1.0 - e);
    }
    o.value = ll * inv_n;
    o.gradient = x.transpose() * resid * inv_n;
    o.hessian = -(x.transpose() * w.asDiagonal() * x) * inv_n;
    return o;
  };

  Eigen::VectorXd start = Eigen::VectorXd::Zero(d);
  const double abar = a.mean();
  start(0) = std::log(abar / (1.0 - abar));
  NewtonResult nr = maximize_newton(eval, start, opt);

  PropensityFit fit;
  fit.beta = design.to_original(nr.x);
  fit.log_likelihood = nr.value * static_cast<double>(n);
  fit.iterations = nr.iterations;
  fit.converged = nr.converged;
  fit.score_norm = max_abs(nr.gradient);
  fit.trace = std::move(nr.trace);
  const Eigen::VectorXd eta = design.values() * fit.beta;
  const double max_eta = eta.cwiseAbs().maxCoeff();
  fit.separation_flag = max_eta > 30.0;
  fit.fitted_ps.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) fit.fitted_ps[static_cast<std::size_t>(i)] = logistic(eta(i));
  if (fit.separation_flag)
    fit.warnings.push_back("possible separation: max |linear predictor| = " + std::to_string(max_eta));
  if (!fit.converged) {
    if (!fit.separation_flag) {
      throw ModelError("logistic propensity fit did not converge after " + std::to_string(nr.iterations) +
                           " iterations (score norm " + std::to_string(fit.score_norm) + ")",
                       std::vector<double>(fit.beta.data(), fit.beta.data() + fit.beta.size()), fit.score_norm);
    }
    fit.warnings.push_back("logistic fit stopped without convergence under separation");
  }
  return fit;
}

inline PropensityFit fit_logistic(const SurvivalDataset& data, const NewtonOptions& opt = {}) {
  return fit_logistic(data.covariates(), data.treatment(), data.covariate_names(), opt);
}

}  // namespace owsurv
