#pragma once

// Shared test fixtures: random datasets and brute-force likelihood oracles.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "owsurv/owsurv.hpp"

namespace owsurv::fixture {

struct RandomDataOptions {
  std::size_t n = 400;
  std::size_t p = 3;             // first p-1 normal, last binary (p >= 1)
  double ps_strength = 0.6;
  double censor_intercept = -2.0;  // exponential censoring, log rate
  bool censored = true;
  bool ties = false;               // round times to create ties
};

// Weibull outcomes, logistic treatment, covariate-dependent exponential censoring.
inline SurvivalDataset random_dataset(std::uint64_t seed, const RandomDataOptions& o = {}) {
  RandomStream rng(seed, 0, StreamDomain::test);
  const auto n = static_cast<Eigen::Index>(o.n), p = static_cast<Eigen::Index>(o.p);
  for (int attempt = 0;; ++attempt) {
    Eigen::MatrixXd x(n, p);
    std::vector<int> a(o.n), d(o.n);
    std::vector<double> u(o.n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double lp = -0.1, lt = -1.0, lc = o.censor_intercept;
      for (Eigen::Index j = 0; j < p; ++j) {
        const double v = j + 1 == p && p > 1 ? (rng.bernoulli(0.5) ? 1.0 : 0.0) : rng.normal();
        x(i, j) = v;
        lp += o.ps_strength * (j % 2 ? -1.0 : 1.0) * v;
        lt += 0.3 * v;
        lc += (j % 2 ? 0.2 : -0.3) * v;
      }
      const auto si = static_cast<std::size_t>(i);
      a[si] = rng.uniform() < logistic(lp) ? 1 : 0;
      const double t = std::pow(-std::log(rng.uniform()) / std::exp(lt - 0.4 * a[si]), 1.0 / 1.2);
      const double c = o.censored ? -std::log(rng.uniform()) / std::exp(lc) : std::numeric_limits<double>::infinity();
      u[si] = std::min(t, c);
      if (o.ties) u[si] = std::max(0.1, std::round(u[si] * 4.0) / 4.0);
      d[si] = t <= c ? 1 : 0;
    }
    try {
      return SurvivalDataset(std::move(x), std::move(a), std::move(u), std::move(d));
    } catch (const DataError&) {
      if (attempt > 10) throw;
    }
  }
}

inline SurvivalDataset make_dataset(std::vector<std::vector<double>> cov, std::vector<int> a, std::vector<double> u,
                                    std::vector<int> d) {
  const auto n = static_cast<Eigen::Index>(a.size());
  const auto p = cov.empty() ? Eigen::Index{0} : static_cast<Eigen::Index>(cov.front().size());
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return SurvivalDataset(std::move(x), std::move(a), std::move(u), std::move(d));
}

// Maximizes f over a box by repeated grid refinement around the incumbent.
// Slow but assumption-free for low dimensions.
inline Eigen::VectorXd grid_maximize(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd center,
                                     double half_width, int points = 11, int rounds = 40) {
  const Eigen::Index d = center.size();
  double best = f(center);
  for (int r = 0; r < rounds; ++r) {
    Eigen::VectorXd incumbent = center;
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    for (;;) {
      Eigen::VectorXd cand(d);
      for (Eigen::Index j = 0; j < d; ++j)
        cand(j) = center(j) - half_width + 2.0 * half_width * idx[static_cast<std::size_t>(j)] / (points - 1);
      const double v = f(cand);
      if (v > best) {
        best = v;
        incumbent = cand;
      }
      Eigen::Index j = 0;
      while (j < d && ++idx[static_cast<std::size_t>(j)] == points) idx[static_cast<std::size_t>(j++)] = 0;
      if (j == d) break;
    }
    center = incumbent;
    half_width *= 0.5;
  }
  return center;
}

inline double logistic_loglik(const SurvivalDataset& data, const Eigen::VectorXd& b) {
  double ll = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    double eta = b(0);
    for (std::size_t j = 0; j < data.p(); ++j)
      eta += b(static_cast<Eigen::Index>(j + 1)) *
             data.covariates()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    ll += data.treatment()[i] * eta - std::log1p(std::exp(eta));
  }
  return ll;
}

// Censoring log-likelihood in one arm; par = (log gamma, theta_0, theta_1..).
inline double weibull_censoring_loglik(const SurvivalDataset& data, int arm, const Eigen::VectorXd& par) {
  const double g = std::exp(par(0));
  double ll = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (data.treatment()[i] != arm) continue;
    double eta = par(1);
    for (Eigen::Index j = 2; j < par.size(); ++j)
      eta += par(j) * data.covariates()(static_cast<Eigen::Index>(i), j - 2);
    const double lu = std::log(data.time()[i]);
    const double c = data.event()[i] == 0 ? 1.0 : 0.0;
    ll += c * (par(0) + (g - 1.0) * lu + eta) - std::exp(g * lu + eta);
  }
  return ll;
}

// Central finite-difference Jacobian of the mean stacked estimating function.
inline Eigen::MatrixXd fd_jacobian(const SurvivalDataset& data, const StackedSpec& spec, const Eigen::VectorXd& eta) {
  const Eigen::Index dim = eta.size();
  Eigen::MatrixXd j(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    const double h = 1e-5 * std::max(1.0, std::abs(eta(c)));
    Eigen::VectorXd up = eta, dn = eta;
    up(c) += h;
    dn(c) -= h;
    const Eigen::VectorXd fu = StackedEquations(data, spec, up).psi().colwise().mean().transpose();
    const Eigen::VectorXd fd = StackedEquations(data, spec, dn).psi().colwise().mean().transpose();
    j.col(c) = (fu - fd) / (2.0 * h);
  }
  return j;
}

// Worst relative gap between analytic and finite-difference Jacobians,
// measured per column against the column's largest entry.
inline double jacobian_gap(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& fd) {
  double worst = 0.0;
  for (Eigen::Index c = 0; c < analytic.cols(); ++c) {
    const double scale = std::max(analytic.col(c).cwiseAbs().maxCoeff(), 1e-8);
    worst = std::max(worst, (analytic.col(c) - fd.col(c)).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

}  // namespace owsurv::fixture
