#pragma once

// Damped Newton-Raphson maximizer for smooth concave-ish objectives with an
// analytic gradient and Hessian. Shared by the logistic and Weibull fitters.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "owsurv/error.hpp"

namespace owsurv {

struct NewtonOptions {
  double score_tol = 1e-8;  // max-norm of the gradient
  double step_tol = 1e-8;   // max-norm of the Newton step
  int max_iterations = 100;
  int max_halvings = 20;
  double rank_tol = 1e-10;  // relative pivot threshold for rank detection
};

struct Objective {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

struct NewtonResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // objective after every accepted step
};

inline double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Column indices that a pivoted QR of `m` puts past its numerical rank.
inline std::vector<Eigen::Index> deficient_columns(const Eigen::MatrixXd& m, double rel_tol) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(rel_tol);
  std::vector<Eigen::Index> out;
  const auto perm = qr.colsPermutation().indices();
  for (Eigen::Index k = qr.rank(); k < m.cols(); ++k) out.push_back(perm(k));
  return out;
}

// `eval(x)` returns the objective with derivatives. Maximizes from `x0`.
// Steps are halved until the objective does not decrease; an indefinite
// Hessian falls back to a Levenberg-damped direction.
template <class Eval>
NewtonResult maximize_newton(Eval&& eval, Eigen::VectorXd x0, const NewtonOptions& opt = {}) {
  NewtonResult res;
  res.x = std::move(x0);
  Objective cur = eval(res.x);
  if (!std::isfinite(cur.value)) throw ModelError("objective is not finite at the starting point");
  res.trace.push_back(cur.value);
  const Eigen::Index dim = res.x.size();

  for (int it = 1; it <= opt.max_iterations; ++it) {
    res.iterations = it;
    const Eigen::MatrixXd neg_h = -cur.hessian;
    Eigen::VectorXd step;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(neg_h);
    bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive();
    if (ok) {
      step = ldlt.solve(cur.gradient);
      ok = step.allFinite() && (step.dot(cur.gradient) > 0.0 || max_abs(cur.gradient) == 0.0);
    }
    if (!ok) {
      double mu = 1e-6 * std::max(1.0, neg_h.diagonal().cwiseAbs().maxCoeff());
      for (int k = 0; k < 60 && !ok; ++k, mu *= 10.0) {
        Eigen::MatrixXd damped = neg_h + mu * Eigen::MatrixXd::Identity(dim, dim);
        Eigen::LLT<Eigen::MatrixXd> llt(damped);
        if (llt.info() != Eigen::Success) continue;
        step = llt.solve(cur.gradient);
        ok = step.allFinite();
      }
      if (!ok) step = cur.gradient;
    }

    if (max_abs(cur.gradient) <= opt.score_tol && max_abs(step) <= opt.step_tol) {
      res.converged = true;
      break;
    }

    double scale = 1.0;
    Objective next;
    bool accepted = false;
    const double slack = 1e-13 * (1.0 + std::abs(cur.value));
    for (int h = 0; h <= opt.max_halvings; ++h, scale *= 0.5) {
      Eigen::VectorXd cand = res.x + scale * step;
      next = eval(cand);
      if (std::isfinite(next.value) && next.value >= cur.value - slack) {
        res.x = std::move(cand);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No ascent along the direction: we are at the numerical optimum if
      // the gradient is already small, otherwise stall.
      res.converged = max_abs(cur.gradient) <= opt.score_tol;
      break;
    }
    const bool tiny = max_abs(scale * step) <= opt.step_tol;
    cur = std::move(next);
    res.trace.push_back(cur.value);
    if (tiny && max_abs(cur.gradient) <= opt.score_tol) {
      res.converged = true;
      break;
    }
  }
  res.value = cur.value;
  res.gradient = cur.gradient;
  res.hessian = cur.hessian;
  return res;
}

}  // namespace owsurv
