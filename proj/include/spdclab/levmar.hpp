#ifndef SPDCLAB_LEVMAR_HPP
#define SPDCLAB_LEVMAR_HPP

// Damped Gauss-Newton (Levenberg-Marquardt) for small weighted least-squares
// problems with analytic Jacobians.

#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>

#include "spdclab/core.hpp"

namespace spdclab::lm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Model evaluation: fills `model` (m) and `jacobian` (m x n) at `params`.
using ModelFn = std::function<void(const Vector& params, Vector& model, Matrix& jacobian)>;

struct Options {
  int max_iterations = 200;
  double relative_tolerance = 1e-12;
  double initial_lambda = 1e-3;
};

struct Result {
  Vector params;
  Matrix covariance;  // (J^T W J)^-1
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Minimizes sum_i w_i (y_i - f_i(p))^2.
inline Result solve(const ModelFn& fn, const Vector& y, const Vector& weights, Vector params,
                    const Options& opt = {}) {
  const auto m = y.size();
  const auto n = params.size();
  if (m < n) throw FitError("least squares: fewer data points than parameters");

  Vector model(m);
  Matrix jac(m, n);
  const auto chi2_of = [&](const Vector& mdl) { return (weights.array() * (y - mdl).array().square()).sum(); };

  fn(params, model, jac);
  double chi2 = chi2_of(model);
  double lambda = opt.initial_lambda;
  Result res;

  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it + 1;
    const Matrix jw = weights.asDiagonal() * jac;
    const Matrix jtj = jac.transpose() * jw;
    const Vector grad = jw.transpose() * (y - model);

    bool improved = false;
    for (int tries = 0; tries < 40; ++tries) {
      Matrix a = jtj;
      for (Eigen::Index k = 0; k < n; ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-300);
      const Vector step = a.ldlt().solve(grad);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Vector trial = params + step;
      Vector trial_model(m);
      Matrix trial_jac(m, n);
      fn(trial, trial_model, trial_jac);
      const double trial_chi2 = trial_model.allFinite() ? chi2_of(trial_model) : std::numeric_limits<double>::infinity();
      if (trial_chi2 <= chi2) {
        const double drop = chi2 - trial_chi2;
        const double step_rel = step.norm() / (params.norm() + 1e-300);
        params = trial;
        model = trial_model;
        jac = trial_jac;
        chi2 = trial_chi2;
        lambda = std::max(lambda * 0.3, 1e-15);
        improved = true;
        if (drop <= opt.relative_tolerance * (chi2 + 1e-300) || step_rel < opt.relative_tolerance) {
          res.converged = true;
        }
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) {
      // No downhill step at any damping: at a minimum to machine precision.
      res.converged = true;
    }
    if (res.converged) break;
  }

  const Matrix jw = weights.asDiagonal() * jac;
  const Matrix jtj = jac.transpose() * jw;
  res.params = params;
  res.covariance = jtj.ldlt().solve(Matrix::Identity(n, n));
  res.chi2 = chi2;
  return res;
}

}  // namespace spdclab::lm

#endif  // SPDCLAB_LEVMAR_HPP
