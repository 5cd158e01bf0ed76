#pragma once

#include <Eigen/Dense>
#include <functional>

namespace dwreg {

struct OptimOptions {
  int max_iters = 500;
  // Stop when the gradient infinity norm falls below grad_tol, or when an
  // accepted step changes the objective by less than rel_tol relatively.
  double grad_tol = 1e-6;
  double rel_tol = 1e-10;
};

struct OptimResult {
  Eigen::VectorXd x;
  double fval = 0.0;
  Eigen::VectorXd grad;
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
};

// Objective callback: returns f(x) and fills the gradient. May return +inf
// outside the effective domain; such points are rejected by the line search.
using Objective =
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// BFGS quasi-Newton minimizer with backtracking Armijo line search. The
// inverse Hessian approximation is reset to identity whenever the search
// direction loses descent or the line search stalls.
OptimResult minimize_bfgs(const Objective& fg, const Eigen::VectorXd& x0,
                          const OptimOptions& opts = {});

}  // namespace dwreg
