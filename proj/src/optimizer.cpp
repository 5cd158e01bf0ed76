#include "dwreg/optimizer.hpp"

#include <cmath>
#include <limits>

namespace dwreg {

namespace {

constexpr double kArmijoSlope = 1e-4;
constexpr int kMaxBacktracks = 60;

}  // namespace

OptimResult minimize_bfgs(const Objective& fg, const Eigen::VectorXd& x0,
                          const OptimOptions& opts) {
  const auto n = x0.size();
  OptimResult res;
  res.x = x0;
  res.grad.resize(n);
  res.fval = fg(res.x, res.grad);
  res.evaluations = 1;
  if (!std::isfinite(res.fval)) {
    return res;  // nothing sensible to do from an infeasible start
  }

  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd x_new(n), g_new(n), dir(n), s(n), yk(n);

  for (res.iterations = 0; res.iterations < opts.max_iters;
       ++res.iterations) {
    if (res.grad.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
      res.converged = true;
      return res;
    }

    dir = -(h * res.grad);
    double slope = dir.dot(res.grad);
    if (!(slope < 0.0) || !dir.allFinite()) {
      h.setIdentity();
      dir = -res.grad;
      slope = -res.grad.squaredNorm();
    }

    double alpha = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      x_new = res.x + alpha * dir;
      f_new = fg(x_new, g_new);
      ++res.evaluations;
      if (std::isfinite(f_new) &&
          f_new <= res.fval + kArmijoSlope * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // A fresh steepest-descent direction gets one more chance; if that is
      // already what we tried, the surface is flat beyond resolution.
      if (h.isIdentity(0.0)) return res;
      h.setIdentity();
      continue;
    }

    s = x_new - res.x;
    yk = g_new - res.grad;
    const double f_old = res.fval;
    res.x = x_new;
    res.fval = f_new;
    res.grad = g_new;

    if (std::abs(f_old - f_new) <
        opts.rel_tol * (std::abs(f_new) + 1.0)) {
      res.converged = true;
      return res;
    }

    const double sy = s.dot(yk);
    if (sy > 1e-10 * s.norm() * yk.norm()) {
      // Inverse BFGS update.
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h * yk;
      const double yhy = yk.dot(hy);
      h.noalias() -= rho * (hy * s.transpose() + s * hy.transpose());
      h.noalias() += rho * rho * yhy * (s * s.transpose());
      h.noalias() += rho * (s * s.transpose());
    }
  }
  return res;
}

}  // namespace dwreg
