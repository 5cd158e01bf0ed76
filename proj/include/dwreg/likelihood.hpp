#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dwreg/distribution.hpp"

namespace dwreg {

// Evaluated per-observation parameters on the rate scale, c = -log q.
struct LinkValues {
  Eigen::ArrayXd c;
  Eigen::ArrayXd beta;
};

// c_i = exp(A_q.row(i) * theta), beta_i = exp(A_b.row(i) * vartheta).
// Throws std::overflow_error naming the first offending row when a linear
// predictor is non-finite.
LinkValues link_eval(const Eigen::MatrixXd& design_q,
                     const Eigen::MatrixXd& design_b,
                     const Eigen::VectorXd& theta,
                     const Eigen::VectorXd& vartheta);

// Same link, reported on the (q, beta) scale. q saturates to 1.0 in double
// precision for strongly negative predictors; regression internals therefore
// stay on the rate scale and only user-facing reports convert.
std::vector<DWParams> link_params(const Eigen::MatrixXd& design_q,
                                  const Eigen::MatrixXd& design_b,
                                  const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& vartheta);

// Negative log-likelihood of the regression model, with analytic gradient in
// the stacked coefficient vector w = [theta; vartheta]. Returns +inf when
// any observation has zero probability (the line search backs away from such
// regions). The parallel kernel accumulates fixed-size chunks that are
// reduced in index order, so results are identical for any thread count; the
// _serial variants are the plain reference loops kept for testing and
// benchmarks.
class DwNegLoglik {
 public:
  DwNegLoglik(const Eigen::VectorXd& y, const Eigen::MatrixXd& design_q,
              const Eigen::MatrixXd& design_b);

  Eigen::Index dim() const { return kq_ + kb_; }
  Eigen::Index dim_q() const { return kq_; }
  Eigen::Index dim_b() const { return kb_; }
  Eigen::Index rows() const { return y_.size(); }

  double value(const Eigen::VectorXd& w) const;
  double value_and_grad(const Eigen::VectorXd& w, Eigen::VectorXd& grad) const;
  double value_serial(const Eigen::VectorXd& w) const;
  double value_and_grad_serial(const Eigen::VectorXd& w,
                               Eigen::VectorXd& grad) const;

  // Finite-difference gradients of value(); reference implementations used
  // to cross-check the analytic gradient. `fd_gradient` is the plain central
  // difference with step eps^(1/3) * max(1, |w_j|); `fd_gradient_highorder`
  // is the five-point fourth-order stencil.
  Eigen::VectorXd fd_gradient(const Eigen::VectorXd& w) const;
  Eigen::VectorXd fd_gradient_highorder(const Eigen::VectorXd& w) const;

 private:
  double eval(const Eigen::VectorXd& w, Eigen::VectorXd* grad,
              bool parallel) const;

  Eigen::VectorXd y_;
  Eigen::MatrixXd aq_;
  Eigen::MatrixXd ab_;
  Eigen::Index kq_ = 0;
  Eigen::Index kb_ = 0;
};

// Convenience wrappers matching the two kernels above.
double neg_loglik(const Eigen::VectorXd& y, const Eigen::MatrixXd& design_q,
                  const Eigen::MatrixXd& design_b,
                  const Eigen::VectorXd& theta,
                  const Eigen::VectorXd& vartheta);
double neg_loglik_serial(const Eigen::VectorXd& y,
                         const Eigen::MatrixXd& design_q,
                         const Eigen::MatrixXd& design_b,
                         const Eigen::VectorXd& theta,
                         const Eigen::VectorXd& vartheta);

namespace detail {

// Log-density and score of one observation on the internal scale
// (eta = log c, zeta = log beta).
struct RowScore {
  double logp;
  double dl_deta;
  double dl_dzeta;
};
RowScore dw_row_score(double y, double eta, double zeta);

}  // namespace detail

}  // namespace dwreg
