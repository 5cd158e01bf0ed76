#include "dwreg/likelihood.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dwreg {

namespace detail {

RowScore dw_row_score(double y, double eta, double zeta) {
  const double c = std::exp(eta);
  const double b = std::exp(zeta);
  const double t0 = pow_yb(y, b);
  const double gap = pow_gap(y, b, t0);
  const double d = -c * gap;
  const double head = t0 > 0.0 ? -c * t0 : 0.0;
  RowScore out{head + log1m_exp(d), 0.0, 0.0};
  if (!std::isfinite(out.logp)) return out;

  const double ed = std::exp(d);
  const double em = -std::expm1(d);  // 1 - e^d, strictly positive here
  const double t1 = t0 + gap;
  // t1 * e^d -> 0 as d -> -inf even when t1 overflows; short-circuit so the
  // inf * 0 corner never produces a NaN.
  const double t1ed = ed == 0.0 ? 0.0 : t1 * ed;
  const double u = (t1ed - t0) / em;
  out.dl_deta = u == 0.0 ? 0.0 : c * u;

  const double s0 = y > 0.0 ? t0 * std::log(y) : 0.0;
  const double s1ed = ed == 0.0 ? 0.0 : t1 * std::log(y + 1.0) * ed;
  const double v = (s1ed - s0) / em;
  out.dl_dzeta = v == 0.0 ? 0.0 : b * c * v;
  return out;
}

}  // namespace detail

LinkValues link_eval(const Eigen::MatrixXd& design_q,
                     const Eigen::MatrixXd& design_b,
                     const Eigen::VectorXd& theta,
                     const Eigen::VectorXd& vartheta) {
  LinkValues out;
  const Eigen::ArrayXd eta = (design_q * theta).array();
  const Eigen::ArrayXd zeta = (design_b * vartheta).array();
  out.c = eta.exp();
  out.beta = zeta.exp();
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const bool ok = std::isfinite(eta[i]) && std::isfinite(zeta[i]) &&
                    out.c[i] > 0.0 && std::isfinite(out.c[i]) &&
                    out.beta[i] > 0.0 && std::isfinite(out.beta[i]);
    if (!ok) {
      throw std::overflow_error(
          "link_eval: non-finite or degenerate parameter at row " +
          std::to_string(i));
    }
  }
  return out;
}

std::vector<DWParams> link_params(const Eigen::MatrixXd& design_q,
                                  const Eigen::MatrixXd& design_b,
                                  const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& vartheta) {
  const LinkValues lv = link_eval(design_q, design_b, theta, vartheta);
  std::vector<DWParams> out(static_cast<std::size_t>(lv.c.size()));
  for (Eigen::Index i = 0; i < lv.c.size(); ++i) {
    out[static_cast<std::size_t>(i)] = {std::exp(-lv.c[i]), lv.beta[i]};
  }
  return out;
}

DwNegLoglik::DwNegLoglik(const Eigen::VectorXd& y,
                         const Eigen::MatrixXd& design_q,
                         const Eigen::MatrixXd& design_b)
    : y_(y), aq_(design_q), ab_(design_b), kq_(design_q.cols()),
      kb_(design_b.cols()) {
  if (y_.size() != aq_.rows() || y_.size() != ab_.rows()) {
    throw std::invalid_argument(
        "DwNegLoglik: design row counts disagree with the response");
  }
}

double DwNegLoglik::eval(const Eigen::VectorXd& w, Eigen::VectorXd* grad,
                         bool parallel) const {
  const Eigen::ArrayXd eta = (aq_ * w.head(kq_)).array();
  const Eigen::ArrayXd zeta = (ab_ * w.tail(kb_)).array();
  const Eigen::Index n = y_.size();
  Eigen::ArrayXd u(grad ? n : 0);
  Eigen::ArrayXd v(grad ? n : 0);

  double ll = 0.0;
  bool bad = false;
  if (!parallel) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto s = detail::dw_row_score(y_[i], eta[i], zeta[i]);
      if (!std::isfinite(s.logp)) {
        bad = true;
        break;
      }
      ll += s.logp;
      if (grad) {
        u[i] = s.dl_deta;
        v[i] = s.dl_dzeta;
      }
    }
  } else {
    constexpr Eigen::Index kChunk = 1024;
    const Eigen::Index nchunks = (n + kChunk - 1) / kChunk;
    std::vector<double> partial(static_cast<std::size_t>(nchunks), 0.0);
    std::vector<char> chunk_bad(static_cast<std::size_t>(nchunks), 0);
#pragma omp parallel for schedule(static) if (n > 2 * kChunk)
    for (Eigen::Index ch = 0; ch < nchunks; ++ch) {
      const Eigen::Index lo = ch * kChunk;
      const Eigen::Index hi = std::min(n, lo + kChunk);
      double acc = 0.0;
      for (Eigen::Index i = lo; i < hi; ++i) {
        const auto s = detail::dw_row_score(y_[i], eta[i], zeta[i]);
        if (!std::isfinite(s.logp)) {
          chunk_bad[static_cast<std::size_t>(ch)] = 1;
          break;
        }
        acc += s.logp;
        if (grad) {
          u[i] = s.dl_deta;
          v[i] = s.dl_dzeta;
        }
      }
      partial[static_cast<std::size_t>(ch)] = acc;
    }
    for (Eigen::Index ch = 0; ch < nchunks; ++ch) {
      ll += partial[static_cast<std::size_t>(ch)];
      bad = bad || chunk_bad[static_cast<std::size_t>(ch)] != 0;
    }
  }

  if (bad) {
    if (grad) grad->setZero(dim());
    return std::numeric_limits<double>::infinity();
  }
  if (grad) {
    grad->resize(dim());
    grad->head(kq_) = -(aq_.transpose() * u.matrix());
    grad->tail(kb_) = -(ab_.transpose() * v.matrix());
  }
  return -ll;
}

double DwNegLoglik::value(const Eigen::VectorXd& w) const {
  return eval(w, nullptr, true);
}

double DwNegLoglik::value_and_grad(const Eigen::VectorXd& w,
                                   Eigen::VectorXd& grad) const {
  return eval(w, &grad, true);
}

double DwNegLoglik::value_serial(const Eigen::VectorXd& w) const {
  return eval(w, nullptr, false);
}

double DwNegLoglik::value_and_grad_serial(const Eigen::VectorXd& w,
                                          Eigen::VectorXd& grad) const {
  return eval(w, &grad, false);
}

Eigen::VectorXd DwNegLoglik::fd_gradient(const Eigen::VectorXd& w) const {
  const double root = std::cbrt(std::numeric_limits<double>::epsilon());
  Eigen::VectorXd g(dim());
  Eigen::VectorXd p = w;
  for (Eigen::Index j = 0; j < dim(); ++j) {
    const double h = root * std::max(1.0, std::abs(w[j]));
    p[j] = w[j] + h;
    const double fp = value(p);
    p[j] = w[j] - h;
    const double fm = value(p);
    p[j] = w[j];
    g[j] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Eigen::VectorXd DwNegLoglik::fd_gradient_highorder(
    const Eigen::VectorXd& w) const {
  const double root = std::pow(std::numeric_limits<double>::epsilon(), 0.2);
  Eigen::VectorXd g(dim());
  Eigen::VectorXd p = w;
  for (Eigen::Index j = 0; j < dim(); ++j) {
    const double h = root * std::max(1.0, std::abs(w[j]));
    p[j] = w[j] + 2.0 * h;
    const double f2p = value(p);
    p[j] = w[j] + h;
    const double f1p = value(p);
    p[j] = w[j] - h;
    const double f1m = value(p);
    p[j] = w[j] - 2.0 * h;
    const double f2m = value(p);
    p[j] = w[j];
    g[j] = (-f2p + 8.0 * f1p - 8.0 * f1m + f2m) / (12.0 * h);
  }
  return g;
}

namespace {

Eigen::VectorXd stack(const Eigen::VectorXd& theta,
                      const Eigen::VectorXd& vartheta) {
  Eigen::VectorXd w(theta.size() + vartheta.size());
  w << theta, vartheta;
  return w;
}

}  // namespace

double neg_loglik(const Eigen::VectorXd& y, const Eigen::MatrixXd& design_q,
                  const Eigen::MatrixXd& design_b,
                  const Eigen::VectorXd& theta,
                  const Eigen::VectorXd& vartheta) {
  return DwNegLoglik(y, design_q, design_b).value(stack(theta, vartheta));
}

double neg_loglik_serial(const Eigen::VectorXd& y,
                         const Eigen::MatrixXd& design_q,
                         const Eigen::MatrixXd& design_b,
                         const Eigen::VectorXd& theta,
                         const Eigen::VectorXd& vartheta) {
  return DwNegLoglik(y, design_q, design_b)
      .value_serial(stack(theta, vartheta));
}

}  // namespace dwreg
