#include "dwreg/baselines.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dwreg/optimizer.hpp"
#include "dwreg/rng.hpp"

namespace dwreg {

namespace {

Eigen::VectorXd response_vector(const Dataset& data) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(data.n()));
  for (std::size_t i = 0; i < data.n(); ++i) {
    y[static_cast<Eigen::Index>(i)] = static_cast<double>(data.y[i]);
  }
  return y;
}

// Smallest k with cdf(k) >= tau for a monotone discrete cdf.
template <class Cdf>
std::int64_t smallest_quantile(const Cdf& cdf, double tau) {
  if (!std::isfinite(tau) || !(tau > 0.0) || !(tau < 1.0)) {
    throw std::domain_error("quantile: tau must lie in (0, 1)");
  }
  if (cdf(0) >= tau) return 0;
  std::int64_t lo = 0;
  std::int64_t hi = 1;
  while (cdf(hi) < tau) {
    lo = hi;
    hi *= 2;
    if (hi > (std::int64_t{1} << 40)) {
      throw std::runtime_error("quantile: search bracket ran away");
    }
  }
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (cdf(mid) >= tau) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

// r * log(r / (r + mu)) without the inf * 0 corner at large r.
double r_log_p(double r, double mu) {
  const double ratio = mu / r;
  if (ratio < 1e-8) return -mu * (1.0 - 0.5 * ratio);
  return -r * std::log1p(ratio);
}

}  // namespace

PoissonModel fit_poisson(const Dataset& data,
                         const std::vector<CovariateSpec>& mean_terms) {
  std::vector<CovariateSpec> resolved;
  for (const auto& t : mean_terms) {
    resolved.push_back(resolve_spec(t, data.column(t.covariate)));
  }
  const DesignMatrix d = build_design(data, resolved);
  const Eigen::VectorXd y = response_vector(data);
  double lgam = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    lgam += std::lgamma(y[i] + 1.0);
  }

  const Objective obj = [&](const Eigen::VectorXd& g, Eigen::VectorXd& grad) {
    const Eigen::ArrayXd lp = (d.X * g).array();
    const Eigen::ArrayXd mu = lp.exp();
    if (!mu.allFinite()) {
      grad.setZero(g.size());
      return std::numeric_limits<double>::infinity();
    }
    grad = d.X.transpose() * (mu - y.array()).matrix();
    return (mu - y.array() * lp).sum() + lgam;
  };

  Eigen::VectorXd g0 = Eigen::VectorXd::Zero(d.X.cols());
  g0[0] = std::log(y.mean() + 1e-8);
  const OptimResult res = minimize_bfgs(obj, g0);

  PoissonModel model;
  model.terms = resolved;
  model.labels = d.labels;
  model.gamma = res.x;
  model.loglik = -res.fval;
  model.aic = 2.0 * res.fval + 2.0 * static_cast<double>(res.x.size());
  model.n = static_cast<std::int64_t>(data.n());
  model.converged = res.converged;
  return model;
}

std::vector<double> poisson_predict_mean(const PoissonModel& model,
                                         const Dataset& newdata) {
  const DesignMatrix d = build_design(newdata, model.terms, false);
  const Eigen::ArrayXd mu = (d.X * model.gamma).array().exp();
  return {mu.data(), mu.data() + mu.size()};
}

std::int64_t poisson_quantile(double mu, double tau) {
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw std::domain_error("poisson_quantile: mu must be positive");
  }
  return smallest_quantile(
      [mu](std::int64_t k) {
        return boost::math::gamma_q(static_cast<double>(k) + 1.0, mu);
      },
      tau);
}

NegBinModel fit_negbin(const Dataset& data,
                       const std::vector<CovariateSpec>& mu_terms,
                       const std::vector<CovariateSpec>& sigma_terms,
                       std::uint64_t seed) {
  std::vector<CovariateSpec> mu_resolved, sigma_resolved;
  for (const auto& t : mu_terms) {
    mu_resolved.push_back(resolve_spec(t, data.column(t.covariate)));
  }
  for (const auto& t : sigma_terms) {
    sigma_resolved.push_back(resolve_spec(t, data.column(t.covariate)));
  }
  const DesignMatrix dx = build_design(data, mu_resolved);
  const DesignMatrix dz = build_design(data, sigma_resolved);
  const Eigen::VectorXd y = response_vector(data);
  const Eigen::Index km = dx.X.cols();
  const Eigen::Index ks = dz.X.cols();
  const Eigen::Index n = y.size();

  const Objective obj = [&](const Eigen::VectorXd& w, Eigen::VectorXd& grad) {
    const Eigen::ArrayXd lp_mu = (dx.X * w.head(km)).array();
    const Eigen::ArrayXd lp_s = (dz.X * w.tail(ks)).array();
    Eigen::ArrayXd u(n), v(n);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = std::exp(lp_mu[i]);
      const double r = std::exp(-lp_s[i]);
      if (!std::isfinite(mu) || !std::isfinite(r) || mu <= 0.0 || r <= 0.0) {
        grad.setZero(w.size());
        return std::numeric_limits<double>::infinity();
      }
      const double yi = y[i];
      double a = 0.0;
      double da_dr = 0.0;
      if (yi < 1000.0) {
        // Integer responses make the gamma-function ratio a plain product;
        // this stays exact where lgamma differences would cancel.
        for (double j = 0.0; j < yi; j += 1.0) {
          a += std::log(r + j);
          da_dr += 1.0 / (r + j);
        }
      } else {
        a = std::lgamma(yi + r) - std::lgamma(r);
        da_dr = boost::math::digamma(yi + r) - boost::math::digamma(r);
      }
      const double lrm = std::log(r + mu);
      const double li = a - std::lgamma(yi + 1.0) + r_log_p(r, mu) +
                        yi * (lp_mu[i] - lrm);
      if (!std::isfinite(li)) {
        grad.setZero(w.size());
        return std::numeric_limits<double>::infinity();
      }
      ll += li;
      u[i] = yi - mu * (r + yi) / (r + mu);
      const double dldr = da_dr + std::log(r) - lrm + (mu - yi) / (r + mu);
      v[i] = -r * dldr;
    }
    grad.resize(w.size());
    grad.head(km) = -(dx.X.transpose() * u.matrix());
    grad.tail(ks) = -(dz.X.transpose() * v.matrix());
    return -ll;
  };

  // Mean part starts from the Poisson solution, dispersion from the method
  // of moments on the marginal.
  const PoissonModel pois = fit_poisson(data, mu_resolved);
  const double ybar = y.mean();
  const double s2 =
      (y.array() - ybar).square().sum() / std::max(1.0, static_cast<double>(n - 1));
  double sigma0 = 0.05;
  if (ybar > 0.0) {
    sigma0 = std::max(0.05, (s2 - ybar) / (ybar * ybar));
  }
  Eigen::VectorXd w0 = Eigen::VectorXd::Zero(km + ks);
  w0.head(km) = pois.gamma;
  w0[km] = std::log(sigma0);

  OptimResult best;
  bool have = false;
  for (int s = 0; s < 3; ++s) {
    Eigen::VectorXd start = w0;
    if (s > 0) {
      std::mt19937_64 gen(derive_seed(seed, 77 + static_cast<std::uint64_t>(s)));
      for (Eigen::Index j = 0; j < start.size(); ++j) {
        start[j] += uniform_open01(gen) - 0.5;
      }
    }
    OptimResult res = minimize_bfgs(obj, start);
    const bool better = !have || (res.converged && !best.converged) ||
                        (res.converged == best.converged &&
                         res.fval < best.fval);
    if (better) {
      best = std::move(res);
      have = true;
    }
  }

  NegBinModel model;
  model.mu_terms = mu_resolved;
  model.sigma_terms = sigma_resolved;
  model.mu_labels = dx.labels;
  model.sigma_labels = dz.labels;
  model.gamma = best.x.head(km);
  model.delta = best.x.tail(ks);
  model.loglik = -best.fval;
  model.aic = 2.0 * best.fval + 2.0 * static_cast<double>(km + ks);
  model.n = static_cast<std::int64_t>(data.n());
  model.converged = best.converged;
  return model;
}

std::vector<NegBinRow> negbin_predict_params(const NegBinModel& model,
                                             const Dataset& newdata) {
  const DesignMatrix dx = build_design(newdata, model.mu_terms, false);
  const DesignMatrix dz = build_design(newdata, model.sigma_terms, false);
  const Eigen::ArrayXd mu = (dx.X * model.gamma).array().exp();
  const Eigen::ArrayXd sigma = (dz.X * model.delta).array().exp();
  std::vector<NegBinRow> out(static_cast<std::size_t>(mu.size()));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    out[i] = {mu[idx], sigma[idx]};
  }
  return out;
}

std::int64_t negbin_quantile(double mu, double sigma, double tau) {
  if (!(mu > 0.0) || !(sigma > 0.0) || !std::isfinite(mu) ||
      !std::isfinite(sigma)) {
    throw std::domain_error("negbin_quantile: mu and sigma must be positive");
  }
  const double r = 1.0 / sigma;
  const double p = r / (r + mu);
  return smallest_quantile(
      [r, p](std::int64_t k) {
        return boost::math::ibeta(r, static_cast<double>(k) + 1.0, p);
      },
      tau);
}

double negbin_pmf0(double mu, double sigma) {
  const double r = 1.0 / sigma;
  return std::exp(r_log_p(r, mu));
}

double negbin_pmf_step(double f_prev, std::int64_t k_prev, double mu,
                       double sigma) {
  const double r = 1.0 / sigma;
  const double k = static_cast<double>(k_prev);
  return f_prev * (k + r) / (k + 1.0) * (mu / (r + mu));
}

}  // namespace dwreg
