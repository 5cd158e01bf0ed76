#include "dwreg/residuals.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <stdexcept>

#include "dwreg/distribution.hpp"
#include "dwreg/predict.hpp"
#include "dwreg/rng.hpp"

namespace dwreg {

namespace {

double normal_quantile(double p) {
  // Phi^-1 via erfc_inv keeps precision in the lower tail; callers pass the
  // complement when p > 1/2.
  return -boost::math::erfc_inv(2.0 * p) * std::sqrt(2.0);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Asymptotic Kolmogorov distribution tail Q(lambda) = P(D > lambda-ish),
// 2 * sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lambda^2).
double ks_tail(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    if (term < 1e-12) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace

std::vector<double> randomized_quantile_residuals(const FittedModel& model,
                                                  const Dataset& data,
                                                  std::uint64_t seed) {
  const ParamPrediction pp = predict_params(model, data);
  std::mt19937_64 gen(seed);
  std::vector<double> r(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double c = pp.c[i];
    const double beta = pp.beta[i];
    const double y = static_cast<double>(data.y[i]);
    const double u = uniform_open01(gen);
    // Survival just below y and the mass at y, both computed without ever
    // forming 1 - cdf: the residual u' = cdf(y-1) + u * pmf(y) has
    // complement s = S(y-1) - u * pmf(y), and whichever of the two is small
    // is the accurate one to invert.
    const double surv =
        data.y[i] == 0 ? 1.0 : std::exp(-c * detail::pow_yb(y, beta));
    const double mass = detail::pmf_rate(y, c, beta);
    const double s = surv - u * mass;
    if (s <= 0.5) {
      r[i] = -normal_quantile(std::max(s, 1e-300));
    } else {
      const double lower = detail::cdf_rate(y - 1.0, c, beta) + u * mass;
      r[i] = normal_quantile(std::max(lower, 1e-300));
    }
  }
  return r;
}

NormalityReport residual_normality(const std::vector<double>& residuals) {
  if (residuals.size() < 8) {
    throw std::invalid_argument(
        "residual_normality: need at least 8 residuals, have " +
        std::to_string(residuals.size()));
  }
  NormalityReport rep;
  rep.n = residuals.size();
  std::vector<double> sorted(residuals);
  std::sort(sorted.begin(), sorted.end());

  const double n = static_cast<double>(rep.n);
  double d = 0.0;
  rep.qq.resize(rep.n);
  for (std::size_t i = 0; i < rep.n; ++i) {
    const double fi = normal_cdf(sorted[i]);
    const double hi = static_cast<double>(i + 1) / n - fi;
    const double lo = fi - static_cast<double>(i) / n;
    d = std::max({d, hi, lo});
    rep.qq[i] = {normal_quantile((static_cast<double>(i) + 0.5) / n),
                 sorted[i]};
  }
  rep.ks_statistic = d;
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  rep.p_value = ks_tail(lambda);
  return rep;
}

}  // namespace dwreg
