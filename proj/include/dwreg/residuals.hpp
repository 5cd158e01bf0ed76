#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dwreg/dataset.hpp"
#include "dwreg/model.hpp"

namespace dwreg {

// Randomized quantile residuals: r_i = Phi^-1(u_i) with u_i drawn uniformly
// from (cdf(y_i - 1), cdf(y_i)] under the fitted per-row distribution. Under
// a correctly specified model the residuals are standard normal. The
// randomization stream is owned by the call; identical (model, data, seed)
// produce identical residuals.
std::vector<double> randomized_quantile_residuals(const FittedModel& model,
                                                  const Dataset& data,
                                                  std::uint64_t seed);

struct NormalityReport {
  double ks_statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  // (standard normal quantile at (i - 0.5)/n, i-th order statistic)
  std::vector<std::array<double, 2>> qq;
};

// Kolmogorov-Smirnov test of the residuals against the standard normal with
// fully specified parameters, using the finite-sample scaling
// (sqrt(n) + 0.12 + 0.11/sqrt(n)) * D. Requires at least 8 residuals.
NormalityReport residual_normality(const std::vector<double>& residuals);

}  // namespace dwreg
