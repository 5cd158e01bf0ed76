#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dwreg/basis.hpp"
#include "dwreg/dataset.hpp"

namespace dwreg {

// Count-model baselines used by the simulation benchmark. Both models share
// the design machinery of the main regression (including spline terms) and
// expose conditional quantiles through their cdfs, so quantile accuracy can
// be compared on equal footing.

struct PoissonModel {
  std::vector<CovariateSpec> terms;  // log-mean expansion
  std::vector<std::string> labels;
  Eigen::VectorXd gamma;
  double loglik = 0.0;
  double aic = 0.0;
  std::int64_t n = 0;
  bool converged = false;
};

PoissonModel fit_poisson(const Dataset& data,
                         const std::vector<CovariateSpec>& mean_terms);
std::vector<double> poisson_predict_mean(const PoissonModel& model,
                                         const Dataset& newdata);
// Smallest k with Poisson cdf(k) >= tau, cdf evaluated through the
// regularized incomplete gamma function.
std::int64_t poisson_quantile(double mu, double tau);

// Negative binomial with mean mu and variance mu + sigma * mu^2 (dispersion
// sigma > 0, r = 1/sigma), log links on both parameters.
struct NegBinModel {
  std::vector<CovariateSpec> mu_terms;
  std::vector<CovariateSpec> sigma_terms;
  std::vector<std::string> mu_labels;
  std::vector<std::string> sigma_labels;
  Eigen::VectorXd gamma;  // mu link
  Eigen::VectorXd delta;  // sigma link
  double loglik = 0.0;
  double aic = 0.0;
  std::int64_t n = 0;
  bool converged = false;
};

NegBinModel fit_negbin(const Dataset& data,
                       const std::vector<CovariateSpec>& mu_terms,
                       const std::vector<CovariateSpec>& sigma_terms,
                       std::uint64_t seed = 0);
struct NegBinRow {
  double mu;
  double sigma;
};
std::vector<NegBinRow> negbin_predict_params(const NegBinModel& model,
                                             const Dataset& newdata);
// Smallest k with NB cdf(k) >= tau, cdf evaluated through the regularized
// incomplete beta function.
std::int64_t negbin_quantile(double mu, double sigma, double tau);

// NB pmf by forward recurrence; the sampling and test-oracle route, kept
// separate from the incomplete-beta cdf above on purpose.
double negbin_pmf0(double mu, double sigma);
double negbin_pmf_step(double f_prev, std::int64_t k_prev, double mu,
                       double sigma);

}  // namespace dwreg
