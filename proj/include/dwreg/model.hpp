#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dwreg/basis.hpp"

namespace dwreg {

// Regression structure: one covariate expansion list per distribution
// parameter. The links are
//   log(-log q(x)) = A_q(x) theta      (Gumbel-type link keeps q in (0,1))
//   log beta(x)    = A_b(x) vartheta
// so both linear predictors live on the whole real line.
struct ModelSpec {
  std::vector<CovariateSpec> q_terms;
  std::vector<CovariateSpec> beta_terms;
};

void validate(const ModelSpec& spec);

// Min-max scaling applied to continuous covariates before fitting, recorded
// so that prediction can replay it on new data.
struct ScalingRecord {
  std::map<std::string, std::pair<double, double>> ranges;  // name -> (lo, hi)
};

// Per-covariate summaries of the training data, kept for extrapolation
// warnings on new data.
struct CovariateStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

struct FittedModel {
  ModelSpec spec;  // knots resolved
  std::vector<std::string> theta_labels;
  std::vector<std::string> vartheta_labels;
  Eigen::VectorXd theta;
  Eigen::VectorXd vartheta;

  // Joint covariance of (theta, vartheta), ordered theta first. Rows and
  // columns of aliased or fixed coefficients are zero.
  Eigen::MatrixXd covariance;
  bool covariance_available = false;
  // Set when the observed information was not positive definite and the
  // covariance was rebuilt from eigenvalue-floored curvature.
  bool covariance_floored = false;

  // Design columns dropped as linearly dependent, written "q:label" or
  // "beta:label"; their coefficients are pinned at zero.
  std::vector<std::string> aliased;

  double loglik = 0.0;
  double aic = 0.0;
  std::int64_t n = 0;
  int n_free_params = 0;
  bool converged = false;

  // Shape parameter pinned during fitting (geometric fits, diagnostics).
  bool beta_fixed = false;

  std::optional<ScalingRecord> scaling;
  std::map<std::string, CovariateStats> covariate_stats;
};

struct CoefficientSummary {
  std::string label;
  std::string link;  // "q" or "beta"
  double estimate = 0.0;
  double se = 0.0;
  double z = 0.0;
  double p_value = 0.0;
  bool aliased = false;
  bool fixed = false;
};

}  // namespace dwreg
