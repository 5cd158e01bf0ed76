#pragma once

#include <string>
#include <vector>

#include "dwreg/dataset.hpp"
#include "dwreg/distribution.hpp"
#include "dwreg/model.hpp"

namespace dwreg {

// Per-row fitted parameters on new data. Stored scaling is replayed first.
// `extrapolated` marks rows with any model covariate outside the training
// range; values are still computed. The rate c = -log q is reported
// alongside q because q itself saturates to 1.0 in double precision for
// strongly negative q-link predictors.
struct ParamPrediction {
  std::vector<DWParams> params;
  std::vector<double> c;
  std::vector<double> beta;
  std::vector<bool> extrapolated;
};
ParamPrediction predict_params(const FittedModel& model,
                               const Dataset& newdata);

struct QuantilePrediction {
  std::vector<std::int64_t> value;
  std::vector<double> continuous;
  std::vector<bool> extrapolated;
};
// Conditional tau-quantile per row; `continuous` is the real-valued solution
// before the ceiling to the integer grid.
QuantilePrediction predict_quantile(const FittedModel& model,
                                    const Dataset& newdata, double tau);
std::vector<std::int64_t> predict_median(const FittedModel& model,
                                         const Dataset& newdata);
std::vector<double> predict_mean(const FittedModel& model,
                                 const Dataset& newdata,
                                 const MomentOptions& opts = {});

// Quantile partial effects: change of the continuous tau-quantile when one
// covariate moves +1 unit (dummies: 0 -> 1) from a baseline profile holding
// continuous covariates at their sample means and dummies at zero. Standard
// errors are delta-method approximations from the coefficient covariance
// (finite-difference gradient of the effect); they ignore the ceiling to
// integers and are flagged approximate.
struct EffectTable {
  std::vector<double> taus;
  std::vector<std::string> covariates;
  // covariates x taus
  Eigen::MatrixXd effect;
  Eigen::MatrixXd se;
  std::vector<std::vector<bool>> significant;  // |effect| > 1.96 se
  bool has_se = false;
};
EffectTable partial_effects(const FittedModel& model, const Dataset& data,
                            const std::vector<double>& taus);

// Closed-form reading of the coefficients, available when beta is constant
// (intercept-only shape term) and every q-link term is linear: the log of
// (median + 1) at the baseline is (log(log 2) - theta_0) / beta and each
// unit step in covariate p shifts it by -theta_p / beta.
struct Interpretation {
  bool applicable = false;
  std::string note;
  double baseline_log_median1 = 0.0;
  std::vector<std::pair<std::string, double>> unit_shifts;
};
Interpretation interpret_coefficients(const FittedModel& model);

}  // namespace dwreg
