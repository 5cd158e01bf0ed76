#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "dwreg/dataset.hpp"
#include "dwreg/model.hpp"
#include "dwreg/optimizer.hpp"

namespace dwreg {

struct FitOptions {
  // Number of optimizer starts; start 0 uses the deterministic initial
  // point, later starts jitter it uniformly on (-0.5, 0.5) per coordinate.
  int starts = 3;
  std::uint64_t seed = 0;
  // Min-max scale continuous covariates to [0, 1] before fitting; the
  // ranges are stored in the model and replayed on prediction data.
  bool scale_covariates = false;
  // Freeze the shape coefficients at their initial values (see init_b);
  // with an intercept-only shape term and fixed_log_beta = 0 this fits a
  // geometric model.
  bool fix_beta = false;
  double fixed_log_beta = 0.0;
  bool compute_covariance = true;
  // Warm-start values by column label, used by stepwise search.
  std::map<std::string, double> init_q;
  std::map<std::string, double> init_b;
  OptimOptions optim;
};

// Maximum likelihood fit. Linearly dependent design columns are dropped
// (coefficient pinned at zero, label recorded in `aliased`); failure to
// converge is reported through the `converged` flag rather than an error.
FittedModel fit(const Dataset& data, const ModelSpec& spec,
                const FitOptions& opts = {});

// Wald table from the stored covariance. Throws std::runtime_error when the
// fit carries no covariance.
std::vector<CoefficientSummary> standard_errors(const FittedModel& model);

// Replays a stored min-max scaling on (prediction) data. Columns absent
// from the record pass through unchanged.
Dataset apply_scaling(const Dataset& data, const ScalingRecord& record);

namespace detail {

// Greedy column-order rank screen: returns indices of an independent
// spanning subset, appending dropped (dependent) indices to `aliased`.
std::vector<Eigen::Index> independent_columns(
    const Eigen::MatrixXd& x, std::vector<Eigen::Index>* aliased);

}  // namespace detail

}  // namespace dwreg
