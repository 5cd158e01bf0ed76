#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dwreg/dataset.hpp"

namespace dwreg {

// Truncated power expansion of one covariate:
//   x, x^2, ..., x^D, (x - g_1)_+^D, ..., (x - g_K)_+^D
// where (u)_+^D = u^D for u > 0 and 0 otherwise. The constant term is not
// part of the block; every design carries a single shared intercept.
struct CovariateSpec {
  std::string covariate;
  ColumnKind kind = ColumnKind::continuous;
  int degree = 1;
  int num_knots = 0;
  // Interior knot positions, strictly increasing. May be left empty with
  // num_knots > 0, in which case fitting places them at empirical quantiles
  // and stores the resolved values back into the model.
  std::vector<double> knots;
};

// Throws std::invalid_argument for inconsistent specs: negative degree or
// knot count, dummy covariates with degree > 1 or knots, knots attached to a
// degree-0 term, unsorted knots, or a knot list whose length disagrees with
// num_knots.
void validate(const CovariateSpec& spec);

bool knots_resolved(const CovariateSpec& spec);

// Empirical-quantile knot placement at levels j/(K+1), j = 1..K. Knots are
// strictly increasing and strictly inside the observed range; candidates that
// collide (heavily tied data) are nudged to midpoints of adjacent distinct
// values. Requires at least K+2 distinct values.
std::vector<double> place_knots(const std::vector<double>& x, int num_knots);

// Copy of `spec` with data-driven knots filled in.
CovariateSpec resolve_spec(const CovariateSpec& spec,
                           const std::vector<double>& x);

// n x (degree + num_knots) block for one covariate; requires resolved knots.
Eigen::MatrixXd basis_columns(const std::vector<double>& x,
                              const CovariateSpec& spec);
// Single-point version, used by prediction profiles.
std::vector<double> basis_row(double x, const CovariateSpec& spec);

// Labels for the block, e.g. {"x1", "x1^2", "x1.k1"}.
std::vector<std::string> basis_labels(const CovariateSpec& spec);

struct DesignMatrix {
  Eigen::MatrixXd X;                // n rows, 1 + sum(degree + knots) columns
  std::vector<std::string> labels;  // labels[0] == "(Intercept)"
};

// Assembles the full design: one intercept column, then the block of each
// spec in order. All specs must have resolved knots. When `check_kinds` is
// set the declared kind of every spec must match the dataset's kind (fit
// path); prediction paths skip the check because a covariate held constant
// in a profile can masquerade as binary.
DesignMatrix build_design(const Dataset& data,
                          const std::vector<CovariateSpec>& specs,
                          bool check_kinds = true);

}  // namespace dwreg
