#pragma once

#include <string>
#include <vector>

#include "dwreg/fit.hpp"

namespace dwreg {

struct SelectOptions {
  int max_degree = 3;
  int max_knots = 3;
  FitOptions fit;
};

struct StepRecord {
  // Human-readable move, e.g. "x1: (d=1,k=0) -> (d=2,k=0)"; the first record
  // is "initial".
  std::string move;
  double aic = 0.0;
  double loglik = 0.0;
  int n_params = 0;
  bool converged = false;
  bool accepted = false;
};

struct SelectionResult {
  FittedModel model;
  // All evaluated candidates in order; records with `accepted` form the
  // improvement path and their AICs decrease strictly.
  std::vector<StepRecord> trace;
};

// Greedy forward complexity search. The starting model carries every
// dataset covariate linearly in both links; each round tries, for every
// covariate listed in `expand`, raising its polynomial degree or adding one
// knot (the same expansion applied to both links), and keeps the candidate
// with the lowest AIC if it improves on the current model. Ties prefer
// fewer parameters, then earlier covariates. Candidate fits warm-start from
// the current coefficients.
SelectionResult stepwise_select(const Dataset& data,
                                const std::vector<std::string>& expand,
                                const SelectOptions& opts = {});

}  // namespace dwreg
