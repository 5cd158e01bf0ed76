#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dwreg/dataset.hpp"

namespace dwreg {

// Benchmark scenarios. Cases 1-4 draw from the additive model itself at
// increasing complexity (linear/spline links, constant/moving shape); the
// dispersion variant selects the over- ('a') or under-dispersed ('b')
// parameter set. nb_tail draws from a negative binomial whose dispersion
// moves with a second covariate that leaves the mean untouched.
enum class Scenario { dw_case1, dw_case2, dw_case3, dw_case4, nb_tail };
enum class DispersionVariant { over, under };

Scenario scenario_from_string(const std::string& name);
std::string to_string(Scenario s);

// One simulated dataset plus everything needed to score predictions: the
// per-row true parameters and the true conditional quantiles (integer grid
// and the real-valued solution) at the requested levels.
struct SimTruth {
  Dataset data;
  std::vector<double> taus;
  Eigen::MatrixXd true_quantile;       // n x taus, integers stored as double
  Eigen::MatrixXd true_cont_quantile;  // n x taus
  // DW scenarios: rate c = -log q and shape per row.
  std::vector<double> true_c;
  std::vector<double> true_beta;
  // nb_tail: mean and dispersion per row.
  std::vector<double> true_mu;
  std::vector<double> true_sigma;
};

SimTruth gen_dw_case(int case_id, DispersionVariant variant, std::size_t n,
                     std::uint64_t seed, const std::vector<double>& taus);
SimTruth gen_nb_tail(std::size_t n, std::uint64_t seed,
                     const std::vector<double>& taus);

// Root mean squared difference; lengths must agree.
double rmse(const std::vector<double>& fitted,
            const std::vector<double>& truth);

struct ScenarioConfig {
  Scenario scenario = Scenario::dw_case1;
  DispersionVariant variant = DispersionVariant::over;
  std::vector<std::size_t> sample_sizes{1000};
  int replicates = 100;
  std::uint64_t seed = 1;
  std::vector<double> taus{0.25, 0.5, 0.75};
  // Any of "dw", "poisson", "negbin".
  std::vector<std::string> models{"dw", "poisson", "negbin"};
  int fit_starts = 3;
};

struct BenchmarkCell {
  double mean_rmse = 0.0;
  // Per-replicate RMSE; NaN where the fit failed.
  std::vector<double> raw;
  int failures = 0;
};

struct BenchmarkReport {
  ScenarioConfig config;
  // cells[model][tau][sample_size]
  std::vector<std::vector<std::vector<BenchmarkCell>>> cells;
  // Accumulated fit+predict seconds per model. Timing is metadata: it is
  // excluded from the determinism guarantee that covers all RMSE values.
  std::map<std::string, double> wall_seconds;
};

// Runs the replicate study. Replicate r of sample size n always derives the
// same seed from config.seed, so reports are identical no matter how many
// threads execute the loop. Fits that throw or fail to converge are counted
// as failures and excluded from the mean.
BenchmarkReport run_benchmark(const ScenarioConfig& config);

}  // namespace dwreg
