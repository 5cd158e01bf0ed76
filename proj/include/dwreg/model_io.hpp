#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "dwreg/model.hpp"
#include "dwreg/simulation.hpp"

namespace dwreg {

// Model files are JSON. Coefficients, knots and covariance entries survive a
// round trip bit-for-bit (the writer emits shortest-round-trip doubles).
// `run_config` is free-form metadata (resolved command line, seed) embedded
// for provenance.
nlohmann::json model_to_json(const FittedModel& model,
                             const nlohmann::json& run_config = {});
FittedModel model_from_json(const nlohmann::json& j);
void save_model(const FittedModel& model, const std::string& path,
                const nlohmann::json& run_config = {});
FittedModel load_model(const std::string& path);

// Compact model formula, e.g. "q = x1:d2k3 + x2, beta = x1". Terms are
// covariate names with an optional ":d<degree>k<knots>" suffix (":d2", ":k3"
// and ":d2k3" all parse; a bare name is linear). The beta clause may be
// omitted or empty for a constant shape. Kinds are taken from the dataset.
ModelSpec parse_spec_string(const std::string& text, const Dataset& data);
std::string spec_to_string(const ModelSpec& spec);

// Benchmark scenario configuration, e.g.
//   {"case": "1", "variant": "a", "n": [50, 1000], "replicates": 100,
//    "seed": 7, "taus": [0.25, 0.5, 0.75], "models": ["dw", "poisson"]}
ScenarioConfig scenario_config_from_json(const nlohmann::json& j);
nlohmann::json scenario_config_to_json(const ScenarioConfig& config);

// Wide summary table (rows: tau, columns: model@n mean RMSE) with version,
// config and failure counts in '#' header lines.
void write_benchmark_tsv(std::ostream& out, const BenchmarkReport& report);
// Full report including per-replicate raw values and wall-clock totals.
void write_benchmark_json(std::ostream& out, const BenchmarkReport& report);

}  // namespace dwreg
