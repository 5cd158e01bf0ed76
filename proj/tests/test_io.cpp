#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dwreg/fit.hpp"
#include "dwreg/model_io.hpp"
#include "dwreg/simulation.hpp"
#include "dwreg/version.hpp"

using dwreg::ColumnKind;
using dwreg::CsvOptions;
using dwreg::Dataset;
using dwreg::DataError;
using dwreg::ModelSpec;

namespace {

Dataset parse(const std::string& text, const CsvOptions& opts = {}) {
  std::istringstream in(text);
  return dwreg::read_csv(in, opts);
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name)
      : path("/tmp/dwreg_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("csv parsing: kinds, values, comments") {
  const auto data = parse(
      "# generated earlier\n"
      "y,x1,flag,x2\n"
      "0,0.5,1,2.25\n"
      "3,1.5,0,-1.5\n"
      "1,2.5,1,0.75\n");
  CHECK(data.n() == 3);
  CHECK(data.names == std::vector<std::string>{"x1", "flag", "x2"});
  CHECK(data.y == std::vector<std::int64_t>{0, 3, 1});
  CHECK(data.kind("x1") == ColumnKind::continuous);
  CHECK(data.kind("flag") == ColumnKind::dummy);
  CHECK(data.kind("x2") == ColumnKind::continuous);
  CHECK(data.column("x2")[1] == -1.5);

  // Response column may sit anywhere.
  const auto mid = parse("a,y,b\n1.0,4,2.0\n");
  CHECK(mid.y == std::vector<std::int64_t>{4});
  CHECK(mid.names == std::vector<std::string>{"a", "b"});
}

TEST_CASE("csv parsing: forced kinds") {
  CsvOptions opts;
  opts.force_continuous = {"flag"};
  const auto data = parse("y,flag\n0,1\n1,0\n", opts);
  CHECK(data.kind("flag") == ColumnKind::continuous);

  CsvOptions opts2;
  opts2.force_dummy = {"x"};
  const auto d2 = parse("y,x\n0,1\n1,0\n", opts2);
  CHECK(d2.kind("x") == ColumnKind::dummy);

  CHECK_THROWS_AS(parse("y,x\n0,0.5\n1,0\n", opts2), DataError);
}

TEST_CASE("csv parsing: diagnostics carry row and column positions") {
  const auto check_message = [](const std::string& text,
                                const std::string& needle,
                                const CsvOptions& opts = {}) {
    try {
      parse(text, opts);
      FAIL("expected DataError for: " << text);
    } catch (const DataError& e) {
      const std::string msg = e.what();
      INFO("message: " << msg);
      CHECK(msg.find(needle) != std::string::npos);
    }
  };

  check_message("y,x\n0,abc\n", "x");
  check_message("y,x\n0,abc\n", "row 1");
  check_message("y,x\n0,1\n-2,1\n", "row 2");
  check_message("y,x\n1.5,1\n", "response");
  check_message("y,x\n0\n", "row 1");
  check_message("a,x\n0,1\n", "y");
  check_message("y,x\n", "no data rows");
}

TEST_CASE("csv response column may be absent for prediction data") {
  CsvOptions opts;
  opts.require_response = false;
  const auto data = parse("x1,x2\n0.5,1.0\n1.5,2.0\n", opts);
  CHECK(data.n() == 2);
  CHECK(data.y == std::vector<std::int64_t>{0, 0});
  CHECK(data.names == std::vector<std::string>{"x1", "x2"});

  // With a y column present it is still read.
  const auto with_y = parse("y,x1\n7,0.5\n", opts);
  CHECK(with_y.y == std::vector<std::int64_t>{7});
}

TEST_CASE("csv writer round trips exactly") {
  Dataset data;
  data.y = {0, 5, 2};
  data.names = {"x", "flag"};
  data.kinds = {ColumnKind::continuous, ColumnKind::dummy};
  data.columns = {{0.1234567890123456789, 1.0 / 3.0, -2.5e-17}, {1, 0, 1}};

  std::ostringstream out;
  dwreg::write_csv(out, data, {"note one", "note two"});
  const std::string text = out.str();
  CHECK(text.find("# note one\n") != std::string::npos);
  CHECK(text.find("# note two\n") != std::string::npos);

  const auto back = parse(text);
  CHECK(back.y == data.y);
  CHECK(back.names == data.names);
  CHECK(back.columns == data.columns);  // shortest-round-trip doubles
  CHECK(back.kinds[1] == ColumnKind::dummy);
}

TEST_CASE("model json round trips bit for bit") {
  auto truth = dwreg::gen_dw_case(1, dwreg::DispersionVariant::over, 400, 3,
                                  {});
  auto data = truth.data;
  // Add an exact copy to force an aliased column into the model.
  data.names.push_back("xcopy");
  data.columns.push_back(data.column("x"));
  data.kinds.push_back(ColumnKind::continuous);

  dwreg::ModelSpec spec;
  dwreg::CovariateSpec tq;
  tq.covariate = "x";
  tq.degree = 2;
  tq.num_knots = 1;
  spec.q_terms = {tq};
  dwreg::CovariateSpec tc;
  tc.covariate = "xcopy";
  tc.degree = 1;
  spec.q_terms.push_back(tc);

  dwreg::FitOptions fo;
  fo.scale_covariates = true;
  const auto model = dwreg::fit(data, spec, fo);
  REQUIRE(model.covariance_available);
  REQUIRE(!model.aliased.empty());
  REQUIRE(model.scaling.has_value());
  REQUIRE(model.spec.q_terms[0].knots.size() == 1);  // resolved from data

  const nlohmann::json j = dwreg::model_to_json(model, {{"note", "test"}});
  const auto back = dwreg::model_from_json(j);

  CHECK(back.theta == model.theta);
  CHECK(back.vartheta == model.vartheta);
  CHECK(back.covariance == model.covariance);
  CHECK(back.loglik == model.loglik);
  CHECK(back.aic == model.aic);
  CHECK(back.n == model.n);
  CHECK(back.n_free_params == model.n_free_params);
  CHECK(back.converged == model.converged);
  CHECK(back.beta_fixed == model.beta_fixed);
  CHECK(back.covariance_available == model.covariance_available);
  CHECK(back.aliased == model.aliased);
  CHECK(back.theta_labels == model.theta_labels);
  CHECK(back.vartheta_labels == model.vartheta_labels);
  CHECK(back.spec.q_terms[0].knots == model.spec.q_terms[0].knots);
  CHECK(back.spec.q_terms[0].degree == 2);
  REQUIRE(back.scaling.has_value());
  CHECK(back.scaling->ranges == model.scaling->ranges);
  CHECK(back.covariate_stats.at("x").mean ==
        model.covariate_stats.at("x").mean);

  // Through a file as well.
  TempFile tmp("model.json");
  dwreg::save_model(model, tmp.path, {{"seed", 3}});
  const auto loaded = dwreg::load_model(tmp.path);
  CHECK(loaded.theta == model.theta);
  CHECK(loaded.covariance == model.covariance);

  std::ifstream in(tmp.path);
  nlohmann::json raw = nlohmann::json::parse(in);
  CHECK(raw.at("run_config").at("seed") == 3);
  CHECK(raw.at("format").is_string());
}

TEST_CASE("model loader rejects foreign or future files") {
  const auto model = dwreg::fit(
      dwreg::gen_dw_case(1, dwreg::DispersionVariant::over, 100, 1, {}).data,
      ModelSpec{});
  nlohmann::json good = dwreg::model_to_json(model);

  nlohmann::json no_format = good;
  no_format.erase("format");
  CHECK_THROWS_AS(dwreg::model_from_json(no_format), DataError);

  nlohmann::json wrong = good;
  wrong["format"] = "something-else";
  CHECK_THROWS_AS(dwreg::model_from_json(wrong), DataError);

  nlohmann::json future = good;
  future["format_version"] = {{"major", 2}, {"minor", 0}};
  CHECK_THROWS_AS(dwreg::model_from_json(future), DataError);

  CHECK_THROWS_AS(dwreg::load_model("/nonexistent/path/model.json"),
                  DataError);
  TempFile garbage("garbage.json");
  {
    std::ofstream out(garbage.path);
    out << "{ not json";
  }
  CHECK_THROWS_AS(dwreg::load_model(garbage.path), DataError);
}

TEST_CASE("spec strings parse and print") {
  Dataset data;
  data.y = {0, 1};
  data.names = {"x1", "x2", "flag"};
  data.columns = {{0.1, 0.9}, {1.5, 2.5}, {0.0, 1.0}};
  data.kinds = {ColumnKind::continuous, ColumnKind::continuous,
                ColumnKind::dummy};

  const auto spec =
      dwreg::parse_spec_string("q = x1:d2k3 + flag, beta = x2", data);
  REQUIRE(spec.q_terms.size() == 2);
  CHECK(spec.q_terms[0].covariate == "x1");
  CHECK(spec.q_terms[0].degree == 2);
  CHECK(spec.q_terms[0].num_knots == 3);
  CHECK(spec.q_terms[0].knots.empty());  // placed at fit time
  CHECK(spec.q_terms[1].covariate == "flag");
  CHECK(spec.q_terms[1].kind == ColumnKind::dummy);
  REQUIRE(spec.beta_terms.size() == 1);
  CHECK(spec.beta_terms[0].covariate == "x2");
  CHECK(spec.beta_terms[0].degree == 1);

  CHECK(dwreg::spec_to_string(spec) == "q = x1:d2k3 + flag, beta = x2");

  // Reparsing the printed form gives the same structure.
  const auto again = dwreg::parse_spec_string(dwreg::spec_to_string(spec),
                                              data);
  CHECK(dwreg::spec_to_string(again) == dwreg::spec_to_string(spec));

  // Bare and partial modifiers.
  const auto bare = dwreg::parse_spec_string("q = x1", data);
  CHECK(bare.q_terms[0].degree == 1);
  CHECK(bare.beta_terms.empty());
  CHECK(dwreg::spec_to_string(bare) == "q = x1, beta =");
  const auto dnly = dwreg::parse_spec_string("q = x1:d3", data);
  CHECK(dnly.q_terms[0].degree == 3);
  CHECK(dnly.q_terms[0].num_knots == 0);
  const auto konly = dwreg::parse_spec_string("q = x1:k2", data);
  CHECK(konly.q_terms[0].degree == 1);
  CHECK(konly.q_terms[0].num_knots == 2);

  // Intercept-only on both sides.
  const auto empty = dwreg::parse_spec_string("q = , beta = ", data);
  CHECK(empty.q_terms.empty());
  CHECK(empty.beta_terms.empty());
  // Semicolon separator is accepted too.
  const auto semi = dwreg::parse_spec_string("q = x1; beta = x2", data);
  CHECK(semi.beta_terms.size() == 1);
}

TEST_CASE("spec string errors") {
  Dataset data;
  data.y = {0};
  data.names = {"x"};
  data.columns = {{0.5}};
  data.kinds = {ColumnKind::continuous};

  CHECK_THROWS_AS(dwreg::parse_spec_string("beta = x", data),
                  std::invalid_argument);  // missing q clause
  CHECK_THROWS_AS(dwreg::parse_spec_string("q = x, q = x", data),
                  std::invalid_argument);
  CHECK_THROWS_AS(dwreg::parse_spec_string("q = , beta = , beta = x", data),
                  std::invalid_argument);
  CHECK_THROWS_AS(dwreg::parse_spec_string("mu = x", data),
                  std::invalid_argument);
  CHECK_THROWS_AS(dwreg::parse_spec_string("q = x:d0k2", data),
                  std::invalid_argument);
  CHECK_THROWS_AS(dwreg::parse_spec_string("q = x:z9", data),
                  std::invalid_argument);
  CHECK_THROWS_AS(dwreg::parse_spec_string("q = ghost", data), DataError);
}

TEST_CASE("scenario config json round trips") {
  nlohmann::json j = {
      {"case", "2"},          {"variant", "b"},
      {"n", {50, 500}},       {"replicates", 7},
      {"seed", 99},           {"taus", {0.1, 0.5}},
      {"models", {"dw", "poisson"}},
      {"fit_starts", 2},
  };
  const auto config = dwreg::scenario_config_from_json(j);
  CHECK(config.scenario == dwreg::Scenario::dw_case2);
  CHECK(config.variant == dwreg::DispersionVariant::under);
  CHECK(config.sample_sizes == std::vector<std::size_t>{50, 500});
  CHECK(config.replicates == 7);
  CHECK(config.seed == 99);
  CHECK(config.taus == std::vector<double>{0.1, 0.5});
  CHECK(config.models == std::vector<std::string>{"dw", "poisson"});
  CHECK(config.fit_starts == 2);

  const auto back =
      dwreg::scenario_config_from_json(dwreg::scenario_config_to_json(config));
  CHECK(back.scenario == config.scenario);
  CHECK(back.variant == config.variant);
  CHECK(back.sample_sizes == config.sample_sizes);
  CHECK(back.taus == config.taus);

  // Variant aliases.
  j["variant"] = "over";
  CHECK(dwreg::scenario_config_from_json(j).variant ==
        dwreg::DispersionVariant::over);
  j["variant"] = "under";
  CHECK(dwreg::scenario_config_from_json(j).variant ==
        dwreg::DispersionVariant::under);
  j["variant"] = "c";
  CHECK_THROWS_AS(dwreg::scenario_config_from_json(j), std::invalid_argument);

  // Defaults apply when keys are missing.
  const auto defaults = dwreg::scenario_config_from_json(
      nlohmann::json{{"case", "1"}});
  CHECK(defaults.replicates == 100);
  CHECK(defaults.taus == std::vector<double>{0.25, 0.5, 0.75});
}

TEST_CASE("benchmark reports serialize deterministically") {
  dwreg::ScenarioConfig config;
  config.scenario = dwreg::Scenario::dw_case1;
  config.sample_sizes = {80};
  config.replicates = 2;
  config.seed = 4;
  config.taus = {0.5};
  config.models = {"dw", "poisson"};
  config.fit_starts = 1;
  const auto report = dwreg::run_benchmark(config);

  std::ostringstream a, b;
  dwreg::write_benchmark_tsv(a, report);
  dwreg::write_benchmark_tsv(b, report);
  CHECK(a.str() == b.str());
  CHECK(a.str().find("# dwreg " + std::string(dwreg::kVersion)) !=
        std::string::npos);
  CHECK(a.str().find("# config:") != std::string::npos);
  CHECK(a.str().find("tau") != std::string::npos);
  CHECK(a.str().find("dw@80") != std::string::npos);
  CHECK(a.str().find("poisson@80") != std::string::npos);

  std::ostringstream js;
  dwreg::write_benchmark_json(js, report);
  const auto parsed = nlohmann::json::parse(js.str());
  CHECK(parsed.at("cells").is_array());
  CHECK(parsed.at("config").at("replicates") == 2);

  // NaN cells (failed fits) must serialize as null, not break the file.
  auto crippled = report;
  crippled.cells[0][0][0].raw[1] = std::numeric_limits<double>::quiet_NaN();
  crippled.cells[0][0][0].mean_rmse =
      std::numeric_limits<double>::quiet_NaN();
  std::ostringstream js2;
  dwreg::write_benchmark_json(js2, crippled);
  const auto reparsed = nlohmann::json::parse(js2.str());
  CHECK(reparsed.at("cells")[0].at("raw")[1].is_null());
  CHECK(reparsed.at("cells")[0].at("mean_rmse").is_null());
  CHECK(reparsed.at("cells")[0].at("model") == "dw");
}
