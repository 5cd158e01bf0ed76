// Command line for discrete Weibull additive count regression: fit,
// stepwise selection, prediction, residual diagnostics, partial effects,
// synthetic data generation and the replicate benchmark.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 fit did not
// converge (the model file is still written).

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "dwreg/dataset.hpp"
#include "dwreg/fit.hpp"
#include "dwreg/model_io.hpp"
#include "dwreg/predict.hpp"
#include "dwreg/residuals.hpp"
#include "dwreg/select.hpp"
#include "dwreg/simulation.hpp"
#include "dwreg/version.hpp"

namespace {

using nlohmann::json;

// Output target: a path, or '-' for standard output.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path != "-") {
      file_.open(path);
      if (!file_) {
        throw dwreg::DataError("cannot open '" + path + "' for writing");
      }
    }
  }
  std::ostream& out() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

std::string fmt_tau(double tau) {
  std::ostringstream os;
  os << tau;
  return os.str();
}

void check_taus(const std::vector<double>& taus) {
  if (taus.empty()) {
    throw std::invalid_argument("at least one quantile level is required");
  }
  for (const double t : taus) {
    if (!(t > 0.0 && t < 1.0)) {
      throw std::invalid_argument(
          "quantile levels must lie strictly inside (0, 1), got " +
          fmt_tau(t));
    }
  }
}

// Every text output starts with the tool version and the resolved run
// configuration (seed included) so results can be regenerated.
void write_header(std::ostream& out, const json& config) {
  out << "# dwreg " << dwreg::kVersion << "\n";
  out << "# config: " << config.dump() << "\n";
}

void print_model_summary(std::ostream& out, const dwreg::FittedModel& model) {
  out << "link\tterm\testimate\tse\tz\tp\tnote\n";
  if (model.covariance_available) {
    for (const auto& s : dwreg::standard_errors(model)) {
      out << s.link << '\t' << s.label << '\t' << fmt_num(s.estimate) << '\t';
      if (std::isnan(s.se)) {
        out << "nan\tnan\tnan";
      } else {
        out << fmt_num(s.se) << '\t' << fmt_num(s.z) << '\t'
            << fmt_num(s.p_value);
      }
      out << '\t' << (s.aliased ? "aliased" : (s.fixed ? "fixed" : "-"))
          << '\n';
    }
  } else {
    const auto row = [&](const std::string& link, const std::string& label,
                         double est, bool fixed) {
      const bool aliased =
          std::find(model.aliased.begin(), model.aliased.end(),
                    link + ":" + label) != model.aliased.end();
      out << link << '\t' << label << '\t' << fmt_num(est)
          << "\tnan\tnan\tnan\t" << (aliased ? "aliased" : (fixed ? "fixed" : "-"))
          << '\n';
    };
    for (Eigen::Index j = 0; j < model.theta.size(); ++j) {
      row("q", model.theta_labels[static_cast<std::size_t>(j)],
          model.theta[j], false);
    }
    for (Eigen::Index j = 0; j < model.vartheta.size(); ++j) {
      row("beta", model.vartheta_labels[static_cast<std::size_t>(j)],
          model.vartheta[j], model.beta_fixed);
    }
  }
  out << "# loglik " << fmt_num(model.loglik) << "\n";
  out << "# aic " << fmt_num(model.aic) << "\n";
  out << "# n " << model.n << "\n";
  out << "# free_params " << model.n_free_params << "\n";
  out << "# converged " << (model.converged ? "yes" : "no") << "\n";
  if (model.covariance_floored) {
    out << "# note observed information was not positive definite; standard "
           "errors use floored curvature\n";
  }
  const auto interp = dwreg::interpret_coefficients(model);
  if (interp.applicable) {
    out << "# log(median + 1) at covariate zero: "
        << fmt_num(interp.baseline_log_median1) << "\n";
    for (const auto& [name, shift] : interp.unit_shifts) {
      out << "# unit step in " << name << " shifts log(median + 1) by "
          << fmt_num(shift) << "\n";
    }
  }
}

struct CommonIo {
  std::string data;
  std::string response = "y";
  std::vector<std::string> force_continuous;
  std::vector<std::string> force_dummy;
};

dwreg::Dataset load_data(const CommonIo& io, bool require_response = true) {
  dwreg::CsvOptions opts;
  opts.response = io.response;
  opts.require_response = require_response;
  opts.force_continuous = io.force_continuous;
  opts.force_dummy = io.force_dummy;
  return dwreg::read_csv_file(io.data, opts);
}

json io_config(const CommonIo& io) {
  return json{{"data", io.data},
              {"response", io.response},
              {"force_continuous", io.force_continuous},
              {"force_dummy", io.force_dummy}};
}

struct FitArgs {
  CommonIo io;
  std::string spec_text;
  std::string out;
  int starts = 3;
  int max_iters = 500;
  std::uint64_t seed = 0;
  bool scale = false;
  bool fix_beta = false;
  double fixed_log_beta = 0.0;
};

int cmd_fit(const FitArgs& a) {
  const auto data = load_data(a.io);
  const auto spec = dwreg::parse_spec_string(a.spec_text, data);

  dwreg::FitOptions fo;
  fo.starts = a.starts;
  fo.seed = a.seed;
  fo.scale_covariates = a.scale;
  fo.fix_beta = a.fix_beta;
  fo.fixed_log_beta = a.fixed_log_beta;
  fo.optim.max_iters = a.max_iters;
  const auto model = dwreg::fit(data, spec, fo);

  json config = io_config(a.io);
  config["command"] = "fit";
  config["spec"] = a.spec_text;
  config["out"] = a.out;
  config["starts"] = a.starts;
  config["max_iters"] = a.max_iters;
  config["seed"] = a.seed;
  config["scale"] = a.scale;
  config["fix_beta"] = a.fix_beta;
  if (a.fix_beta) config["fixed_log_beta"] = a.fixed_log_beta;

  write_header(std::cout, config);
  print_model_summary(std::cout, model);
  dwreg::save_model(model, a.out, config);
  if (!model.converged) {
    std::cerr << "warning: optimizer did not converge; model written to '"
              << a.out << "' anyway\n";
    return 4;
  }
  return 0;
}

struct SelectArgs {
  CommonIo io;
  std::vector<std::string> expand;
  std::string out;
  int max_degree = 3;
  int max_knots = 3;
  int starts = 3;
  std::uint64_t seed = 0;
  bool scale = false;
};

int cmd_select(const SelectArgs& a) {
  const auto data = load_data(a.io);

  dwreg::SelectOptions so;
  so.max_degree = a.max_degree;
  so.max_knots = a.max_knots;
  so.fit.starts = a.starts;
  so.fit.seed = a.seed;
  so.fit.scale_covariates = a.scale;
  const auto result = dwreg::stepwise_select(data, a.expand, so);

  json config = io_config(a.io);
  config["command"] = "select";
  config["expand"] = a.expand;
  config["out"] = a.out;
  config["max_degree"] = a.max_degree;
  config["max_knots"] = a.max_knots;
  config["starts"] = a.starts;
  config["seed"] = a.seed;
  config["scale"] = a.scale;

  write_header(std::cout, config);
  std::cout << "move\tn_params\tloglik\taic\tconverged\taccepted\n";
  for (const auto& r : result.trace) {
    std::cout << r.move << '\t' << r.n_params << '\t' << fmt_num(r.loglik)
              << '\t' << fmt_num(r.aic) << '\t' << (r.converged ? 1 : 0)
              << '\t' << (r.accepted ? 1 : 0) << '\n';
  }
  std::cout << "# selected " << dwreg::spec_to_string(result.model.spec)
            << "\n";
  print_model_summary(std::cout, result.model);
  dwreg::save_model(result.model, a.out, config);
  if (!result.model.converged) {
    std::cerr << "warning: selected fit did not converge; model written to '"
              << a.out << "' anyway\n";
    return 4;
  }
  return 0;
}

struct PredictArgs {
  CommonIo io;
  std::string model;
  std::string out = "-";
  std::vector<double> taus{0.25, 0.5, 0.75};
  bool no_mean = false;
};

int cmd_predict(const PredictArgs& a) {
  const auto model = dwreg::load_model(a.model);
  const auto data = load_data(a.io, /*require_response=*/false);
  check_taus(a.taus);

  const auto params = dwreg::predict_params(model, data);
  const auto median = dwreg::predict_median(model, data);
  std::vector<double> mean;
  if (!a.no_mean) mean = dwreg::predict_mean(model, data);
  std::vector<dwreg::QuantilePrediction> quants;
  quants.reserve(a.taus.size());
  for (const double tau : a.taus) {
    quants.push_back(dwreg::predict_quantile(model, data, tau));
  }

  json config = io_config(a.io);
  config["command"] = "predict";
  config["model"] = a.model;
  config["out"] = a.out;
  config["taus"] = a.taus;
  config["mean"] = !a.no_mean;

  Sink sink(a.out);
  auto& out = sink.out();
  write_header(out, config);
  out << "row\tq\tc\tbeta";
  if (!a.no_mean) out << "\tmean";
  out << "\tmedian";
  for (const double tau : a.taus) {
    out << "\tq@" << fmt_tau(tau) << "\tcq@" << fmt_tau(tau);
  }
  out << "\textrapolated\n";
  for (std::size_t i = 0; i < data.n(); ++i) {
    out << (i + 1) << '\t' << fmt_num(params.params[i].q) << '\t'
        << fmt_num(params.c[i]) << '\t' << fmt_num(params.beta[i]);
    if (!a.no_mean) out << '\t' << fmt_num(mean[i]);
    out << '\t' << median[i];
    for (const auto& qp : quants) {
      out << '\t' << qp.value[i] << '\t' << fmt_num(qp.continuous[i]);
    }
    out << '\t' << (params.extrapolated[i] ? 1 : 0) << '\n';
  }
  return 0;
}

struct ResidualArgs {
  CommonIo io;
  std::string model;
  std::string out = "-";
  std::uint64_t seed = 1;
};

int cmd_residuals(const ResidualArgs& a) {
  const auto model = dwreg::load_model(a.model);
  const auto data = load_data(a.io);
  const auto res = dwreg::randomized_quantile_residuals(model, data, a.seed);

  json config = io_config(a.io);
  config["command"] = "residuals";
  config["model"] = a.model;
  config["out"] = a.out;
  config["seed"] = a.seed;

  Sink sink(a.out);
  auto& out = sink.out();
  write_header(out, config);
  out << "# n " << res.size() << "\n";
  if (res.size() >= 8) {
    const auto report = dwreg::residual_normality(res);
    out << "# ks_statistic " << fmt_num(report.ks_statistic) << "\n";
    out << "# ks_p_value " << fmt_num(report.p_value) << "\n";
    out << "row\tresidual\tnormal_quantile\tsorted_residual\n";
    for (std::size_t i = 0; i < res.size(); ++i) {
      out << (i + 1) << '\t' << fmt_num(res[i]) << '\t'
          << fmt_num(report.qq[i][0]) << '\t' << fmt_num(report.qq[i][1])
          << '\n';
    }
  } else {
    out << "# ks_statistic nan (needs at least 8 residuals)\n";
    out << "row\tresidual\n";
    for (std::size_t i = 0; i < res.size(); ++i) {
      out << (i + 1) << '\t' << fmt_num(res[i]) << '\n';
    }
  }
  return 0;
}

struct EffectsArgs {
  CommonIo io;
  std::string model;
  std::string out = "-";
  std::vector<double> taus{0.25, 0.5, 0.75};
};

int cmd_effects(const EffectsArgs& a) {
  const auto model = dwreg::load_model(a.model);
  const auto data = load_data(a.io, /*require_response=*/false);
  check_taus(a.taus);
  const auto table = dwreg::partial_effects(model, data, a.taus);

  json config = io_config(a.io);
  config["command"] = "effects";
  config["model"] = a.model;
  config["out"] = a.out;
  config["taus"] = a.taus;

  Sink sink(a.out);
  auto& out = sink.out();
  write_header(out, config);
  if (!table.has_se) {
    out << "# note model carries no covariance; standard errors unavailable\n";
  }
  out << "covariate\ttau\teffect\tse\tsignificant\n";
  for (std::size_t p = 0; p < table.covariates.size(); ++p) {
    for (std::size_t t = 0; t < table.taus.size(); ++t) {
      out << table.covariates[p] << '\t' << fmt_tau(table.taus[t]) << '\t'
          << fmt_num(table.effect(static_cast<Eigen::Index>(p),
                                  static_cast<Eigen::Index>(t)));
      if (table.has_se) {
        out << '\t'
            << fmt_num(table.se(static_cast<Eigen::Index>(p),
                                static_cast<Eigen::Index>(t)))
            << '\t' << (table.significant[p][t] ? 1 : 0);
      } else {
        out << "\tnan\tna";
      }
      out << '\n';
    }
  }
  return 0;
}

struct SimulateArgs {
  std::string scenario = "1";
  std::string variant = "a";
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::string out = "-";
  std::vector<double> taus;
};

int cmd_simulate(const SimulateArgs& a) {
  const auto sc = dwreg::scenario_from_string(a.scenario);
  dwreg::DispersionVariant variant;
  if (a.variant == "a" || a.variant == "over") {
    variant = dwreg::DispersionVariant::over;
  } else if (a.variant == "b" || a.variant == "under") {
    variant = dwreg::DispersionVariant::under;
  } else {
    throw std::invalid_argument("variant must be a/over or b/under, got '" +
                                a.variant + "'");
  }
  if (a.n == 0) throw std::invalid_argument("sample size must be positive");
  if (!a.taus.empty()) check_taus(a.taus);

  dwreg::SimTruth truth;
  if (sc == dwreg::Scenario::nb_tail) {
    truth = dwreg::gen_nb_tail(a.n, a.seed, a.taus);
  } else {
    const int case_id = static_cast<int>(sc) + 1;
    truth = dwreg::gen_dw_case(case_id, variant, a.n, a.seed, a.taus);
  }

  dwreg::Dataset data = truth.data;
  const auto append = [&](const std::string& name,
                          const std::vector<double>& col) {
    data.names.push_back(name);
    data.columns.push_back(col);
    data.kinds.push_back(dwreg::ColumnKind::continuous);
  };
  if (sc == dwreg::Scenario::nb_tail) {
    append("true_mu", truth.true_mu);
    append("true_sigma", truth.true_sigma);
  } else {
    append("true_c", truth.true_c);
    append("true_beta", truth.true_beta);
  }
  for (std::size_t t = 0; t < a.taus.size(); ++t) {
    std::vector<double> col(a.n);
    for (std::size_t i = 0; i < a.n; ++i) {
      col[i] = truth.true_cont_quantile(static_cast<Eigen::Index>(i),
                                        static_cast<Eigen::Index>(t));
    }
    append("true_q" + fmt_tau(a.taus[t]), col);
  }

  const json config = {{"command", "simulate"}, {"case", a.scenario},
                       {"variant", a.variant},  {"n", a.n},
                       {"seed", a.seed},        {"out", a.out},
                       {"taus", a.taus}};
  Sink sink(a.out);
  dwreg::write_csv(sink.out(), data,
                   {std::string("dwreg ") + dwreg::kVersion,
                    "config: " + config.dump()});
  return 0;
}

struct BenchmarkArgs {
  std::string config;
  std::string out = "-";
  std::string json_out;
  int jobs = 0;
};

int cmd_benchmark(const BenchmarkArgs& a) {
  std::ifstream in(a.config);
  if (!in) {
    throw dwreg::DataError("cannot open '" + a.config + "' for reading");
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw dwreg::DataError(a.config + ": invalid JSON: " + e.what());
  }
  dwreg::ScenarioConfig config;
  try {
    config = dwreg::scenario_config_from_json(j);
  } catch (const std::invalid_argument& e) {
    throw dwreg::DataError(a.config + ": " + e.what());
  }

#ifdef _OPENMP
  if (a.jobs > 0) omp_set_num_threads(a.jobs);
#else
  if (a.jobs > 1) {
    std::cerr << "warning: built without OpenMP; --jobs ignored\n";
  }
#endif

  const auto report = dwreg::run_benchmark(config);
  {
    Sink sink(a.out);
    dwreg::write_benchmark_tsv(sink.out(), report);
  }
  if (!a.json_out.empty()) {
    Sink sink(a.json_out);
    dwreg::write_benchmark_json(sink.out(), report);
  }
  return 0;
}

void add_io_options(CLI::App* cmd, CommonIo& io) {
  cmd->add_option("--data", io.data, "input csv file")->required();
  cmd->add_option("--response", io.response, "response column name");
  cmd->add_option("--force-continuous", io.force_continuous,
                  "treat these columns as continuous")
      ->delimiter(',');
  cmd->add_option("--force-dummy", io.force_dummy,
                  "treat these columns as 0/1 dummies")
      ->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"discrete Weibull additive regression for count data"};
  app.set_version_flag("--version", std::string("dwreg ") + dwreg::kVersion);
  app.require_subcommand(1);

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand(
      "fit", "maximum likelihood fit; summary to stdout, model to json");
  add_io_options(fit_cmd, fit_args.io);
  fit_cmd->add_option("--spec", fit_args.spec_text,
                      "model formula, e.g. 'q=x1:d2k3+x2, beta=x1'")
      ->required();
  fit_cmd->add_option("--out", fit_args.out, "model json path")->required();
  fit_cmd->add_option("--starts", fit_args.starts, "optimizer starts")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--max-iters", fit_args.max_iters,
                      "optimizer iteration cap")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--seed", fit_args.seed, "seed for extra starts");
  fit_cmd->add_flag("--scale", fit_args.scale,
                    "min-max scale continuous covariates to [0,1]");
  fit_cmd->add_flag("--fix-beta", fit_args.fix_beta,
                    "freeze the shape coefficients");
  fit_cmd->add_option("--fixed-log-beta", fit_args.fixed_log_beta,
                      "shape intercept used with --fix-beta (0 = geometric)");

  SelectArgs select_args;
  auto* select_cmd = app.add_subcommand(
      "select", "stepwise complexity search by AIC; trace to stdout");
  add_io_options(select_cmd, select_args.io);
  select_cmd
      ->add_option("--expand", select_args.expand,
                   "covariates whose expansion may grow")
      ->required()
      ->delimiter(',');
  select_cmd->add_option("--out", select_args.out, "model json path")
      ->required();
  select_cmd->add_option("--max-degree", select_args.max_degree,
                         "polynomial degree cap")
      ->check(CLI::PositiveNumber);
  select_cmd->add_option("--max-knots", select_args.max_knots, "knot cap")
      ->check(CLI::NonNegativeNumber);
  select_cmd->add_option("--starts", select_args.starts,
                         "optimizer starts for the final refit")
      ->check(CLI::PositiveNumber);
  select_cmd->add_option("--seed", select_args.seed, "seed for extra starts");
  select_cmd->add_flag("--scale", select_args.scale,
                       "min-max scale continuous covariates to [0,1]");

  PredictArgs predict_args;
  auto* predict_cmd = app.add_subcommand(
      "predict", "per-row parameters, quantiles, median and mean");
  add_io_options(predict_cmd, predict_args.io);
  predict_cmd->add_option("--model", predict_args.model, "model json path")
      ->required();
  predict_cmd->add_option("--out", predict_args.out, "tsv path or '-'");
  predict_cmd->add_option("--taus", predict_args.taus, "quantile levels")
      ->delimiter(',');
  predict_cmd->add_flag("--no-mean", predict_args.no_mean,
                        "skip the mean column (avoids tail summation)");

  ResidualArgs residual_args;
  auto* residual_cmd = app.add_subcommand(
      "residuals", "randomized quantile residuals and KS normality check");
  add_io_options(residual_cmd, residual_args.io);
  residual_cmd->add_option("--model", residual_args.model, "model json path")
      ->required();
  residual_cmd->add_option("--out", residual_args.out, "tsv path or '-'");
  residual_cmd->add_option("--seed", residual_args.seed,
                           "randomization seed");

  EffectsArgs effects_args;
  auto* effects_cmd = app.add_subcommand(
      "effects", "quantile partial effects from a baseline profile");
  add_io_options(effects_cmd, effects_args.io);
  effects_cmd->add_option("--model", effects_args.model, "model json path")
      ->required();
  effects_cmd->add_option("--out", effects_args.out, "tsv path or '-'");
  effects_cmd->add_option("--taus", effects_args.taus, "quantile levels")
      ->delimiter(',');

  SimulateArgs simulate_args;
  auto* simulate_cmd = app.add_subcommand(
      "simulate", "draw a synthetic dataset with true-parameter columns");
  simulate_cmd->add_option("--case", simulate_args.scenario,
                           "scenario: 1, 2, 3, 4 or nb_tail");
  simulate_cmd->add_option("--variant", simulate_args.variant,
                           "dispersion variant: a/over or b/under");
  simulate_cmd->add_option("--n", simulate_args.n, "sample size");
  simulate_cmd->add_option("--seed", simulate_args.seed, "generator seed");
  simulate_cmd->add_option("--out", simulate_args.out, "csv path or '-'");
  simulate_cmd
      ->add_option("--taus", simulate_args.taus,
                   "also emit true quantile columns at these levels")
      ->delimiter(',');

  BenchmarkArgs benchmark_args;
  auto* benchmark_cmd = app.add_subcommand(
      "benchmark", "replicate study comparing quantile RMSE across models");
  benchmark_cmd
      ->add_option("--config", benchmark_args.config, "scenario json file")
      ->required();
  benchmark_cmd->add_option("--out", benchmark_args.out,
                            "summary tsv path or '-'");
  benchmark_cmd->add_option("--json", benchmark_args.json_out,
                            "full report json path");
  benchmark_cmd->add_option("--jobs", benchmark_args.jobs,
                            "replicate threads (results are identical for "
                            "any value)")
      ->check(CLI::NonNegativeNumber);

  std::function<int()> action;
  fit_cmd->callback([&] { action = [&] { return cmd_fit(fit_args); }; });
  select_cmd->callback(
      [&] { action = [&] { return cmd_select(select_args); }; });
  predict_cmd->callback(
      [&] { action = [&] { return cmd_predict(predict_args); }; });
  residual_cmd->callback(
      [&] { action = [&] { return cmd_residuals(residual_args); }; });
  effects_cmd->callback(
      [&] { action = [&] { return cmd_effects(effects_args); }; });
  simulate_cmd->callback(
      [&] { action = [&] { return cmd_simulate(simulate_args); }; });
  benchmark_cmd->callback(
      [&] { action = [&] { return cmd_benchmark(benchmark_args); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return action();
  } catch (const dwreg::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
