#include "dwreg/model_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <ostream>
#include <sstream>

#include "dwreg/version.hpp"

namespace dwreg {

namespace {

nlohmann::json spec_to_json(const CovariateSpec& t) {
  return {{"covariate", t.covariate},
          {"kind", t.kind == ColumnKind::dummy ? "dummy" : "continuous"},
          {"degree", t.degree},
          {"num_knots", t.num_knots},
          {"knots", t.knots}};
}

CovariateSpec spec_from_json(const nlohmann::json& j) {
  CovariateSpec t;
  t.covariate = j.at("covariate").get<std::string>();
  t.kind = j.at("kind").get<std::string>() == "dummy" ? ColumnKind::dummy
                                                      : ColumnKind::continuous;
  t.degree = j.at("degree").get<int>();
  t.num_knots = j.at("num_knots").get<int>();
  t.knots = j.at("knots").get<std::vector<double>>();
  return t;
}

nlohmann::json terms_to_json(const std::vector<CovariateSpec>& terms) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : terms) arr.push_back(spec_to_json(t));
  return arr;
}

std::vector<CovariateSpec> terms_from_json(const nlohmann::json& arr) {
  std::vector<CovariateSpec> out;
  for (const auto& j : arr) out.push_back(spec_from_json(j));
  return out;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  Eigen::Index i = 0;
  for (const auto& x : arr) v[i++] = x.get<double>();
  return v;
}

}  // namespace

nlohmann::json model_to_json(const FittedModel& model,
                             const nlohmann::json& run_config) {
  nlohmann::json j;
  j["format"] = "dwreg-model";
  j["format_version"] = {{"major", kModelFormatMajor},
                         {"minor", kModelFormatMinor}};
  j["tool_version"] = kVersion;
  j["run_config"] = run_config;
  j["spec"] = {{"q_terms", terms_to_json(model.spec.q_terms)},
               {"beta_terms", terms_to_json(model.spec.beta_terms)}};
  j["coefficients"] = {
      {"q", {{"labels", model.theta_labels}, {"values", vector_to_json(model.theta)}}},
      {"beta",
       {{"labels", model.vartheta_labels},
        {"values", vector_to_json(model.vartheta)}}}};
  if (model.covariance_available) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < model.covariance.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index k = 0; k < model.covariance.cols(); ++k) {
        row.push_back(model.covariance(i, k));
      }
      rows.push_back(row);
    }
    j["covariance"] = {{"order", "q_then_beta"}, {"rows", rows}};
  } else {
    j["covariance"] = nullptr;
  }
  j["covariance_floored"] = model.covariance_floored;
  j["aliased"] = model.aliased;
  j["loglik"] = model.loglik;
  j["aic"] = model.aic;
  j["n"] = model.n;
  j["n_free_params"] = model.n_free_params;
  j["converged"] = model.converged;
  j["beta_fixed"] = model.beta_fixed;
  if (model.scaling) {
    nlohmann::json sc = nlohmann::json::object();
    for (const auto& [name, range] : model.scaling->ranges) {
      sc[name] = {range.first, range.second};
    }
    j["scaling"] = sc;
  } else {
    j["scaling"] = nullptr;
  }
  nlohmann::json stats = nlohmann::json::object();
  for (const auto& [name, st] : model.covariate_stats) {
    stats[name] = {{"min", st.min}, {"max", st.max}, {"mean", st.mean}};
  }
  j["covariate_stats"] = stats;
  return j;
}

FittedModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "dwreg-model") {
    throw DataError("not a dwreg model file");
  }
  const int major = j.at("format_version").at("major").get<int>();
  if (major != kModelFormatMajor) {
    throw DataError("model format major version " + std::to_string(major) +
                    " is not supported by this build (expected " +
                    std::to_string(kModelFormatMajor) + ")");
  }
  FittedModel m;
  m.spec.q_terms = terms_from_json(j.at("spec").at("q_terms"));
  m.spec.beta_terms = terms_from_json(j.at("spec").at("beta_terms"));
  const auto& coef = j.at("coefficients");
  m.theta_labels = coef.at("q").at("labels").get<std::vector<std::string>>();
  m.theta = vector_from_json(coef.at("q").at("values"));
  m.vartheta_labels =
      coef.at("beta").at("labels").get<std::vector<std::string>>();
  m.vartheta = vector_from_json(coef.at("beta").at("values"));
  if (!j.at("covariance").is_null()) {
    const auto& rows = j.at("covariance").at("rows");
    const auto dim = static_cast<Eigen::Index>(rows.size());
    m.covariance.resize(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      const auto& row = rows[static_cast<std::size_t>(i)];
      for (Eigen::Index k = 0; k < dim; ++k) {
        m.covariance(i, k) = row[static_cast<std::size_t>(k)].get<double>();
      }
    }
    m.covariance_available = true;
  }
  m.covariance_floored = j.value("covariance_floored", false);
  m.aliased = j.at("aliased").get<std::vector<std::string>>();
  m.loglik = j.at("loglik").get<double>();
  m.aic = j.at("aic").get<double>();
  m.n = j.at("n").get<std::int64_t>();
  m.n_free_params = j.at("n_free_params").get<int>();
  m.converged = j.at("converged").get<bool>();
  m.beta_fixed = j.value("beta_fixed", false);
  if (!j.at("scaling").is_null()) {
    ScalingRecord rec;
    for (const auto& [name, range] : j.at("scaling").items()) {
      rec.ranges[name] = {range[0].get<double>(), range[1].get<double>()};
    }
    m.scaling = rec;
  }
  for (const auto& [name, st] : j.at("covariate_stats").items()) {
    m.covariate_stats[name] = {st.at("min").get<double>(),
                               st.at("max").get<double>(),
                               st.at("mean").get<double>()};
  }
  return m;
}

void save_model(const FittedModel& model, const std::string& path,
                const nlohmann::json& run_config) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << model_to_json(model, run_config).dump(2) << "\n";
}

FittedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
  try {
    return model_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": malformed model file: " + e.what());
  }
}

namespace {

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// Parses "name", "name:d2", "name:k3" or "name:d2k3".
CovariateSpec parse_term(const std::string& text, const Dataset& data) {
  CovariateSpec t;
  const auto colon = text.find(':');
  t.covariate = strip(text.substr(0, colon));
  if (t.covariate.empty()) {
    throw std::invalid_argument("model spec: empty covariate name in '" +
                                text + "'");
  }
  t.kind = data.kind(t.covariate);
  t.degree = 1;
  if (colon != std::string::npos) {
    const std::string mods = strip(text.substr(colon + 1));
    std::size_t at = 0;
    const auto read_int = [&](const char* what) {
      std::size_t len = 0;
      while (at + len < mods.size() &&
             std::isdigit(static_cast<unsigned char>(mods[at + len]))) {
        ++len;
      }
      if (len == 0) {
        throw std::invalid_argument(std::string("model spec: expected ") +
                                    what + " count in '" + text + "'");
      }
      const int v = std::stoi(mods.substr(at, len));
      at += len;
      return v;
    };
    bool any = false;
    if (at < mods.size() && mods[at] == 'd') {
      ++at;
      t.degree = read_int("degree");
      any = true;
    }
    if (at < mods.size() && mods[at] == 'k') {
      ++at;
      t.num_knots = read_int("knot");
      any = true;
    }
    if (!any || at != mods.size()) {
      throw std::invalid_argument(
          "model spec: cannot parse term modifier in '" + text +
          "' (expected :d<D>, :k<K> or :d<D>k<K>)");
    }
  }
  validate(t);
  return t;
}

std::vector<CovariateSpec> parse_terms(const std::string& text,
                                       const Dataset& data) {
  std::vector<CovariateSpec> out;
  std::stringstream ss(text);
  std::string piece;
  while (std::getline(ss, piece, '+')) {
    piece = strip(piece);
    if (piece.empty()) {
      throw std::invalid_argument("model spec: empty term in '" + text + "'");
    }
    out.push_back(parse_term(piece, data));
  }
  return out;
}

}  // namespace

ModelSpec parse_spec_string(const std::string& text, const Dataset& data) {
  ModelSpec spec;
  bool saw_q = false;
  bool saw_beta = false;
  std::string body(text);
  std::replace(body.begin(), body.end(), ';', ',');
  std::stringstream ss(body);
  std::string clause;
  while (std::getline(ss, clause, ',')) {
    clause = strip(clause);
    if (clause.empty()) continue;
    const auto eq = clause.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(
          "model spec: expected 'q = ...' or 'beta = ...' clause, got '" +
          clause + "'");
    }
    const std::string lhs = strip(clause.substr(0, eq));
    const std::string rhs = strip(clause.substr(eq + 1));
    if (lhs == "q") {
      if (saw_q) {
        throw std::invalid_argument("model spec: duplicate q clause");
      }
      saw_q = true;
      if (!rhs.empty()) spec.q_terms = parse_terms(rhs, data);
    } else if (lhs == "beta") {
      if (saw_beta) {
        throw std::invalid_argument("model spec: duplicate beta clause");
      }
      saw_beta = true;
      if (!rhs.empty()) spec.beta_terms = parse_terms(rhs, data);
    } else {
      throw std::invalid_argument("model spec: unknown parameter '" + lhs +
                                  "' (expected q or beta)");
    }
  }
  if (!saw_q) {
    throw std::invalid_argument("model spec: missing q clause");
  }
  return spec;
}

std::string spec_to_string(const ModelSpec& spec) {
  const auto terms = [](const std::vector<CovariateSpec>& ts) {
    std::string out;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      if (i > 0) out += " + ";
      out += ts[i].covariate;
      if (ts[i].degree != 1 || ts[i].num_knots > 0) {
        out += ":d" + std::to_string(ts[i].degree);
        if (ts[i].num_knots > 0) out += "k" + std::to_string(ts[i].num_knots);
      }
    }
    return out;
  };
  const auto clause = [&](const char* lhs, const std::vector<CovariateSpec>& ts) {
    const std::string rhs = terms(ts);
    return std::string(lhs) + " =" + (rhs.empty() ? "" : " " + rhs);
  };
  return clause("q", spec.q_terms) + ", " + clause("beta", spec.beta_terms);
}

ScenarioConfig scenario_config_from_json(const nlohmann::json& j) {
  ScenarioConfig config;
  config.scenario = scenario_from_string(
      j.at("case").is_string() ? j.at("case").get<std::string>()
                               : std::to_string(j.at("case").get<int>()));
  if (j.contains("variant")) {
    const auto v = j.at("variant").get<std::string>();
    if (v == "a" || v == "over") {
      config.variant = DispersionVariant::over;
    } else if (v == "b" || v == "under") {
      config.variant = DispersionVariant::under;
    } else {
      throw std::invalid_argument("benchmark config: unknown variant '" + v +
                                  "'");
    }
  }
  if (j.contains("n")) {
    config.sample_sizes.clear();
    if (j.at("n").is_array()) {
      for (const auto& v : j.at("n")) {
        config.sample_sizes.push_back(v.get<std::size_t>());
      }
    } else {
      config.sample_sizes.push_back(j.at("n").get<std::size_t>());
    }
  }
  if (j.contains("replicates")) {
    config.replicates = j.at("replicates").get<int>();
  }
  if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("taus")) {
    config.taus = j.at("taus").get<std::vector<double>>();
  }
  if (j.contains("models")) {
    config.models = j.at("models").get<std::vector<std::string>>();
  }
  if (j.contains("fit_starts")) {
    config.fit_starts = j.at("fit_starts").get<int>();
  }
  return config;
}

nlohmann::json scenario_config_to_json(const ScenarioConfig& config) {
  return {{"case", to_string(config.scenario)},
          {"variant",
           config.variant == DispersionVariant::over ? "a" : "b"},
          {"n", config.sample_sizes},
          {"replicates", config.replicates},
          {"seed", config.seed},
          {"taus", config.taus},
          {"models", config.models},
          {"fit_starts", config.fit_starts}};
}

namespace {

std::string scenario_label(const ScenarioConfig& config) {
  std::string label = to_string(config.scenario);
  if (config.scenario != Scenario::nb_tail) {
    label += config.variant == DispersionVariant::over ? "a" : "b";
  }
  return label;
}

}  // namespace

void write_benchmark_tsv(std::ostream& out, const BenchmarkReport& report) {
  const auto& config = report.config;
  out << "# dwreg " << kVersion << "\n";
  out << "# config: " << scenario_config_to_json(config).dump() << "\n";
  out << "# failures:";
  for (std::size_t m = 0; m < config.models.size(); ++m) {
    for (std::size_t ni = 0; ni < config.sample_sizes.size(); ++ni) {
      int fails = 0;
      for (std::size_t t = 0; t < config.taus.size(); ++t) {
        fails = std::max(fails, report.cells[m][t][ni].failures);
      }
      out << " " << config.models[m] << "@" << config.sample_sizes[ni] << "="
          << fails;
    }
  }
  out << "\n";
  out.precision(6);
  out << "scenario\ttau";
  for (std::size_t m = 0; m < config.models.size(); ++m) {
    for (std::size_t ni = 0; ni < config.sample_sizes.size(); ++ni) {
      out << "\t" << config.models[m] << "@" << config.sample_sizes[ni];
    }
  }
  out << "\n";
  const std::string label = scenario_label(config);
  for (std::size_t t = 0; t < config.taus.size(); ++t) {
    out << label << "\t" << config.taus[t];
    for (std::size_t m = 0; m < config.models.size(); ++m) {
      for (std::size_t ni = 0; ni < config.sample_sizes.size(); ++ni) {
        out << "\t" << report.cells[m][t][ni].mean_rmse;
      }
    }
    out << "\n";
  }
}

void write_benchmark_json(std::ostream& out, const BenchmarkReport& report) {
  nlohmann::json j;
  j["tool_version"] = kVersion;
  j["config"] = scenario_config_to_json(report.config);
  j["scenario_label"] = scenario_label(report.config);
  nlohmann::json cells = nlohmann::json::array();
  const auto& config = report.config;
  for (std::size_t m = 0; m < config.models.size(); ++m) {
    for (std::size_t t = 0; t < config.taus.size(); ++t) {
      for (std::size_t ni = 0; ni < config.sample_sizes.size(); ++ni) {
        const auto& cell = report.cells[m][t][ni];
        cells.push_back({{"model", config.models[m]},
                         {"tau", config.taus[t]},
                         {"n", config.sample_sizes[ni]},
                         {"mean_rmse", cell.mean_rmse},
                         {"failures", cell.failures},
                         {"raw", cell.raw}});
      }
    }
  }
  j["cells"] = cells;
  j["wall_seconds"] = report.wall_seconds;
  out << j.dump(2) << "\n";
}

}  // namespace dwreg
