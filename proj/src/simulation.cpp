#include "dwreg/simulation.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dwreg/baselines.hpp"
#include "dwreg/distribution.hpp"
#include "dwreg/fit.hpp"
#include "dwreg/predict.hpp"
#include "dwreg/rng.hpp"

namespace dwreg {

Scenario scenario_from_string(const std::string& name) {
  if (name == "1" || name == "dw_case1") return Scenario::dw_case1;
  if (name == "2" || name == "dw_case2") return Scenario::dw_case2;
  if (name == "3" || name == "dw_case3") return Scenario::dw_case3;
  if (name == "4" || name == "dw_case4") return Scenario::dw_case4;
  if (name == "nb_tail" || name == "nb") return Scenario::nb_tail;
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::dw_case1: return "dw_case1";
    case Scenario::dw_case2: return "dw_case2";
    case Scenario::dw_case3: return "dw_case3";
    case Scenario::dw_case4: return "dw_case4";
    case Scenario::nb_tail: return "nb_tail";
  }
  return "unknown";
}

namespace {

constexpr double kKnots[3] = {0.25, 0.5, 0.75};

double hinge3(double x, double g) {
  return x > g ? (x - g) * (x - g) * (x - g) : 0.0;
}

// True link predictors of the four generator cases.
double case_eta(int case_id, double x) {
  if (case_id <= 2) return -5.0 - 3.0 * x;
  return -5.0 - 5.0 * x - 6.0 * x * x - 4.0 * x * x * x -
         8.0 * hinge3(x, kKnots[0]) - 9.0 * hinge3(x, kKnots[1]) -
         8.0 * hinge3(x, kKnots[2]);
}

double case_zeta(int case_id, DispersionVariant v, double x) {
  const bool over = v == DispersionVariant::over;
  switch (case_id) {
    case 1:
    case 3:
      return over ? 0.9 : 1.6;
    case 2:
      return over ? 0.6 + 0.3 * x : 1.1 + 0.5 * x;
    default:
      if (over) {
        return 0.9 + 0.7 * x + 0.9 * x * x + 0.8 * x * x * x +
               0.9 * hinge3(x, kKnots[0]) + 1.0 * hinge3(x, kKnots[1]) +
               0.9 * hinge3(x, kKnots[2]);
      }
      return 1.6 + 1.3 * x + 1.5 * x * x + 1.6 * x * x * x +
             1.6 * (hinge3(x, kKnots[0]) + hinge3(x, kKnots[1]) +
             hinge3(x, kKnots[2]));
  }
}

std::int64_t nb_draw(double mu, double sigma, double u) {
  double f = negbin_pmf0(mu, sigma);
  double cum = f;
  std::int64_t k = 0;
  while (cum < u && k < 1000000) {
    f = negbin_pmf_step(f, k, mu, sigma);
    ++k;
    cum += f;
  }
  return k;
}

std::int64_t nb_quantile_scan(double mu, double sigma, double tau) {
  return nb_draw(mu, sigma, tau);
}

}  // namespace

SimTruth gen_dw_case(int case_id, DispersionVariant variant, std::size_t n,
                     std::uint64_t seed, const std::vector<double>& taus) {
  if (case_id < 1 || case_id > 4) {
    throw std::invalid_argument("gen_dw_case: case_id must be 1..4");
  }
  SimTruth out;
  out.taus = taus;
  out.data.names = {"x"};
  out.data.kinds = {ColumnKind::continuous};
  out.data.columns.resize(1);
  out.data.columns[0].resize(n);
  out.data.y.resize(n);
  out.true_c.resize(n);
  out.true_beta.resize(n);
  out.true_quantile.resize(static_cast<Eigen::Index>(n),
                           static_cast<Eigen::Index>(taus.size()));
  out.true_cont_quantile.resize(static_cast<Eigen::Index>(n),
                                static_cast<Eigen::Index>(taus.size()));

  std::mt19937_64 gen(derive_seed(seed, 11));
  for (std::size_t i = 0; i < n; ++i) {
    out.data.columns[0][i] = uniform_open01(gen);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double x = out.data.columns[0][i];
    const double c = std::exp(case_eta(case_id, x));
    const double beta = std::exp(case_zeta(case_id, variant, x));
    out.true_c[i] = c;
    out.true_beta[i] = beta;
    out.data.y[i] = detail::quantile_rate(uniform_open01(gen), c, beta);
    for (std::size_t t = 0; t < taus.size(); ++t) {
      const auto r = static_cast<Eigen::Index>(i);
      const auto tc = static_cast<Eigen::Index>(t);
      out.true_quantile(r, tc) =
          static_cast<double>(detail::quantile_rate(taus[t], c, beta));
      out.true_cont_quantile(r, tc) =
          detail::continuous_quantile_rate(taus[t], c, beta);
    }
  }
  return out;
}

SimTruth gen_nb_tail(std::size_t n, std::uint64_t seed,
                     const std::vector<double>& taus) {
  SimTruth out;
  out.taus = taus;
  out.data.names = {"x1", "x2"};
  out.data.kinds = {ColumnKind::continuous, ColumnKind::continuous};
  out.data.columns.assign(2, std::vector<double>(n));
  out.data.y.resize(n);
  out.true_mu.resize(n);
  out.true_sigma.resize(n);
  out.true_quantile.resize(static_cast<Eigen::Index>(n),
                           static_cast<Eigen::Index>(taus.size()));
  out.true_cont_quantile.resize(static_cast<Eigen::Index>(n),
                                static_cast<Eigen::Index>(taus.size()));

  std::mt19937_64 gen(derive_seed(seed, 13));
  for (std::size_t i = 0; i < n; ++i) {
    out.data.columns[0][i] = uniform_open01(gen);
    out.data.columns[1][i] = uniform_open01(gen);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = std::exp(0.3 + 0.7 * out.data.columns[0][i]);
    const double sigma = std::exp(-2.0 + 2.0 * out.data.columns[1][i]);
    out.true_mu[i] = mu;
    out.true_sigma[i] = sigma;
    out.data.y[i] = nb_draw(mu, sigma, uniform_open01(gen));
    for (std::size_t t = 0; t < taus.size(); ++t) {
      const auto r = static_cast<Eigen::Index>(i);
      const auto tc = static_cast<Eigen::Index>(t);
      const std::int64_t q = nb_quantile_scan(mu, sigma, taus[t]);
      out.true_quantile(r, tc) = static_cast<double>(q);
      out.true_cont_quantile(r, tc) = static_cast<double>(q);
    }
  }
  return out;
}

double rmse(const std::vector<double>& fitted,
            const std::vector<double>& truth) {
  if (fitted.size() != truth.size()) {
    throw std::invalid_argument("rmse: lengths disagree (" +
                                std::to_string(fitted.size()) + " vs " +
                                std::to_string(truth.size()) + ")");
  }
  if (fitted.empty()) {
    throw std::invalid_argument("rmse: empty input");
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    const double d = fitted[i] - truth[i];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(fitted.size()));
}

namespace {

// Basis complexity matched to each generator, applied to all fitted models.
struct ScenarioSpecs {
  ModelSpec dw;
  std::vector<CovariateSpec> pois_mean;
  std::vector<CovariateSpec> nb_mu;
  std::vector<CovariateSpec> nb_sigma;
};

CovariateSpec term(const std::string& name, int degree, int knots) {
  CovariateSpec t;
  t.covariate = name;
  t.degree = degree;
  t.num_knots = knots;
  if (knots > 0) t.knots = {kKnots[0], kKnots[1], kKnots[2]};
  return t;
}

ScenarioSpecs specs_for(Scenario s) {
  ScenarioSpecs out;
  switch (s) {
    case Scenario::dw_case1:
      out.dw.q_terms = {term("x", 1, 0)};
      break;
    case Scenario::dw_case2:
      out.dw.q_terms = {term("x", 1, 0)};
      out.dw.beta_terms = {term("x", 1, 0)};
      break;
    case Scenario::dw_case3:
      out.dw.q_terms = {term("x", 3, 3)};
      break;
    case Scenario::dw_case4:
      out.dw.q_terms = {term("x", 3, 3)};
      out.dw.beta_terms = {term("x", 3, 3)};
      break;
    case Scenario::nb_tail:
      out.dw.q_terms = {term("x1", 1, 0), term("x2", 1, 0)};
      out.dw.beta_terms = {term("x1", 1, 0), term("x2", 1, 0)};
      break;
  }
  out.pois_mean = out.dw.q_terms;
  out.nb_mu = out.dw.q_terms;
  out.nb_sigma = out.dw.beta_terms;
  return out;
}

struct ReplicateScores {
  // [model][tau] RMSE, NaN on failure.
  std::vector<std::vector<double>> score;
  std::vector<double> seconds;
};

std::vector<double> column_of(const Eigen::MatrixXd& m, std::size_t col) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = m(i, static_cast<Eigen::Index>(col));
  }
  return out;
}

ReplicateScores score_replicate(const ScenarioConfig& config,
                                const SimTruth& truth,
                                const ScenarioSpecs& specs) {
  const std::size_t nt = config.taus.size();
  ReplicateScores out;
  out.score.assign(config.models.size(),
                   std::vector<double>(nt, std::numeric_limits<double>::quiet_NaN()));
  out.seconds.assign(config.models.size(), 0.0);

  for (std::size_t m = 0; m < config.models.size(); ++m) {
    const auto& name = config.models[m];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      std::vector<std::vector<double>> fitted(nt);
      if (name == "dw") {
        FitOptions fo;
        fo.starts = config.fit_starts;
        fo.seed = config.seed;
        fo.compute_covariance = false;
        const FittedModel fm = fit(truth.data, specs.dw, fo);
        if (!fm.converged) throw std::runtime_error("dw fit not converged");
        for (std::size_t t = 0; t < nt; ++t) {
          const auto qp = predict_quantile(fm, truth.data, config.taus[t]);
          fitted[t].assign(qp.value.size(), 0.0);
          for (std::size_t i = 0; i < qp.value.size(); ++i) {
            fitted[t][i] = static_cast<double>(qp.value[i]);
          }
        }
      } else if (name == "poisson") {
        const PoissonModel pm = fit_poisson(truth.data, specs.pois_mean);
        if (!pm.converged) throw std::runtime_error("poisson fit not converged");
        const auto mu = poisson_predict_mean(pm, truth.data);
        for (std::size_t t = 0; t < nt; ++t) {
          fitted[t].resize(mu.size());
          for (std::size_t i = 0; i < mu.size(); ++i) {
            fitted[t][i] = static_cast<double>(
                poisson_quantile(mu[i], config.taus[t]));
          }
        }
      } else if (name == "negbin") {
        const NegBinModel nm =
            fit_negbin(truth.data, specs.nb_mu, specs.nb_sigma, config.seed);
        if (!nm.converged) throw std::runtime_error("negbin fit not converged");
        const auto rows = negbin_predict_params(nm, truth.data);
        for (std::size_t t = 0; t < nt; ++t) {
          fitted[t].resize(rows.size());
          for (std::size_t i = 0; i < rows.size(); ++i) {
            fitted[t][i] = static_cast<double>(
                negbin_quantile(rows[i].mu, rows[i].sigma, config.taus[t]));
          }
        }
      } else {
        throw std::invalid_argument("unknown model '" + name + "'");
      }
      for (std::size_t t = 0; t < nt; ++t) {
        out.score[m][t] = rmse(fitted[t], column_of(truth.true_quantile, t));
      }
    } catch (const std::exception&) {
      // Failure recorded as NaN in every tau cell for this model.
    }
    out.seconds[m] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
  }
  return out;
}

}  // namespace

BenchmarkReport run_benchmark(const ScenarioConfig& config) {
  if (config.replicates < 1) {
    throw std::invalid_argument("run_benchmark: replicates must be >= 1");
  }
  const ScenarioSpecs specs = specs_for(config.scenario);
  const std::size_t nm = config.models.size();
  const std::size_t nt = config.taus.size();
  const std::size_t nn = config.sample_sizes.size();

  BenchmarkReport report;
  report.config = config;
  report.cells.assign(
      nm, std::vector<std::vector<BenchmarkCell>>(
              nt, std::vector<BenchmarkCell>(nn)));
  for (auto& per_model : report.cells) {
    for (auto& per_tau : per_model) {
      for (auto& cell : per_tau) {
        cell.raw.assign(static_cast<std::size_t>(config.replicates),
                        std::numeric_limits<double>::quiet_NaN());
      }
    }
  }
  std::vector<double> wall(nm, 0.0);

  for (std::size_t ni = 0; ni < nn; ++ni) {
    const std::size_t n = config.sample_sizes[ni];
    std::vector<ReplicateScores> reps(
        static_cast<std::size_t>(config.replicates));
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < config.replicates; ++r) {
      const std::uint64_t seed_r =
          derive_seed(config.seed, static_cast<std::uint64_t>(n),
                      static_cast<std::uint64_t>(r));
      const SimTruth truth =
          config.scenario == Scenario::nb_tail
              ? gen_nb_tail(n, seed_r, config.taus)
              : gen_dw_case(static_cast<int>(config.scenario) + 1,
                            config.variant, n, seed_r, config.taus);
      reps[static_cast<std::size_t>(r)] =
          score_replicate(config, truth, specs);
    }
    for (int r = 0; r < config.replicates; ++r) {
      const auto& rs = reps[static_cast<std::size_t>(r)];
      for (std::size_t m = 0; m < nm; ++m) {
        wall[m] += rs.seconds[m];
        for (std::size_t t = 0; t < nt; ++t) {
          report.cells[m][t][ni].raw[static_cast<std::size_t>(r)] =
              rs.score[m][t];
        }
      }
    }
  }

  for (std::size_t m = 0; m < nm; ++m) {
    report.wall_seconds[config.models[m]] = wall[m];
    for (std::size_t t = 0; t < nt; ++t) {
      for (std::size_t ni = 0; ni < nn; ++ni) {
        auto& cell = report.cells[m][t][ni];
        double sum = 0.0;
        int good = 0;
        for (const double v : cell.raw) {
          if (std::isnan(v)) continue;
          sum += v;
          ++good;
        }
        cell.failures = config.replicates - good;
        cell.mean_rmse = good > 0 ? sum / good
                                  : std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  return report;
}

}  // namespace dwreg
