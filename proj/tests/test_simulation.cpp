#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cmath>
#include <vector>

#include "dwreg/distribution.hpp"
#include "dwreg/fit.hpp"
#include "dwreg/predict.hpp"
#include "dwreg/rng.hpp"
#include "dwreg/simulation.hpp"
#include "oracle.hpp"

using dwreg::DispersionVariant;
using dwreg::Scenario;
using dwreg::ScenarioConfig;
using oracle::rel_err;

namespace {

double hinge3(double x, double g) {
  return x > g ? (x - g) * (x - g) * (x - g) : 0.0;
}

}  // namespace

TEST_CASE("generators are deterministic in the seed") {
  const auto a = dwreg::gen_dw_case(1, DispersionVariant::over, 60, 7, {0.5});
  const auto b = dwreg::gen_dw_case(1, DispersionVariant::over, 60, 7, {0.5});
  const auto c = dwreg::gen_dw_case(1, DispersionVariant::over, 60, 8, {0.5});
  CHECK(a.data.columns[0] == b.data.columns[0]);
  CHECK(a.data.y == b.data.y);
  CHECK(a.true_quantile == b.true_quantile);
  CHECK(a.data.y != c.data.y);

  const auto na = dwreg::gen_nb_tail(60, 7, {0.5});
  const auto nb = dwreg::gen_nb_tail(60, 7, {0.5});
  CHECK(na.data.y == nb.data.y);
  CHECK(na.true_mu == nb.true_mu);
}

TEST_CASE("generated covariates and counts live on their supports") {
  for (int case_id = 1; case_id <= 4; ++case_id) {
    const auto t = dwreg::gen_dw_case(case_id, DispersionVariant::under, 500,
                                      case_id, {});
    REQUIRE(t.data.n() == 500);
    for (const double x : t.data.columns[0]) {
      CHECK(x > 0.0);
      CHECK(x < 1.0);
    }
    for (const auto y : t.data.y) CHECK(y >= 0);
    for (std::size_t i = 0; i < 500; ++i) {
      CHECK(t.true_c[i] > 0.0);
      CHECK(t.true_beta[i] > 0.0);
    }
  }
}

TEST_CASE("true parameters restate the published link functions") {
  for (const auto variant : {DispersionVariant::over, DispersionVariant::under}) {
    const bool over = variant == DispersionVariant::over;
    for (int case_id = 1; case_id <= 4; ++case_id) {
      const auto t = dwreg::gen_dw_case(case_id, variant, 200,
                                        17 + static_cast<unsigned>(case_id), {});
      for (std::size_t i = 0; i < 200; i += 11) {
        const double x = t.data.columns[0][i];

        double eta = -5.0 - 3.0 * x;
        if (case_id >= 3) {
          eta = -5.0 - 5.0 * x - 6.0 * x * x - 4.0 * x * x * x -
                8.0 * hinge3(x, 0.25) - 9.0 * hinge3(x, 0.5) -
                8.0 * hinge3(x, 0.75);
        }

        double zeta = over ? 0.9 : 1.6;
        if (case_id == 2) zeta = over ? 0.6 + 0.3 * x : 1.1 + 0.5 * x;
        if (case_id == 4) {
          zeta = over ? 0.9 + 0.7 * x + 0.9 * x * x + 0.8 * x * x * x +
                            0.9 * hinge3(x, 0.25) + 1.0 * hinge3(x, 0.5) +
                            0.9 * hinge3(x, 0.75)
                      : 1.6 + 1.3 * x + 1.5 * x * x + 1.6 * x * x * x +
                            1.6 * (hinge3(x, 0.25) + hinge3(x, 0.5) +
                                   hinge3(x, 0.75));
        }

        CHECK(rel_err(t.true_c[i], std::exp(eta)) < 1e-13);
        CHECK(rel_err(t.true_beta[i], std::exp(zeta)) < 1e-13);
      }
    }
  }

  const auto nb = dwreg::gen_nb_tail(200, 23, {});
  for (std::size_t i = 0; i < 200; i += 7) {
    const double x1 = nb.data.columns[0][i];
    const double x2 = nb.data.columns[1][i];
    CHECK(rel_err(nb.true_mu[i], std::exp(0.3 + 0.7 * x1)) < 1e-14);
    CHECK(rel_err(nb.true_sigma[i], std::exp(-2.0 + 2.0 * x2)) < 1e-14);
  }
}

TEST_CASE("true quantiles satisfy duality under the true parameters") {
  const std::vector<double> taus = {0.25, 0.5, 0.9};
  const auto t = dwreg::gen_dw_case(2, DispersionVariant::over, 150, 5, taus);
  for (std::size_t i = 0; i < 150; i += 13) {
    for (std::size_t k = 0; k < taus.size(); ++k) {
      const auto r = static_cast<Eigen::Index>(i);
      const auto kc = static_cast<Eigen::Index>(k);
      const double m = t.true_quantile(r, kc);
      const double c = t.true_c[i];
      const double b = t.true_beta[i];
      CHECK(m == std::floor(m));
      CHECK(dwreg::detail::cdf_rate(m, c, b) >= taus[k]);
      if (m > 0) CHECK(dwreg::detail::cdf_rate(m - 1.0, c, b) < taus[k]);
      CHECK(std::abs(dwreg::detail::cdf_rate(t.true_cont_quantile(r, kc), c,
                                             b) -
                     taus[k]) < 1e-6);
    }
  }

  // nb_tail true quantiles agree with the independent long double scan.
  const auto nb = dwreg::gen_nb_tail(60, 9, {0.5, 0.9});
  for (std::size_t i = 0; i < 60; i += 5) {
    const auto r = static_cast<Eigen::Index>(i);
    CHECK(nb.true_quantile(r, 0) ==
          static_cast<double>(
              oracle::nb_quantile_scan(0.5, nb.true_mu[i], nb.true_sigma[i])));
    CHECK(nb.true_quantile(r, 1) ==
          static_cast<double>(
              oracle::nb_quantile_scan(0.9, nb.true_mu[i], nb.true_sigma[i])));
  }
}

TEST_CASE("draws cover the true conditional median at the right rate") {
  const auto t =
      dwreg::gen_dw_case(1, DispersionVariant::over, 20000, 31, {0.5});
  double covered = 0.0;
  for (std::size_t i = 0; i < 20000; ++i) {
    if (static_cast<double>(t.data.y[i]) <= t.true_quantile(
            static_cast<Eigen::Index>(i), 0)) {
      covered += 1.0;
    }
  }
  covered /= 20000.0;
  // cdf at the integer median is >= 1/2 by definition and bounded away from
  // 1 for these parameter paths.
  CHECK(covered > 0.49);
  CHECK(covered < 0.75);

  const double mean_emp = [&] {
    double s = 0.0;
    for (const auto y : t.data.y) s += static_cast<double>(y);
    return s / 20000.0;
  }();
  double mean_true = 0.0;
  for (std::size_t i = 0; i < 20000; ++i) {
    mean_true +=
        dwreg::mean({std::exp(-t.true_c[i]), t.true_beta[i]}).value;
  }
  mean_true /= 20000.0;
  CHECK(rel_err(mean_emp, mean_true) < 0.05);
}

TEST_CASE("dispersion variants sit on the intended side of poisson") {
  for (double x = 0.0; x <= 1.0 + 1e-12; x += 0.1) {
    const double c1 = std::exp(-5.0 - 3.0 * x);

    const double vr_1a =
        dwreg::dispersion_vs_poisson({std::exp(-c1), std::exp(0.9)}).value;
    CHECK(vr_1a > 1.2);
    CHECK(vr_1a < 6.0);

    const double vr_1b =
        dwreg::dispersion_vs_poisson({std::exp(-c1), std::exp(1.6)}).value;
    CHECK(vr_1b > 0.15);
    CHECK(vr_1b < 0.7);

    const double vr_2a = dwreg::dispersion_vs_poisson(
        {std::exp(-c1), std::exp(0.6 + 0.3 * x)}).value;
    CHECK(vr_2a > 1.0);

    const double vr_2b = dwreg::dispersion_vs_poisson(
        {std::exp(-c1), std::exp(1.1 + 0.5 * x)}).value;
    CHECK(vr_2b < 1.0);
  }
}

TEST_CASE("nb tail draws match their analytic mean") {
  const auto t = dwreg::gen_nb_tail(20000, 41, {});
  double mean_emp = 0.0;
  for (const auto y : t.data.y) mean_emp += static_cast<double>(y);
  mean_emp /= 20000.0;
  double mean_true = 0.0;
  for (const double mu : t.true_mu) mean_true += mu;
  mean_true /= 20000.0;
  CHECK(rel_err(mean_emp, mean_true) < 0.05);
}

TEST_CASE("rmse is the plain root mean square difference") {
  CHECK(dwreg::rmse({1.0, 2.0}, {0.0, 0.0}) ==
        doctest::Approx(std::sqrt(2.5)).epsilon(1e-15));
  CHECK(dwreg::rmse({3.0, 3.0, 3.0}, {3.0, 3.0, 3.0}) == 0.0);
  CHECK_THROWS_AS(dwreg::rmse({1.0}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(dwreg::rmse({}, {}), std::invalid_argument);
}

TEST_CASE("scenario names round trip") {
  for (const auto s : {Scenario::dw_case1, Scenario::dw_case2,
                       Scenario::dw_case3, Scenario::dw_case4,
                       Scenario::nb_tail}) {
    CHECK(dwreg::scenario_from_string(dwreg::to_string(s)) == s);
  }
  CHECK(dwreg::scenario_from_string("1") == Scenario::dw_case1);
  CHECK(dwreg::scenario_from_string("nb") == Scenario::nb_tail);
  CHECK_THROWS_AS(dwreg::scenario_from_string("case9"), std::invalid_argument);
  CHECK_THROWS_AS(dwreg::gen_dw_case(0, DispersionVariant::over, 10, 1, {}),
                  std::invalid_argument);
  CHECK_THROWS_AS(dwreg::gen_dw_case(5, DispersionVariant::over, 10, 1, {}),
                  std::invalid_argument);
}

TEST_CASE("replicate study: shapes, accounting and determinism") {
  ScenarioConfig config;
  config.scenario = Scenario::dw_case1;
  config.variant = DispersionVariant::over;
  config.sample_sizes = {200};
  config.replicates = 3;
  config.seed = 5;
  config.taus = {0.25, 0.5};
  config.models = {"dw", "poisson", "negbin"};
  config.fit_starts = 2;

  const auto rep = dwreg::run_benchmark(config);
  REQUIRE(rep.cells.size() == 3);
  REQUIRE(rep.cells[0].size() == 2);
  REQUIRE(rep.cells[0][0].size() == 1);
  CHECK(rep.wall_seconds.size() == 3);

  for (std::size_t m = 0; m < 3; ++m) {
    for (std::size_t t = 0; t < 2; ++t) {
      const auto& cell = rep.cells[m][t][0];
      REQUIRE(cell.raw.size() == 3);
      CHECK(cell.failures == 0);
      double s = 0.0;
      for (const double v : cell.raw) {
        CHECK(std::isfinite(v));
        CHECK(v >= 0.0);
        s += v;
      }
      CHECK(rel_err(cell.mean_rmse, s / 3.0) < 1e-15);
    }
  }

  const auto again = dwreg::run_benchmark(config);
  for (std::size_t m = 0; m < 3; ++m) {
    for (std::size_t t = 0; t < 2; ++t) {
      CHECK(again.cells[m][t][0].raw == rep.cells[m][t][0].raw);
    }
  }

#ifdef _OPENMP
  const int saved = omp_get_max_threads();
  omp_set_num_threads(3);
  const auto threaded = dwreg::run_benchmark(config);
  omp_set_num_threads(saved);
  for (std::size_t m = 0; m < 3; ++m) {
    for (std::size_t t = 0; t < 2; ++t) {
      CHECK(threaded.cells[m][t][0].raw == rep.cells[m][t][0].raw);
    }
  }
#endif

  ScenarioConfig bad = config;
  bad.replicates = 0;
  CHECK_THROWS_AS(dwreg::run_benchmark(bad), std::invalid_argument);
}

TEST_CASE("one replicate decomposes into generate, fit, predict, score") {
  ScenarioConfig config;
  config.scenario = Scenario::dw_case1;
  config.variant = DispersionVariant::over;
  config.sample_sizes = {300};
  config.replicates = 1;
  config.seed = 5;
  config.taus = {0.5};
  config.models = {"dw"};
  config.fit_starts = 2;
  const auto rep = dwreg::run_benchmark(config);
  const double got = rep.cells[0][0][0].raw[0];

  const auto truth = dwreg::gen_dw_case(
      1, DispersionVariant::over, 300, dwreg::derive_seed(5, 300, 0), {0.5});
  dwreg::ModelSpec spec;
  dwreg::CovariateSpec term;
  term.covariate = "x";
  term.degree = 1;
  spec.q_terms = {term};
  dwreg::FitOptions fo;
  fo.starts = 2;
  fo.seed = 5;
  fo.compute_covariance = false;
  const auto model = dwreg::fit(truth.data, spec, fo);
  REQUIRE(model.converged);
  const auto qp = dwreg::predict_quantile(model, truth.data, 0.5);
  std::vector<double> fitted(qp.value.begin(), qp.value.end());
  std::vector<double> want(300);
  for (int i = 0; i < 300; ++i) want[static_cast<std::size_t>(i)] =
      truth.true_quantile(i, 0);

  CHECK(got == dwreg::rmse(fitted, want));
}
