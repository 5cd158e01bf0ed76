#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cmath>
#include <random>
#include <vector>

#include "dwreg/basis.hpp"
#include "dwreg/likelihood.hpp"
#include "dwreg/rng.hpp"
#include "dwreg/simulation.hpp"
#include "oracle.hpp"

using dwreg::DwNegLoglik;
using oracle::rel_err;

namespace {

struct Problem {
  Eigen::VectorXd y;
  Eigen::MatrixXd aq;
  Eigen::MatrixXd ab;
};

// Draws a stable synthetic problem: counts from the model itself at mild
// coefficients, designs with an intercept plus standard-normal covariates.
Problem make_problem(Eigen::Index n, Eigen::Index kq, Eigen::Index kb,
                     std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z(0.0, 0.6);
  Problem pr;
  pr.aq.setOnes(n, kq);
  pr.ab.setOnes(n, kb);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 1; j < kq; ++j) pr.aq(i, j) = z(gen);
    for (Eigen::Index j = 1; j < kb; ++j) pr.ab(i, j) = z(gen);
  }
  pr.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = std::exp(0.2 + 0.4 * (kq > 1 ? pr.aq(i, 1) : 0.0));
    const double beta = std::exp(0.3 + 0.2 * (kb > 1 ? pr.ab(i, 1) : 0.0));
    const auto s = dwreg::sample({std::exp(-c), beta}, 1,
                                 dwreg::derive_seed(seed, 0, i));
    pr.y(i) = static_cast<double>(s[0]);
  }
  return pr;
}

Eigen::VectorXd random_point(const DwNegLoglik& nll, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  Eigen::VectorXd w(nll.dim());
  for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = u(gen);
  // Keep the intercepts in a region where every count keeps mass.
  w(0) = u(gen) - 0.3;
  w(nll.dim_q()) = 0.3 * u(gen);
  return w;
}

}  // namespace

TEST_CASE("row score matches frozen reference values") {
  const auto s = dwreg::detail::dw_row_score(3.0, -0.4, 0.3);
  CHECK(rel_err(s.logp, -3.23612098834867122192) < 1e-14);
  CHECK(rel_err(s.dl_deta, -2.49561671521514839126) < 1e-14);
  CHECK(rel_err(s.dl_dzeta, -3.14846975706037310697) < 1e-14);

  // y = 0 rows carry no shape information.
  const auto z = dwreg::detail::dw_row_score(0.0, 0.1, -0.2);
  CHECK(z.dl_dzeta == 0.0);
  CHECK(rel_err(z.logp, std::log(-std::expm1(-std::exp(0.1)))) < 1e-13);
}

TEST_CASE("two-point likelihood matches the frozen value") {
  Eigen::VectorXd y(2);
  y << 0.0, 1.0;
  Eigen::MatrixXd aq = Eigen::MatrixXd::Ones(2, 1);
  Eigen::MatrixXd ab = Eigen::MatrixXd::Ones(2, 1);
  Eigen::VectorXd theta(1), vartheta(1);
  theta << -0.3;
  vartheta << 0.2;

  const double want = 1.85503744806314966849;
  CHECK(rel_err(dwreg::neg_loglik(y, aq, ab, theta, vartheta), want) < 1e-14);
  CHECK(rel_err(dwreg::neg_loglik_serial(y, aq, ab, theta, vartheta), want) <
        1e-14);

  DwNegLoglik nll(y, aq, ab);
  Eigen::VectorXd w(2);
  w << -0.3, 0.2;
  CHECK(rel_err(nll.value(w), want) < 1e-14);
  CHECK(nll.value(w) == nll.value_serial(w));

  // Same value through the public distribution API.
  const double c = std::exp(-0.3);
  const dwreg::DWParams p{std::exp(-c), std::exp(0.2)};
  const double direct = -dwreg::log_pmf(0, p) - dwreg::log_pmf(1, p);
  CHECK(rel_err(nll.value(w), direct) < 1e-13);
}

TEST_CASE("link evaluation") {
  Eigen::MatrixXd aq(2, 2), ab(2, 1);
  aq << 1.0, 0.0, 1.0, 2.0;
  ab << 1.0, 1.0;
  Eigen::VectorXd theta(2), vartheta(1);
  theta << -5.0, 1.0;
  vartheta << 0.25;

  const auto lv = dwreg::link_eval(aq, ab, theta, vartheta);
  CHECK(rel_err(lv.c(0), std::exp(-5.0)) < 1e-15);
  CHECK(rel_err(lv.c(1), std::exp(-3.0)) < 1e-15);
  CHECK(rel_err(lv.beta(0), std::exp(0.25)) < 1e-15);

  const auto params = dwreg::link_params(aq, ab, theta, vartheta);
  REQUIRE(params.size() == 2);
  CHECK(rel_err(params[0].q, 0.993284702067841489603) < 1e-15);
  CHECK(rel_err(params[0].beta, std::exp(0.25)) < 1e-15);
  CHECK(rel_err(params[1].q, std::exp(-std::exp(-3.0))) < 1e-15);

  // Non-finite predictor names the offending row.
  theta << 710.0, 0.0;  // exp overflows double
  CHECK_THROWS_AS(dwreg::link_eval(aq, ab, theta, vartheta),
                  std::overflow_error);
}

TEST_CASE("value equals the sum of log pmfs through the public api") {
  const auto pr = make_problem(300, 2, 2, 41);
  DwNegLoglik nll(pr.y, pr.aq, pr.ab);
  Eigen::VectorXd w(4);
  w << 0.1, 0.3, 0.25, -0.15;

  const auto params = dwreg::link_params(pr.aq, pr.ab, w.head(2), w.tail(2));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < pr.y.size(); ++i) {
    acc -= dwreg::log_pmf(static_cast<std::int64_t>(pr.y(i)),
                          params[static_cast<std::size_t>(i)]);
  }
  CHECK(rel_err(nll.value(w), acc) < 1e-12);
}

TEST_CASE("analytic gradient agrees with finite differences") {
  std::mt19937_64 gen(2024);
  const struct {
    Eigen::Index n, kq, kb;
  } shapes[] = {{40, 1, 1}, {60, 3, 2}, {80, 2, 3}};

  int points = 0;
  for (const auto& sh : shapes) {
    const auto pr = make_problem(sh.n, sh.kq, sh.kb,
                                 static_cast<std::uint64_t>(sh.n));
    DwNegLoglik nll(pr.y, pr.aq, pr.ab);
    for (int rep = 0; rep < 17 && points < 50; ++rep, ++points) {
      const auto w = random_point(nll, gen);
      Eigen::VectorXd grad(nll.dim());
      const double v = nll.value_and_grad(w, grad);
      REQUIRE(std::isfinite(v));

      const auto fd5 = nll.fd_gradient_highorder(w);
      const auto fd2 = nll.fd_gradient(w);
      for (Eigen::Index j = 0; j < nll.dim(); ++j) {
        const double scale =
            std::max({std::abs(grad(j)), std::abs(fd5(j)), 1.0});
        CHECK(std::abs(grad(j) - fd5(j)) / scale < 1e-5);
        CHECK(std::abs(grad(j) - fd2(j)) / scale < 1e-4);
      }
    }
  }
  CHECK(points == 50);
}

TEST_CASE("gradient agreement on a spline design") {
  const auto truth =
      dwreg::gen_dw_case(3, dwreg::DispersionVariant::over, 150, 7, {});
  dwreg::CovariateSpec sq;
  sq.covariate = "x";
  sq.degree = 3;
  sq.num_knots = 3;
  sq.knots = {0.25, 0.5, 0.75};
  dwreg::CovariateSpec sb;
  sb.covariate = "x";
  sb.degree = 1;
  const auto dq = dwreg::build_design(truth.data, {sq});
  const auto db = dwreg::build_design(truth.data, {sb});

  Eigen::VectorXd y(truth.data.n());
  for (std::size_t i = 0; i < truth.data.n(); ++i) y(i) = truth.data.y[i];
  DwNegLoglik nll(y, dq.X, db.X);

  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int rep = 0; rep < 8; ++rep) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(nll.dim());
    for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = 0.3 * u(gen);
    w(0) = -1.0 + u(gen);
    Eigen::VectorXd grad(nll.dim());
    const double v = nll.value_and_grad(w, grad);
    REQUIRE(std::isfinite(v));
    const auto fd5 = nll.fd_gradient_highorder(w);
    for (Eigen::Index j = 0; j < nll.dim(); ++j) {
      const double scale = std::max({std::abs(grad(j)), std::abs(fd5(j)), 1.0});
      CHECK(std::abs(grad(j) - fd5(j)) / scale < 1e-5);
    }
  }
}

TEST_CASE("parallel and serial kernels agree") {
  const auto pr = make_problem(4000, 3, 2, 99);
  DwNegLoglik nll(pr.y, pr.aq, pr.ab);
  std::mt19937_64 gen(8);

  for (int rep = 0; rep < 6; ++rep) {
    const auto w = random_point(nll, gen);
    Eigen::VectorXd gp(nll.dim()), gs(nll.dim());
    const double vp = nll.value_and_grad(w, gp);
    const double vs = nll.value_and_grad_serial(w, gs);
    CHECK(rel_err(vp, vs) < 1e-12);
    for (Eigen::Index j = 0; j < nll.dim(); ++j) {
      CHECK(std::abs(gp(j) - gs(j)) <=
            1e-11 * std::max(1.0, std::abs(gs(j))));
    }
    CHECK(nll.value(w) == vp);
  }

#ifdef _OPENMP
  // Chunked in-order reduction: bitwise identical for any thread count.
  const auto w = random_point(nll, gen);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  Eigen::VectorXd g1(nll.dim());
  const double v1 = nll.value_and_grad(w, g1);
  omp_set_num_threads(3);
  Eigen::VectorXd g3(nll.dim());
  const double v3 = nll.value_and_grad(w, g3);
  omp_set_num_threads(saved);
  CHECK(v1 == v3);
  CHECK(g1 == g3);
#endif
}

TEST_CASE("impossible regions evaluate to +inf with a zero gradient") {
  const auto pr = make_problem(50, 2, 1, 3);
  DwNegLoglik nll(pr.y, pr.aq, pr.ab);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(nll.dim());
  w(0) = -750.0;  // c underflows to 0, so every row has zero probability
  w(nll.dim_q()) = 0.0;
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(nll.dim(), 123.0);
  const double v = nll.value_and_grad(w, grad);
  CHECK(std::isinf(v));
  CHECK(v > 0);
  CHECK(grad.norm() == 0.0);
  CHECK(std::isinf(nll.value(w)));
  CHECK(std::isinf(nll.value_serial(w)));
}

TEST_CASE("constructor validates dimensions") {
  Eigen::VectorXd y(3);
  y << 0, 1, 2;
  const Eigen::MatrixXd ok = Eigen::MatrixXd::Ones(3, 2);
  const Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(4, 2);
  CHECK_THROWS_AS(DwNegLoglik(y, bad, ok), std::invalid_argument);
  CHECK_THROWS_AS(DwNegLoglik(y, ok, bad), std::invalid_argument);
  CHECK_NOTHROW(DwNegLoglik(y, ok, ok));
}
