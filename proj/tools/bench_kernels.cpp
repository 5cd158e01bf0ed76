// Timing harness for the two hot kernels, each of which ships in a chunked
// parallel form plus a plain serial reference: the moment tail sums and the
// negative log-likelihood with gradient. Prints per-kernel timings, the
// speedup, and the relative disagreement between the two routes.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <Eigen/Dense>

#include "dwreg/basis.hpp"
#include "dwreg/distribution.hpp"
#include "dwreg/likelihood.hpp"
#include "dwreg/simulation.hpp"

namespace {

double best_of(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

double rel_diff(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

void print_row(const char* name, double serial_s, double parallel_s,
               double diff) {
  std::printf("%-36s %12.3f %12.3f %9.2fx %12.3e\n", name, serial_s * 1e3,
              parallel_s * 1e3, serial_s / std::max(parallel_s, 1e-12), diff);
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t n = 200000;
  int reps = 5;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--n") == 0 && i + 1 < argc) {
      n = static_cast<std::size_t>(std::strtoull(argv[++i], nullptr, 10));
    } else if (std::strcmp(argv[i], "--reps") == 0 && i + 1 < argc) {
      reps = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--n rows] [--reps repetitions]\n",
                   argv[0]);
      return 2;
    }
  }

#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (built without OpenMP)\n");
#endif
  std::printf("%-36s %12s %12s %10s %12s\n", "kernel", "serial_ms",
              "parallel_ms", "speedup", "max_rel_diff");

  // Heavy-tailed moment sums: small rate and shape below one stretch the
  // summation to millions of terms.
  {
    const dwreg::MomentOptions opts;
    const struct {
      const char* name;
      double c;
      double beta;
    } cases[] = {
        {"moments c=1e-4 beta=0.5", 1e-4, 0.5},
        {"moments c=1e-5 beta=0.7", 1e-5, 0.7},
        {"moments c=0.05 beta=1.0", 0.05, 1.0},
    };
    for (const auto& k : cases) {
      dwreg::detail::MomentSums serial_out, parallel_out;
      const double ts = best_of(reps, [&] {
        serial_out = dwreg::detail::moment_sums_serial(k.c, k.beta, opts);
      });
      const double tp = best_of(reps, [&] {
        parallel_out = dwreg::detail::moment_sums(k.c, k.beta, opts);
      });
      const double diff = std::max(rel_diff(serial_out.m1, parallel_out.m1),
                                   rel_diff(serial_out.m2, parallel_out.m2));
      print_row(k.name, ts, tp, diff);
    }
  }

  // Regression likelihood and gradient on a simulated spline-link dataset.
  {
    const auto truth = dwreg::gen_dw_case(3, dwreg::DispersionVariant::over,
                                          n, 42, {});
    std::vector<dwreg::CovariateSpec> q_terms{
        {"x", dwreg::ColumnKind::continuous, 3, 3, {0.25, 0.5, 0.75}}};
    std::vector<dwreg::CovariateSpec> b_terms{
        {"x", dwreg::ColumnKind::continuous, 1, 0, {}}};
    const auto dq = dwreg::build_design(truth.data, q_terms);
    const auto db = dwreg::build_design(truth.data, b_terms);
    Eigen::VectorXd y(static_cast<Eigen::Index>(truth.data.n()));
    for (std::size_t i = 0; i < truth.data.n(); ++i) {
      y[static_cast<Eigen::Index>(i)] = static_cast<double>(truth.data.y[i]);
    }
    const dwreg::DwNegLoglik nll(y, dq.X, db.X);

    Eigen::VectorXd w = Eigen::VectorXd::Zero(nll.dim());
    w[0] = -1.2;
    w[1] = -0.8;
    w[nll.dim_q()] = 0.1;

    Eigen::VectorXd gs(nll.dim()), gp(nll.dim());
    double fs = 0.0, fp = 0.0;
    const std::string name =
        "nll+grad n=" + std::to_string(truth.data.n());
    const double ts =
        best_of(reps, [&] { fs = nll.value_and_grad_serial(w, gs); });
    const double tp = best_of(reps, [&] { fp = nll.value_and_grad(w, gp); });
    double diff = rel_diff(fs, fp);
    for (Eigen::Index j = 0; j < nll.dim(); ++j) {
      diff = std::max(diff, rel_diff(gs[j], gp[j]));
    }
    print_row(name.c_str(), ts, tp, diff);
  }
  return 0;
}
