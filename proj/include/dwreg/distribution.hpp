#pragma once

#include <cstdint>
#include <vector>

namespace dwreg {

// Discrete Weibull (type 1) parameters:
//   P(Y <= y) = 1 - q^((y+1)^beta),  y = 0, 1, 2, ...
// with 0 < q < 1 and beta > 0. q is the survival mass past zero
// (P(Y >= 1) = q) and beta controls the tail shape.
struct DWParams {
  double q;
  double beta;
};

// Throws std::domain_error unless 0 < q < 1 and beta > 0 (both finite).
void validate(const DWParams& p);

struct MomentOptions {
  // Stop the tail sum once terms drop below this size.
  double tail_tolerance = 1e-14;
  // Hard cap on the number of summed terms; hitting it sets `truncated`.
  std::int64_t max_support = 10000000;
};

struct MomentResult {
  double value = 0.0;
  bool truncated = false;
};

// pmf / cdf return 0 for y < 0.
double pmf(std::int64_t y, const DWParams& p);
double log_pmf(std::int64_t y, const DWParams& p);
double cdf(std::int64_t y, const DWParams& p);

// Smallest integer m with cdf(m) >= tau. Requires 0 < tau < 1.
std::int64_t quantile(double tau, const DWParams& p);

// Real-valued solution mu of 1 - q^((mu+1)^beta) = tau; may be negative when
// tau < pmf(0). quantile() equals max(0, ceil(continuous_quantile())).
double continuous_quantile(double tau, const DWParams& p);

std::int64_t median(const DWParams& p);

// First two moments by tail summation of the survival function:
//   E[Y] = sum_{y>=1} q^(y^beta),  E[Y^2] = sum_{y>=1} (2y-1) q^(y^beta).
MomentResult mean(const DWParams& p, const MomentOptions& opts = {});
MomentResult variance(const DWParams& p, const MomentOptions& opts = {});

// variance / mean; > 1 means over-dispersed relative to Poisson.
// Throws std::domain_error when the mean is numerically zero.
MomentResult dispersion_vs_poisson(const DWParams& p,
                                   const MomentOptions& opts = {});

// n inverse-cdf draws. The generator is owned by the call: the same
// (p, n, seed) triple always yields the same vector.
std::vector<std::int64_t> sample(const DWParams& p, std::size_t n,
                                 std::uint64_t seed);

// Log-likelihood of counts viewed as interval-censored continuous Weibull
// lifetimes: each count y contributes log(F_W(y+1) - F_W(y)) where
// F_W(t) = 1 - exp(-c t^beta) and c = -log q. Deliberately computed from
// cdf differences rather than through log_pmf; the two routes agreeing is a
// correctness check on both.
double interval_censored_weibull_loglik(const std::vector<std::int64_t>& y,
                                        const DWParams& p);

namespace detail {

// Rate-form kernels, c = -log q = exp(eta). The regression layer works on
// this scale throughout: for strongly negative eta, q = exp(-exp(eta))
// rounds to 1.0 in doubles and all tail information is lost, while c keeps
// full precision.

// log(1 - exp(x)) for x <= 0, stable near both ends.
double log1m_exp(double x);

// y^beta for integer-valued y >= 0.
double pow_yb(double y, double beta);
// (y+1)^beta - y^beta computed without cancellation; t0 must be
// pow_yb(y, beta).
double pow_gap(double y, double beta, double t0);

double pmf_rate(double y, double c, double beta);
double log_pmf_rate(double y, double c, double beta);
double cdf_rate(double y, double c, double beta);
double continuous_quantile_rate(double tau, double c, double beta);
std::int64_t quantile_rate(double tau, double c, double beta);

// E[Y] and E[Y^2] tail sums; the deterministic chunked kernel used by the
// public moment functions. `serial` selects the plain reference loop.
struct MomentSums {
  double m1 = 0.0;
  double m2 = 0.0;
  bool truncated = false;
};
MomentSums moment_sums(double c, double beta, const MomentOptions& opts);
MomentSums moment_sums_serial(double c, double beta, const MomentOptions& opts);

}  // namespace detail

}  // namespace dwreg
