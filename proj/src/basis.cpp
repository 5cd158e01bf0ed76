#include "dwreg/basis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dwreg {

void validate(const CovariateSpec& spec) {
  if (spec.covariate.empty()) {
    throw std::invalid_argument("CovariateSpec: covariate name is empty");
  }
  if (spec.degree < 0) {
    throw std::invalid_argument("CovariateSpec: degree must be >= 0 for '" +
                                spec.covariate + "'");
  }
  if (spec.num_knots < 0) {
    throw std::invalid_argument(
        "CovariateSpec: num_knots must be >= 0 for '" + spec.covariate + "'");
  }
  if (spec.kind == ColumnKind::dummy &&
      (spec.degree > 1 || spec.num_knots > 0)) {
    throw std::invalid_argument("CovariateSpec: dummy covariate '" +
                                spec.covariate +
                                "' only supports a linear term");
  }
  if (spec.num_knots > 0 && spec.degree == 0) {
    throw std::invalid_argument(
        "CovariateSpec: knots require a positive degree for '" +
        spec.covariate + "'");
  }
  if (!spec.knots.empty() &&
      spec.knots.size() != static_cast<std::size_t>(spec.num_knots)) {
    throw std::invalid_argument(
        "CovariateSpec: knot list length disagrees with num_knots for '" +
        spec.covariate + "'");
  }
  for (std::size_t j = 0; j < spec.knots.size(); ++j) {
    if (!std::isfinite(spec.knots[j]) ||
        (j > 0 && !(spec.knots[j] > spec.knots[j - 1]))) {
      throw std::invalid_argument(
          "CovariateSpec: knots must be finite and strictly increasing for '" +
          spec.covariate + "'");
    }
  }
}

bool knots_resolved(const CovariateSpec& spec) {
  return spec.num_knots == 0 ||
         spec.knots.size() == static_cast<std::size_t>(spec.num_knots);
}

namespace {

double type7_quantile(const std::vector<double>& sorted, double p) {
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

std::vector<double> place_knots(const std::vector<double>& x, int num_knots) {
  if (num_knots <= 0) return {};
  if (x.size() < 2) {
    throw DataError("place_knots: need at least two observations");
  }
  std::vector<double> sorted(x);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct(sorted);
  distinct.erase(std::unique(distinct.begin(), distinct.end()),
                 distinct.end());
  if (distinct.size() < static_cast<std::size_t>(num_knots) + 2) {
    throw DataError("place_knots: " + std::to_string(num_knots) +
                    " knots need at least " + std::to_string(num_knots + 2) +
                    " distinct values, have " +
                    std::to_string(distinct.size()));
  }

  std::vector<double> knots;
  knots.reserve(static_cast<std::size_t>(num_knots));
  double prev = distinct.front();
  for (int j = 1; j <= num_knots; ++j) {
    double cand =
        type7_quantile(sorted, static_cast<double>(j) / (num_knots + 1));
    if (cand <= prev || cand >= distinct.back()) {
      // Tied data pushed the quantile onto an already-used or boundary
      // value; fall back to the midpoint of the first distinct gap above the
      // previous knot.
      const auto it =
          std::upper_bound(distinct.begin(), distinct.end(), prev);
      if (it == distinct.end() || it + 1 == distinct.end()) {
        throw DataError(
            "place_knots: not enough distinct values to separate knots");
      }
      cand = 0.5 * (*it + *(it + 1));
    }
    knots.push_back(cand);
    prev = cand;
  }
  return knots;
}

CovariateSpec resolve_spec(const CovariateSpec& spec,
                           const std::vector<double>& x) {
  validate(spec);
  if (knots_resolved(spec)) return spec;
  CovariateSpec out = spec;
  out.knots = place_knots(x, spec.num_knots);
  return out;
}

std::vector<double> basis_row(double x, const CovariateSpec& spec) {
  std::vector<double> row;
  row.reserve(static_cast<std::size_t>(spec.degree) + spec.knots.size());
  double power = 1.0;
  for (int d = 1; d <= spec.degree; ++d) {
    power *= x;
    row.push_back(power);
  }
  for (const double g : spec.knots) {
    // Strictly one-sided: the column is 0 at x == g, which together with the
    // degree-D power keeps the expansion C^(D-1) across the knot.
    row.push_back(x > g ? std::pow(x - g, spec.degree) : 0.0);
  }
  return row;
}

Eigen::MatrixXd basis_columns(const std::vector<double>& x,
                              const CovariateSpec& spec) {
  validate(spec);
  if (!knots_resolved(spec)) {
    throw std::invalid_argument("basis_columns: unresolved knots for '" +
                                spec.covariate + "'");
  }
  const auto n = static_cast<Eigen::Index>(x.size());
  const auto m =
      static_cast<Eigen::Index>(spec.degree + static_cast<int>(spec.knots.size()));
  Eigen::MatrixXd block(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = basis_row(x[static_cast<std::size_t>(i)], spec);
    for (Eigen::Index j = 0; j < m; ++j) {
      block(i, j) = row[static_cast<std::size_t>(j)];
    }
  }
  return block;
}

std::vector<std::string> basis_labels(const CovariateSpec& spec) {
  std::vector<std::string> labels;
  for (int d = 1; d <= spec.degree; ++d) {
    labels.push_back(d == 1 ? spec.covariate
                            : spec.covariate + "^" + std::to_string(d));
  }
  for (std::size_t j = 0; j < spec.knots.size(); ++j) {
    labels.push_back(spec.covariate + ".k" + std::to_string(j + 1));
  }
  return labels;
}

DesignMatrix build_design(const Dataset& data,
                          const std::vector<CovariateSpec>& specs,
                          bool check_kinds) {
  const auto n = static_cast<Eigen::Index>(data.n());
  Eigen::Index m = 1;
  for (const auto& spec : specs) {
    validate(spec);
    if (!knots_resolved(spec)) {
      throw std::invalid_argument("build_design: unresolved knots for '" +
                                  spec.covariate + "'");
    }
    m += spec.degree + static_cast<int>(spec.knots.size());
  }

  DesignMatrix design;
  design.X.resize(n, m);
  design.X.col(0).setOnes();
  design.labels.assign(1, "(Intercept)");

  Eigen::Index at = 1;
  for (const auto& spec : specs) {
    const auto& col = data.column(spec.covariate);
    if (check_kinds && data.kind(spec.covariate) != spec.kind) {
      throw DataError("covariate '" + spec.covariate +
                      "' kind disagrees with the dataset");
    }
    const Eigen::Index w = spec.degree + static_cast<int>(spec.knots.size());
    if (w > 0) {
      design.X.block(0, at, n, w) = basis_columns(col, spec);
    }
    const auto labels = basis_labels(spec);
    design.labels.insert(design.labels.end(), labels.begin(), labels.end());
    at += w;
  }
  return design;
}

}  // namespace dwreg
