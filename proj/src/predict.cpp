#include "dwreg/predict.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "dwreg/fit.hpp"
#include "dwreg/likelihood.hpp"

namespace dwreg {

namespace {

struct LinkedRows {
  Eigen::ArrayXd c;
  Eigen::ArrayXd beta;
  std::vector<bool> extrapolated;
};

std::vector<std::string> model_covariates(const FittedModel& model) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  const auto add = [&](const std::vector<CovariateSpec>& terms) {
    for (const auto& t : terms) {
      if (seen.insert(t.covariate).second) out.push_back(t.covariate);
    }
  };
  add(model.spec.q_terms);
  add(model.spec.beta_terms);
  return out;
}

LinkedRows eval_rows(const FittedModel& model, const Dataset& newdata) {
  const Dataset work = model.scaling
                           ? apply_scaling(newdata, *model.scaling)
                           : newdata;
  const DesignMatrix dq = build_design(work, model.spec.q_terms, false);
  const DesignMatrix db = build_design(work, model.spec.beta_terms, false);
  LinkedRows rows;
  const LinkValues lv = link_eval(dq.X, db.X, model.theta, model.vartheta);
  rows.c = lv.c;
  rows.beta = lv.beta;

  rows.extrapolated.assign(work.n(), false);
  for (const auto& name : model_covariates(model)) {
    const auto it = model.covariate_stats.find(name);
    if (it == model.covariate_stats.end()) continue;
    const auto& col = work.column(name);
    for (std::size_t i = 0; i < col.size(); ++i) {
      if (col[i] < it->second.min || col[i] > it->second.max) {
        rows.extrapolated[i] = true;
      }
    }
  }
  return rows;
}

void check_tau(double tau) {
  if (!std::isfinite(tau) || !(tau > 0.0) || !(tau < 1.0)) {
    throw std::domain_error("predict_quantile: tau must lie in (0, 1)");
  }
}

}  // namespace

ParamPrediction predict_params(const FittedModel& model,
                               const Dataset& newdata) {
  const LinkedRows rows = eval_rows(model, newdata);
  ParamPrediction out;
  const auto n = static_cast<std::size_t>(rows.c.size());
  out.params.resize(n);
  out.c.resize(n);
  out.beta.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    out.c[i] = rows.c[idx];
    out.beta[i] = rows.beta[idx];
    out.params[i] = {std::exp(-rows.c[idx]), rows.beta[idx]};
  }
  out.extrapolated = rows.extrapolated;
  return out;
}

QuantilePrediction predict_quantile(const FittedModel& model,
                                    const Dataset& newdata, double tau) {
  check_tau(tau);
  const LinkedRows rows = eval_rows(model, newdata);
  QuantilePrediction out;
  const auto n = static_cast<std::size_t>(rows.c.size());
  out.value.resize(n);
  out.continuous.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    out.value[i] = detail::quantile_rate(tau, rows.c[idx], rows.beta[idx]);
    out.continuous[i] =
        detail::continuous_quantile_rate(tau, rows.c[idx], rows.beta[idx]);
  }
  out.extrapolated = rows.extrapolated;
  return out;
}

std::vector<std::int64_t> predict_median(const FittedModel& model,
                                         const Dataset& newdata) {
  return predict_quantile(model, newdata, 0.5).value;
}

std::vector<double> predict_mean(const FittedModel& model,
                                 const Dataset& newdata,
                                 const MomentOptions& opts) {
  const LinkedRows rows = eval_rows(model, newdata);
  std::vector<double> out(static_cast<std::size_t>(rows.c.size()));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    out[i] = detail::moment_sums(rows.c[idx], rows.beta[idx], opts).m1;
  }
  return out;
}

namespace {

// Continuous tau-quantile at a single covariate profile under coefficient
// vector w = [theta; vartheta].
double profile_quantile(const FittedModel& model,
                        const std::map<std::string, double>& profile,
                        const Eigen::VectorXd& w, double tau) {
  const auto eval_link = [&](const std::vector<CovariateSpec>& terms,
                             Eigen::Index offset, Eigen::Index count) {
    double lp = w[offset];  // intercept
    Eigen::Index at = offset + 1;
    for (const auto& t : terms) {
      const auto row = basis_row(profile.at(t.covariate), t);
      for (const double v : row) lp += w[at++] * v;
    }
    if (at != offset + count) {
      throw std::logic_error("profile_quantile: design width mismatch");
    }
    return lp;
  };
  const auto kq = model.theta.size();
  const double eta = eval_link(model.spec.q_terms, 0, kq);
  const double zeta =
      eval_link(model.spec.beta_terms, kq, model.vartheta.size());
  return detail::continuous_quantile_rate(tau, std::exp(eta),
                                          std::exp(zeta));
}

}  // namespace

EffectTable partial_effects(const FittedModel& model, const Dataset& data,
                            const std::vector<double>& taus) {
  for (const double tau : taus) check_tau(tau);
  const Dataset work =
      model.scaling ? apply_scaling(data, *model.scaling) : data;

  // Baseline profile: continuous covariates at sample means, dummies at 0.
  std::map<std::string, double> base;
  std::map<std::string, bool> is_dummy;
  for (const auto& name : model_covariates(model)) {
    const auto& col = work.column(name);
    double mean = 0.0;
    for (const double v : col) mean += v;
    mean /= static_cast<double>(col.size());
    // The model spec, not the data sample, decides the covariate's kind.
    bool dummy = false;
    for (const auto& t : model.spec.q_terms) {
      if (t.covariate == name) dummy = t.kind == ColumnKind::dummy;
    }
    for (const auto& t : model.spec.beta_terms) {
      if (t.covariate == name) dummy = t.kind == ColumnKind::dummy;
    }
    is_dummy[name] = dummy;
    base[name] = dummy ? 0.0 : mean;
  }

  EffectTable table;
  table.taus = taus;
  table.covariates = model_covariates(model);
  const auto np = static_cast<Eigen::Index>(table.covariates.size());
  const auto nt = static_cast<Eigen::Index>(taus.size());
  table.effect.resize(np, nt);
  table.se.resize(np, nt);
  table.se.setConstant(std::numeric_limits<double>::quiet_NaN());
  table.significant.assign(static_cast<std::size_t>(np),
                           std::vector<bool>(static_cast<std::size_t>(nt),
                                             false));
  table.has_se = model.covariance_available;

  Eigen::VectorXd w(model.theta.size() + model.vartheta.size());
  w << model.theta, model.vartheta;

  for (Eigen::Index p = 0; p < np; ++p) {
    const auto& name = table.covariates[static_cast<std::size_t>(p)];
    auto moved = base;
    moved[name] = is_dummy[name] ? 1.0 : base[name] + 1.0;
    for (Eigen::Index t = 0; t < nt; ++t) {
      const double tau = taus[static_cast<std::size_t>(t)];
      const auto effect_at = [&](const Eigen::VectorXd& coef) {
        return profile_quantile(model, moved, coef, tau) -
               profile_quantile(model, base, coef, tau);
      };
      table.effect(p, t) = effect_at(w);
      if (!model.covariance_available) continue;
      // Delta method with a finite-difference gradient of the effect.
      Eigen::VectorXd grad(w.size());
      const double root = std::cbrt(std::numeric_limits<double>::epsilon());
      Eigen::VectorXd point = w;
      for (Eigen::Index j = 0; j < w.size(); ++j) {
        const double h = root * std::max(1.0, std::abs(w[j]));
        point[j] = w[j] + h;
        const double up = effect_at(point);
        point[j] = w[j] - h;
        const double dn = effect_at(point);
        point[j] = w[j];
        grad[j] = (up - dn) / (2.0 * h);
      }
      const double var = grad.dot(model.covariance * grad);
      if (var >= 0.0 && std::isfinite(var)) {
        table.se(p, t) = std::sqrt(var);
        table.significant[static_cast<std::size_t>(p)]
                         [static_cast<std::size_t>(t)] =
            std::abs(table.effect(p, t)) > 1.96 * table.se(p, t);
      }
    }
  }
  return table;
}

Interpretation interpret_coefficients(const FittedModel& model) {
  Interpretation out;
  const bool beta_constant = model.spec.beta_terms.empty();
  bool q_linear = true;
  for (const auto& t : model.spec.q_terms) {
    q_linear = q_linear && t.degree <= 1 && t.num_knots == 0;
  }
  if (!beta_constant || !q_linear) {
    out.note =
        "closed-form reading unavailable: it requires a constant shape and "
        "purely linear q-link terms";
    return out;
  }
  out.applicable = true;
  const double beta = std::exp(model.vartheta[0]);
  const double loglog2 = std::log(std::log(2.0));
  out.baseline_log_median1 = (loglog2 - model.theta[0]) / beta;
  for (Eigen::Index j = 1; j < model.theta.size(); ++j) {
    out.unit_shifts.emplace_back(
        model.theta_labels[static_cast<std::size_t>(j)],
        -model.theta[j] / beta);
  }
  out.note =
      "log(median + 1) approximation: the reading drops the ceiling to the "
      "integer grid";
  return out;
}

}  // namespace dwreg
