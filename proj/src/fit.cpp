#include "dwreg/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "dwreg/likelihood.hpp"
#include "dwreg/rng.hpp"

namespace dwreg {

void validate(const ModelSpec& spec) {
  const auto check = [](const std::vector<CovariateSpec>& terms,
                        const char* which) {
    std::set<std::string> seen;
    for (const auto& t : terms) {
      validate(t);
      if (!seen.insert(t.covariate).second) {
        throw std::invalid_argument(std::string("ModelSpec: covariate '") +
                                    t.covariate + "' listed twice for " +
                                    which);
      }
    }
  };
  check(spec.q_terms, "q");
  check(spec.beta_terms, "beta");
}

namespace detail {

std::vector<Eigen::Index> independent_columns(
    const Eigen::MatrixXd& x, std::vector<Eigen::Index>* aliased) {
  const Eigen::Index n = x.rows();
  std::vector<Eigen::Index> keep;
  Eigen::MatrixXd q(n, std::min(n, x.cols()));
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    Eigen::VectorXd r = x.col(j);
    const double norm0 = r.norm();
    if (k > 0) {
      r -= q.leftCols(k) * (q.leftCols(k).transpose() * r);
      // Second orthogonalization pass keeps the basis usable when columns
      // are nearly dependent.
      r -= q.leftCols(k) * (q.leftCols(k).transpose() * r);
    }
    if (r.norm() <= 1e-8 * norm0 + 1e-300 || k >= n) {
      if (aliased) aliased->push_back(j);
      continue;
    }
    q.col(k++) = r / r.norm();
    keep.push_back(j);
  }
  return keep;
}

}  // namespace detail

Dataset apply_scaling(const Dataset& data, const ScalingRecord& record) {
  Dataset out = data;
  for (std::size_t j = 0; j < out.names.size(); ++j) {
    const auto it = record.ranges.find(out.names[j]);
    if (it == record.ranges.end()) continue;
    const double lo = it->second.first;
    const double span = it->second.second - it->second.first;
    for (double& v : out.columns[j]) {
      v = span > 0.0 ? (v - lo) / span : v - lo;
    }
  }
  return out;
}

namespace {

ScalingRecord make_scaling(const Dataset& data, const ModelSpec& spec) {
  ScalingRecord rec;
  const auto add = [&](const std::vector<CovariateSpec>& terms) {
    for (const auto& t : terms) {
      if (t.kind != ColumnKind::continuous) continue;
      const auto& col = data.column(t.covariate);
      const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
      rec.ranges[t.covariate] = {*lo, *hi};
    }
  };
  add(spec.q_terms);
  add(spec.beta_terms);
  return rec;
}

std::map<std::string, CovariateStats> collect_stats(const Dataset& data,
                                                    const ModelSpec& spec) {
  std::map<std::string, CovariateStats> out;
  const auto add = [&](const std::vector<CovariateSpec>& terms) {
    for (const auto& t : terms) {
      if (out.count(t.covariate)) continue;
      const auto& col = data.column(t.covariate);
      CovariateStats st;
      st.min = *std::min_element(col.begin(), col.end());
      st.max = *std::max_element(col.begin(), col.end());
      st.mean = 0.0;
      for (const double v : col) st.mean += v;
      st.mean /= static_cast<double>(col.size());
      out[t.covariate] = st;
    }
  };
  add(spec.q_terms);
  add(spec.beta_terms);
  return out;
}

std::vector<CovariateSpec> resolve_terms(const std::vector<CovariateSpec>& in,
                                         const Dataset& data) {
  std::vector<CovariateSpec> out;
  out.reserve(in.size());
  for (const auto& t : in) out.push_back(resolve_spec(t, data.column(t.covariate)));
  return out;
}

double initial_q_intercept(const std::vector<std::int64_t>& y) {
  double zeros = 0.0;
  for (const auto v : y) zeros += v == 0 ? 1.0 : 0.0;
  const double q0 =
      std::clamp(1.0 - zeros / static_cast<double>(y.size()), 0.01, 0.99);
  return std::log(-std::log(q0));
}

void apply_overrides(Eigen::VectorXd& w, Eigen::Index offset,
                     const std::vector<std::string>& labels,
                     const std::map<std::string, double>& init) {
  for (std::size_t j = 0; j < labels.size(); ++j) {
    const auto it = init.find(labels[j]);
    if (it != init.end()) w[offset + static_cast<Eigen::Index>(j)] = it->second;
  }
}

}  // namespace

FittedModel fit(const Dataset& data, const ModelSpec& spec,
                const FitOptions& opts) {
  validate(spec);
  if (data.n() == 0) throw DataError("fit: dataset is empty");

  FittedModel model;
  model.n = static_cast<std::int64_t>(data.n());

  Dataset working = data;
  if (opts.scale_covariates) {
    const ScalingRecord rec = make_scaling(data, spec);
    working = apply_scaling(data, rec);
    model.scaling = rec;
  }

  model.spec.q_terms = resolve_terms(spec.q_terms, working);
  model.spec.beta_terms = resolve_terms(spec.beta_terms, working);
  model.covariate_stats = collect_stats(working, model.spec);

  const DesignMatrix dq = build_design(working, model.spec.q_terms);
  const DesignMatrix db = build_design(working, model.spec.beta_terms);
  model.theta_labels = dq.labels;
  model.vartheta_labels = db.labels;
  const Eigen::Index kq = dq.X.cols();
  const Eigen::Index kb = db.X.cols();

  if (static_cast<Eigen::Index>(data.n()) <= kq + kb) {
    throw DataError("fit: " + std::to_string(kq + kb) +
                    " coefficients need more than " +
                    std::to_string(data.n()) + " observations");
  }

  // Rank screen per design; dependent columns are pinned at zero.
  std::vector<Eigen::Index> aliased_q, aliased_b;
  const auto keep_q = detail::independent_columns(dq.X, &aliased_q);
  const auto keep_b = detail::independent_columns(db.X, &aliased_b);
  for (const auto j : aliased_q) {
    model.aliased.push_back("q:" + dq.labels[static_cast<std::size_t>(j)]);
  }
  for (const auto j : aliased_b) {
    model.aliased.push_back("beta:" + db.labels[static_cast<std::size_t>(j)]);
  }

  // Initial point: intercepts from the marginal zero proportion (q) and the
  // fixed or default shape, everything else zero, then warm-start overrides.
  Eigen::VectorXd w0 = Eigen::VectorXd::Zero(kq + kb);
  w0[0] = initial_q_intercept(data.y);
  w0[kq] = opts.fix_beta ? opts.fixed_log_beta : 0.0;
  apply_overrides(w0, 0, dq.labels, opts.init_q);
  apply_overrides(w0, kq, db.labels, opts.init_b);

  std::vector<Eigen::Index> free_idx;
  for (const auto j : keep_q) free_idx.push_back(j);
  if (!opts.fix_beta) {
    for (const auto j : keep_b) free_idx.push_back(kq + j);
  }
  const auto nfree = static_cast<Eigen::Index>(free_idx.size());
  model.n_free_params = static_cast<int>(nfree);
  model.beta_fixed = opts.fix_beta;

  Eigen::VectorXd y(static_cast<Eigen::Index>(data.n()));
  for (std::size_t i = 0; i < data.n(); ++i) {
    y[static_cast<Eigen::Index>(i)] = static_cast<double>(data.y[i]);
  }
  const DwNegLoglik nll(y, dq.X, db.X);

  Eigen::VectorXd base = w0;
  for (const auto j : aliased_q) base[j] = 0.0;
  for (const auto j : aliased_b) base[kq + j] = 0.0;

  const auto embed = [&](const Eigen::VectorXd& red) {
    Eigen::VectorXd w = base;
    for (Eigen::Index j = 0; j < nfree; ++j) w[free_idx[static_cast<std::size_t>(j)]] = red[j];
    return w;
  };
  Eigen::VectorXd grad_full(kq + kb);
  const Objective objective = [&](const Eigen::VectorXd& red,
                                  Eigen::VectorXd& grad) {
    const double f = nll.value_and_grad(embed(red), grad_full);
    grad.resize(nfree);
    for (Eigen::Index j = 0; j < nfree; ++j) {
      grad[j] = grad_full[free_idx[static_cast<std::size_t>(j)]];
    }
    return f;
  };

  Eigen::VectorXd red0(nfree);
  for (Eigen::Index j = 0; j < nfree; ++j) {
    red0[j] = base[free_idx[static_cast<std::size_t>(j)]];
  }

  OptimResult best;
  bool have_best = false;
  const int starts = std::max(1, opts.starts);
  for (int s = 0; s < starts; ++s) {
    Eigen::VectorXd start = red0;
    if (s > 0) {
      std::mt19937_64 gen(derive_seed(opts.seed, 1000 + static_cast<std::uint64_t>(s)));
      for (Eigen::Index j = 0; j < nfree; ++j) {
        start[j] += uniform_open01(gen) - 0.5;
      }
    }
    OptimResult res = minimize_bfgs(objective, start, opts.optim);
    const bool better =
        !have_best ||
        (res.converged && !best.converged) ||
        (res.converged == best.converged && res.fval < best.fval);
    if (better) {
      best = std::move(res);
      have_best = true;
    }
  }

  const Eigen::VectorXd w_hat = embed(best.x);
  model.theta = w_hat.head(kq);
  model.vartheta = w_hat.tail(kb);
  model.converged = best.converged && std::isfinite(best.fval);
  model.loglik = -best.fval;
  model.aic = 2.0 * best.fval + 2.0 * static_cast<double>(nfree);

  if (opts.compute_covariance && std::isfinite(best.fval)) {
    // Observed information via central differences of the analytic
    // gradient on the free coordinates.
    const double root = std::cbrt(std::numeric_limits<double>::epsilon());
    Eigen::MatrixXd hess(nfree, nfree);
    Eigen::VectorXd gp(nfree), gm(nfree), point(nfree);
    bool ok = true;
    for (Eigen::Index j = 0; j < nfree && ok; ++j) {
      const double h = root * std::max(1.0, std::abs(best.x[j]));
      point = best.x;
      point[j] = best.x[j] + h;
      ok = std::isfinite(objective(point, gp));
      point[j] = best.x[j] - h;
      ok = ok && std::isfinite(objective(point, gm));
      hess.col(j) = (gp - gm) / (2.0 * h);
    }
    if (ok && hess.allFinite()) {
      hess = 0.5 * (hess + hess.transpose()).eval();
      Eigen::MatrixXd cov_red;
      Eigen::LLT<Eigen::MatrixXd> llt(hess);
      if (llt.info() == Eigen::Success) {
        cov_red = llt.solve(Eigen::MatrixXd::Identity(nfree, nfree));
      } else {
        // Not positive definite: floor the curvature spectrum and report
        // the pseudo-covariance with a warning flag.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess);
        const double floor_at =
            std::max(1e-10, es.eigenvalues().cwiseAbs().maxCoeff() * 1e-12);
        Eigen::VectorXd lam = es.eigenvalues().cwiseMax(floor_at);
        cov_red = es.eigenvectors() * lam.cwiseInverse().asDiagonal() *
                  es.eigenvectors().transpose();
        model.covariance_floored = true;
      }
      model.covariance = Eigen::MatrixXd::Zero(kq + kb, kq + kb);
      for (Eigen::Index a = 0; a < nfree; ++a) {
        for (Eigen::Index b = 0; b < nfree; ++b) {
          model.covariance(free_idx[static_cast<std::size_t>(a)],
                           free_idx[static_cast<std::size_t>(b)]) =
              cov_red(a, b);
        }
      }
      model.covariance_available = true;
    }
  }
  return model;
}

std::vector<CoefficientSummary> standard_errors(const FittedModel& model) {
  if (!model.covariance_available) {
    throw std::runtime_error(
        "standard_errors: fit carries no covariance estimate");
  }
  std::vector<CoefficientSummary> out;
  const auto kq = model.theta.size();
  const auto push = [&](const std::string& label, const std::string& link,
                        double est, Eigen::Index cov_idx, bool fixed) {
    CoefficientSummary s;
    s.label = label;
    s.link = link;
    s.estimate = est;
    s.fixed = fixed;
    s.aliased = std::find(model.aliased.begin(), model.aliased.end(),
                          link + ":" + label) != model.aliased.end();
    const double var = model.covariance(cov_idx, cov_idx);
    if (!fixed && !s.aliased && var > 0.0) {
      s.se = std::sqrt(var);
      s.z = est / s.se;
      s.p_value = std::erfc(std::abs(s.z) / std::sqrt(2.0));
    } else {
      s.se = std::numeric_limits<double>::quiet_NaN();
      s.z = std::numeric_limits<double>::quiet_NaN();
      s.p_value = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(s);
  };
  for (Eigen::Index j = 0; j < kq; ++j) {
    push(model.theta_labels[static_cast<std::size_t>(j)], "q", model.theta[j],
         j, false);
  }
  for (Eigen::Index j = 0; j < model.vartheta.size(); ++j) {
    push(model.vartheta_labels[static_cast<std::size_t>(j)], "beta",
         model.vartheta[j], kq + j, model.beta_fixed);
  }
  return out;
}

}  // namespace dwreg
