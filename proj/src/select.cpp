#include "dwreg/select.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace dwreg {

namespace {

constexpr double kTieEps = 1e-7;

struct Complexity {
  int degree = 1;
  int num_knots = 0;
};

ModelSpec spec_for(const Dataset& data,
                   const std::vector<std::string>& expand,
                   const std::vector<Complexity>& state) {
  ModelSpec spec;
  for (std::size_t j = 0; j < data.names.size(); ++j) {
    CovariateSpec t;
    t.covariate = data.names[j];
    t.kind = data.kinds[j];
    t.degree = 1;
    const auto it = std::find(expand.begin(), expand.end(), data.names[j]);
    if (it != expand.end()) {
      const auto& cx = state[static_cast<std::size_t>(it - expand.begin())];
      t.degree = cx.degree;
      t.num_knots = cx.num_knots;
    }
    spec.q_terms.push_back(t);
    spec.beta_terms.push_back(t);
  }
  return spec;
}

// Carry the current coefficients over by label as the candidate's starting
// point; columns new to the candidate start at zero.
void warm_start(const FittedModel& from, FitOptions* fit) {
  fit->init_q.clear();
  fit->init_b.clear();
  for (Eigen::Index j = 0; j < from.theta.size(); ++j) {
    fit->init_q[from.theta_labels[static_cast<std::size_t>(j)]] =
        from.theta[j];
  }
  for (Eigen::Index j = 0; j < from.vartheta.size(); ++j) {
    fit->init_b[from.vartheta_labels[static_cast<std::size_t>(j)]] =
        from.vartheta[j];
  }
}

std::string describe(const std::string& name, const Complexity& from,
                     const Complexity& to) {
  const auto fmt = [](const Complexity& c) {
    return "(d=" + std::to_string(c.degree) +
           ",k=" + std::to_string(c.num_knots) + ")";
  };
  return name + ": " + fmt(from) + " -> " + fmt(to);
}

}  // namespace

SelectionResult stepwise_select(const Dataset& data,
                                const std::vector<std::string>& expand,
                                const SelectOptions& opts) {
  for (const auto& name : expand) {
    if (data.kind(name) != ColumnKind::continuous) {
      throw std::invalid_argument(
          "stepwise_select: only continuous covariates can be expanded, '" +
          name + "' is not");
    }
  }

  SelectionResult out;
  std::vector<Complexity> state(expand.size());

  FitOptions search_fit = opts.fit;
  search_fit.compute_covariance = false;

  FittedModel current = fit(data, spec_for(data, expand, state), search_fit);
  out.trace.push_back({"initial", current.aic, current.loglik,
                       current.n_free_params, current.converged, true});

  while (true) {
    struct Candidate {
      std::size_t covariate;
      Complexity next;
      FittedModel model;
      std::string move;
    };
    std::optional<Candidate> best;

    for (std::size_t p = 0; p < expand.size(); ++p) {
      std::vector<Complexity> moves;
      if (state[p].degree < opts.max_degree) {
        moves.push_back({state[p].degree + 1, state[p].num_knots});
      }
      if (state[p].num_knots < opts.max_knots) {
        moves.push_back({state[p].degree, state[p].num_knots + 1});
      }
      for (const auto& next : moves) {
        auto trial_state = state;
        trial_state[p] = next;
        FitOptions fo = search_fit;
        fo.starts = 1;
        warm_start(current, &fo);
        StepRecord rec;
        rec.move = describe(expand[p], state[p], next);
        bool usable = false;
        FittedModel m;
        try {
          m = fit(data, spec_for(data, expand, trial_state), fo);
          rec.aic = m.aic;
          rec.loglik = m.loglik;
          rec.n_params = m.n_free_params;
          rec.converged = m.converged;
          usable = m.converged;
        } catch (const std::exception&) {
          rec.converged = false;
        }
        out.trace.push_back(rec);
        if (!usable) continue;
        const bool strictly_better = !best || m.aic < best->model.aic - kTieEps;
        const bool tie_fewer =
            best && std::abs(m.aic - best->model.aic) <= kTieEps &&
            m.n_free_params < best->model.n_free_params;
        if (strictly_better || tie_fewer) {
          best = Candidate{p, next, std::move(m), rec.move};
        }
      }
    }

    if (!best || best->model.aic >= current.aic - kTieEps) break;
    state[best->covariate] = best->next;
    current = std::move(best->model);
    // Mark the accepted candidate in the trace (last matching record).
    for (auto it = out.trace.rbegin(); it != out.trace.rend(); ++it) {
      if (it->move == best->move) {
        it->accepted = true;
        break;
      }
    }
  }

  // Final refit with the covariance on, warm-started from the search result.
  FitOptions final_fit = opts.fit;
  final_fit.compute_covariance = true;
  warm_start(current, &final_fit);
  out.model = fit(data, spec_for(data, expand, state), final_fit);
  return out;
}

}  // namespace dwreg
