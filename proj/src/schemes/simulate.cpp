#include <algorithm>
#include <cmath>

#include "splitstep/error.hpp"
#include "splitstep/schemes.hpp"

namespace splitstep {

std::vector<std::int64_t> steps_for_times(const std::vector<double>& times, double h) {
  std::vector<std::int64_t> out;
  for (double t : times) {
    const double q = t / h;
    const double r = std::round(q);
    if (r < 0.0 || std::fabs(q - r) > 1e-9 * std::max(1.0, r))
      throw ConfigInvalid("observe", "observation time " + std::to_string(t) + " is not on the grid of step " +
                                         std::to_string(h));
    out.push_back(static_cast<std::int64_t>(r));
  }
  return out;
}

ParticleState scheme_step(const Model& model, const SchemeConfig& scheme, const ParticleState& X,
                          std::span<const double> dW, std::size_t n, StageState* stage) {
  const double t = static_cast<double>(n) * scheme.h;
  const double M = static_cast<double>(scheme.M);
  switch (scheme.kind) {
    case SchemeKind::ssm: return ssm_step(model, X, dW, t, scheme.h, scheme.solver, stage);
    case SchemeKind::taming_in: return taming_step(model, X, dW, t, scheme.h, scheme.alpha, M, TamingVariant::in);
    case SchemeKind::taming_out: return taming_step(model, X, dW, t, scheme.h, scheme.alpha, M, TamingVariant::out);
    case SchemeKind::euler: return euler_step(model, X, dW, t, scheme.h);
  }
  throw ConfigInvalid("scheme", "unknown scheme");
}

SimulationResult simulate(const Model& model, const SchemeConfig& scheme, const BrownianLattice& lattice,
                          const ParticleState& X0, const std::vector<Observer>& observers) {
  scheme.validate(model);
  if (X0.n != lattice.particles()) throw SizeMismatch("initial state and lattice disagree on N");
  if (X0.d != model.d) throw DimensionMismatch("initial state dimension differs from the model");
  if (lattice.noise_dim() != model.l) throw DimensionMismatch("lattice noise dimension differs from the model");
  const std::size_t r = scheme.M > 0 ? lattice.ratio(scheme.h) : 1;
  if (scheme.M * r > lattice.fine_steps()) throw SizeMismatch("lattice horizon is shorter than the run");

  std::vector<std::vector<std::int64_t>> schedule(observers.size());
  for (std::size_t k = 0; k < observers.size(); ++k) {
    schedule[k] = observers[k].steps;
    std::sort(schedule[k].begin(), schedule[k].end());
  }
  auto notify = [&](const ParticleState& s) {
    for (std::size_t k = 0; k < observers.size(); ++k) {
      if (schedule[k].empty() || std::binary_search(schedule[k].begin(), schedule[k].end(), s.step))
        observers[k].callback(s);
    }
  };

  SimulationResult result;
  ParticleState X = X0;
  X.step = 0;
  X.time = 0.0;
  notify(X);
  std::vector<double> dW(X.n * model.l);
  for (std::size_t n = 0; n < scheme.M; ++n) {
    const double t_next = static_cast<double>(n + 1) * scheme.h;
    try {
      lattice.coarse_increments(n, r, dW);
      StageState stage;
      X = scheme_step(model, scheme, X, dW, n, &stage);
      if (scheme.kind == SchemeKind::ssm) {
        result.outer_iterations += static_cast<std::size_t>(stage.iterations);
        if (stage.used_fallback) ++result.fallback_stages;
      }
    } catch (const NonFinite& e) {
      throw StepFailure(n + 1, t_next, e.what(), true);
    } catch (const NonConvergence& e) {
      throw StepFailure(n + 1, t_next, e.what(), false);
    }
    if (!X.all_finite()) throw StepFailure(n + 1, t_next, "state became non-finite", true);
    X.step = static_cast<std::int64_t>(n + 1);
    X.time = t_next;
    result.steps_taken = n + 1;
    notify(X);
  }
  result.final_state = std::move(X);
  return result;
}

}  // namespace splitstep
