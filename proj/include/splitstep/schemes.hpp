#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "splitstep/brownian.hpp"
#include "splitstep/model.hpp"
#include "splitstep/particle_state.hpp"

namespace splitstep {

enum class SchemeKind { ssm, taming_in, taming_out, euler };

/// "ssm", "taming-in", "taming-out", "euler".
const char* scheme_name(SchemeKind kind);
SchemeKind parse_scheme(const std::string& name);

struct SolverConfig {
  double tol = 1e-12;  // residual target is tol * (1 + max_i |X_i|)
  int max_outer = 100;
  int max_newton = 50;
  double damping = 1.0;

  void validate() const;  // ConfigInvalid
};

struct SchemeConfig {
  SchemeKind kind = SchemeKind::ssm;
  double h = 0.01;
  double T = 1.0;
  std::size_t M = 100;
  double alpha = 0.5;
  SolverConfig solver;
  bool enforce_h_constraint = true;

  /// Sets M = T/h; ConfigInvalid unless M h = T to within one ulp of T.
  static SchemeConfig make(SchemeKind kind, double h, double T, double alpha = 0.5);

  /// Checks M h = T, alpha in (0,1], solver settings, and (when enforced) h < min{1, 1/zeta}.
  void validate(const Model& model) const;

  /// M^alpha, the taming strength.
  double tame_scale() const;
};

/// Y solving Y_i = X_i + h v(Y_i, mu^Y), v = f * mu^Y + u.
struct StageState {
  ParticleState Y;
  double residual_norm = 0.0;  // max_i |Y_i - X_i - h v(Y_i, mu^Y)|
  int iterations = 0;          // outer sweeps, each one pair pass
  bool used_fallback = false;
};

/// Outer sweeps freeze the empirical measure at the current iterate and run a per-particle
/// Newton iteration on the linearized convolution plus the exact u; for odd kernels each
/// sweep also corrects the common translation of the update, which the per-particle blocks
/// cannot see. A stalled sweep sequence (less than 10% reduction over 5 sweeps) switches to
/// the damped fixed point Y <- (Y + X + h V(Y)) / 2.
StageState solve_implicit_stage(const Model& model, const ParticleState& X, double h, const SolverConfig& solver,
                                double t = 0.0, const ParticleState* initial_guess = nullptr);

/// dW holds N x l increments, row-major.
ParticleState ssm_step(const Model& model, const ParticleState& X, std::span<const double> dW, double t, double h,
                       const SolverConfig& solver, StageState* stage = nullptr);

enum class TamingVariant { in, out };

/// Explicit step with the convolution (and u) tamed by M^alpha, M = T/h.
ParticleState taming_step(const Model& model, const ParticleState& X, std::span<const double> dW, double t, double h,
                          double alpha, double M, TamingVariant variant);

ParticleState euler_step(const Model& model, const ParticleState& X, std::span<const double> dW, double t, double h);

/// One step n -> n+1 of the configured scheme (t = n h).
ParticleState scheme_step(const Model& model, const SchemeConfig& scheme, const ParticleState& X,
                          std::span<const double> dW, std::size_t n, StageState* stage = nullptr);

/// Called with the state after the steps it asked for (step 0 is the initial state).
struct Observer {
  std::vector<std::int64_t> steps;  // empty: every step
  std::function<void(const ParticleState&)> callback;
};

struct SimulationResult {
  ParticleState final_state;
  std::size_t steps_taken = 0;
  std::size_t outer_iterations = 0;  // summed over SSM stages
  std::size_t fallback_stages = 0;
};

/// Drives scheme.M steps from X0 with the lattice's increments (coarsened to scheme.h).
/// Any step error is rethrown as StepFailure carrying the step index and time.
SimulationResult simulate(const Model& model, const SchemeConfig& scheme, const BrownianLattice& lattice,
                          const ParticleState& X0, const std::vector<Observer>& observers = {});

/// Steps of a uniform grid of observation times t_k (each must be a multiple of h).
std::vector<std::int64_t> steps_for_times(const std::vector<double>& times, double h);

}  // namespace splitstep
