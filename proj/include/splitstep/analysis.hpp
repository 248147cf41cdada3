#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "splitstep/brownian.hpp"
#include "splitstep/model.hpp"
#include "splitstep/particle_state.hpp"
#include "splitstep/schemes.hpp"

namespace splitstep {

enum class Metric { rmse, path, poc };
const char* metric_name(Metric metric);

struct ErrorCurve {
  Metric metric = Metric::rmse;
  std::vector<double> abscissa;  // h or N, strictly monotone
  std::vector<double> errors;
  std::vector<double> excluded;  // abscissae whose run ended in a failure
  std::optional<double> slope;
  std::optional<double> r_squared;
};

/// Where a run's randomness came from; comparisons require equal lineages.
struct Lineage {
  std::uint64_t seed = 0;
  std::string initial_law;
  double h_fine = 0.0;

  bool operator==(const Lineage&) const = default;
};

struct TerminalRun {
  double abscissa = 0.0;  // h
  ParticleState state;
  Lineage lineage;
  bool failed = false;
};

/// Particle-paired root mean-square distance sqrt((1/N) sum_j |a_j - b_j|^2).
double rmse_value(const ParticleState& a, const ParticleState& b);

/// One error per non-failed run against the proxy, sorted by abscissa (ascending).
ErrorCurve rmse(const std::vector<TerminalRun>& runs, const TerminalRun& proxy);

/// States sampled on a time grid (ascending).
struct PathRecord {
  double abscissa = 0.0;
  std::vector<double> times;
  std::vector<ParticleState> states;
  Lineage lineage;
  bool failed = false;
};

/// sqrt((1/N) sum_j max_t |X_t^j - Xhat_t^j|^2) over the candidate's times that the proxy also has.
double path_error_value(const PathRecord& candidate, const PathRecord& proxy);
ErrorCurve path_error(const std::vector<PathRecord>& runs, const PathRecord& proxy);

/// sqrt((1/N_l) sum_{j <= N_l} |X^{j,N_l} - X^{j,N_{l+1}}|^2) without lineage checks.
double poc_error_value(const ParticleState& small, const ParticleState& large);

/// Same with the coupling checked: both lattices must share seed, noise dimension and fine
/// grid, and the large system must come from extending the small one by a factor of 2.
double poc_error(const ParticleState& small, const BrownianLattice& small_lattice, const ParticleState& large,
                 const BrownianLattice& large_lattice);

/// Pools independent repetitions of one curve: error = sqrt(mean_r error_r^2) at each abscissa
/// present in every repetition; an abscissa excluded by any repetition stays excluded.
ErrorCurve combine_repetitions(const std::vector<ErrorCurve>& curves);

struct RateFit {
  double slope = 0.0;
  double r_squared = 0.0;
};

/// OLS of log(error) on log(abscissa). DegenerateFit with fewer than 3 points, zero
/// variance in the abscissa, or non-positive errors.
RateFit fit_rate(const std::vector<double>& abscissa, const std::vector<double>& errors);
RateFit fit_rate(ErrorCurve& curve);

/// beta = (rho1 + 2 L_b1 h) / (1 - h (4 L_f1+ + 2 L_us1 + 2 L_us2)),
/// rho1 = 4 L_f1+ + 2 L_us1 + 2 L_us2 + 2 L_b2 + 2 L_b3.
double beta_theoretical(const ModelConstants& constants, double h);

struct ContractionTrace {
  std::vector<double> times;  // 0, h, ..., T
  std::vector<double> msd;    // (1/N) sum_i |X_i - Z_i|^2
  double beta_theoretical = 0.0;  // NaN when the model lacks the constants
  double fitted_decay = 0.0;       // OLS slope of log msd against t over the fit window
  double fit_start = 0.5;
  double non_monotone_fraction = 0.0;  // share of steps in the fit window where msd grew
  double mean_step_rate = 0.0;         // (1/h) log of the geometric-mean per-step factor in the window
  std::size_t window_steps = 0;
};

/// Two systems from X0 and Z0 driven by the same increments.
ContractionTrace contraction_run(const Model& model, const SchemeConfig& scheme, const BrownianLattice& lattice,
                                 const ParticleState& X0, const ParticleState& Z0, double fit_start = 0.5);

struct MomentTrace {
  std::vector<double> p_values;
  std::vector<double> times;
  std::vector<std::vector<double>> moments;  // [time][p]
  double cap = 0.0;                          // 0: no cap
  std::optional<double> blowup_time;         // first time a moment was non-finite or above the cap
};

/// Observer appending empirical moments to trace at the given steps (every step when empty).
Observer moment_observer(MomentTrace& trace, std::vector<std::int64_t> steps);

/// Moments of a recorded trajectory.
MomentTrace moment_trace(const std::vector<ParticleState>& trajectory, const std::vector<double>& p_values,
                         double cap = 0.0);

}  // namespace splitstep
