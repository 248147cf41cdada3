#include <cmath>

#include "splitstep/analysis.hpp"
#include "splitstep/error.hpp"
#include "splitstep/measure.hpp"

namespace splitstep {

ContractionTrace contraction_run(const Model& model, const SchemeConfig& scheme, const BrownianLattice& lattice,
                                 const ParticleState& X0, const ParticleState& Z0, double fit_start) {
  scheme.validate(model);
  if (X0.n != Z0.n || X0.d != Z0.d) throw SizeMismatch("coupled systems must share N and d");
  if (X0.n != lattice.particles()) throw SizeMismatch("initial states and lattice disagree on N");
  const std::size_t r = lattice.ratio(scheme.h);
  if (scheme.M * r > lattice.fine_steps()) throw SizeMismatch("lattice horizon is shorter than the run");

  ContractionTrace trace;
  try {
    trace.beta_theoretical = beta_theoretical(model.constants, scheme.h);
  } catch (const MissingConstant&) {
    trace.beta_theoretical = NAN;
  }
  trace.fit_start = fit_start;
  ParticleState X = X0, Z = Z0;
  auto record = [&](std::size_t step) {
    const double e = w2_paired_bound(X, Z);
    trace.times.push_back(static_cast<double>(step) * scheme.h);
    trace.msd.push_back(e * e);
  };
  record(0);
  std::vector<double> dW(X.n * model.l);
  for (std::size_t n = 0; n < scheme.M; ++n) {
    const double t_next = static_cast<double>(n + 1) * scheme.h;
    try {
      lattice.coarse_increments(n, r, dW);
      X = scheme_step(model, scheme, X, dW, n);
      Z = scheme_step(model, scheme, Z, dW, n);
    } catch (const NonFinite& e) {
      throw StepFailure(n + 1, t_next, e.what(), true);
    } catch (const NonConvergence& e) {
      throw StepFailure(n + 1, t_next, e.what(), false);
    }
    if (!X.all_finite() || !Z.all_finite()) throw StepFailure(n + 1, t_next, "state became non-finite", true);
    record(n + 1);
  }

  // log-linear fit over t >= fit_start
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t count = 0, up = 0, first = trace.times.size(), last = 0;
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    if (trace.times[k] < fit_start - 1e-12 || !(trace.msd[k] > 0.0)) continue;
    const double x = trace.times[k], y = std::log(trace.msd[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
    if (first == trace.times.size()) first = k;
    last = k;
    if (k > first && trace.msd[k] > trace.msd[k - 1]) ++up;
  }
  if (count >= 2) {
    const double c = static_cast<double>(count);
    trace.fitted_decay = (sxy - sx * sy / c) / (sxx - sx * sx / c);
    trace.window_steps = last - first;
    trace.non_monotone_fraction = trace.window_steps ? static_cast<double>(up) / static_cast<double>(trace.window_steps) : 0.0;
    if (trace.window_steps)
      trace.mean_step_rate = (std::log(trace.msd[last]) - std::log(trace.msd[first])) /
                             (static_cast<double>(trace.window_steps) * scheme.h);
  }
  return trace;
}

}  // namespace splitstep
