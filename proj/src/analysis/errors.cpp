#include <algorithm>
#include <cmath>
#include <numeric>

#include "splitstep/analysis.hpp"
#include "splitstep/error.hpp"
#include "splitstep/measure.hpp"

namespace splitstep {

const char* metric_name(Metric metric) {
  switch (metric) {
    case Metric::rmse: return "rmse";
    case Metric::path: return "path";
    case Metric::poc: return "poc";
  }
  return "?";
}

double rmse_value(const ParticleState& a, const ParticleState& b) {
  if (a.n != b.n || a.d != b.d) throw LineageMismatch("compared states differ in N or d");
  return w2_paired_bound(a, b);
}

namespace {

void check_lineage(const Lineage& a, const Lineage& b) {
  if (!(a == b))
    throw LineageMismatch("runs do not share seed, initial law and fine grid (seed " + std::to_string(a.seed) +
                          " vs " + std::to_string(b.seed) + ", '" + a.initial_law + "' vs '" + b.initial_law + "')");
}

template <class Run, class Fn>
ErrorCurve build_curve(Metric metric, const std::vector<Run>& runs, Fn&& error_of) {
  std::vector<std::size_t> order(runs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return runs[a].abscissa < runs[b].abscissa; });
  ErrorCurve curve;
  curve.metric = metric;
  for (std::size_t k : order) {
    const Run& r = runs[k];
    if (!curve.abscissa.empty() && r.abscissa == curve.abscissa.back())
      throw LineageMismatch("duplicate abscissa in error curve");
    if (r.failed) {
      curve.excluded.push_back(r.abscissa);
      continue;
    }
    const double e = error_of(r);
    if (!std::isfinite(e)) {
      curve.excluded.push_back(r.abscissa);
      continue;
    }
    curve.abscissa.push_back(r.abscissa);
    curve.errors.push_back(e);
  }
  return curve;
}

}  // namespace

ErrorCurve rmse(const std::vector<TerminalRun>& runs, const TerminalRun& proxy) {
  for (const auto& r : runs) check_lineage(r.lineage, proxy.lineage);
  return build_curve(Metric::rmse, runs, [&](const TerminalRun& r) { return rmse_value(r.state, proxy.state); });
}

double path_error_value(const PathRecord& candidate, const PathRecord& proxy) {
  if (candidate.states.empty() || proxy.states.empty()) throw LineageMismatch("empty path record");
  const std::size_t n = candidate.states.front().n;
  std::vector<double> worst(n, 0.0);
  std::size_t common = 0;
  std::size_t p = 0;
  for (std::size_t k = 0; k < candidate.times.size(); ++k) {
    const double t = candidate.times[k];
    const double slack = 1e-9 * std::max(1.0, std::fabs(t));
    while (p < proxy.times.size() && proxy.times[p] < t - slack) ++p;
    if (p == proxy.times.size()) break;
    if (std::fabs(proxy.times[p] - t) > slack) continue;
    const ParticleState& a = candidate.states[k];
    const ParticleState& b = proxy.states[p];
    if (a.n != b.n || a.d != b.d) throw LineageMismatch("path states differ in N or d");
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t c = 0; c < a.d; ++c) {
        const double e = a.positions[i * a.d + c] - b.positions[i * a.d + c];
        s += e * e;
      }
      worst[i] = std::max(worst[i], s);
    }
    ++common;
  }
  if (common == 0) throw LineageMismatch("paths share no grid points");
  double s = 0.0;
  for (double w : worst) s += w;
  return std::sqrt(s / static_cast<double>(n));
}

ErrorCurve path_error(const std::vector<PathRecord>& runs, const PathRecord& proxy) {
  for (const auto& r : runs) check_lineage(r.lineage, proxy.lineage);
  return build_curve(Metric::path, runs, [&](const PathRecord& r) { return path_error_value(r, proxy); });
}

double poc_error_value(const ParticleState& small, const ParticleState& large) {
  if (large.n < small.n || large.d != small.d) throw CouplingViolation("large system must contain the small one");
  double s = 0.0;
  for (std::size_t e = 0; e < small.n * small.d; ++e) {
    const double x = small.positions[e] - large.positions[e];
    s += x * x;
  }
  return std::sqrt(s / static_cast<double>(small.n));
}

double poc_error(const ParticleState& small, const BrownianLattice& small_lattice, const ParticleState& large,
                 const BrownianLattice& large_lattice) {
  if (small_lattice.seed() != large_lattice.seed() || small_lattice.noise_dim() != large_lattice.noise_dim() ||
      small_lattice.h_fine() != large_lattice.h_fine() || small_lattice.fine_steps() != large_lattice.fine_steps())
    throw CouplingViolation("lattices are not related by particle extension");
  if (large_lattice.particles() != 2 * small_lattice.particles())
    throw CouplingViolation("the large system must have twice the particles of the small one");
  if (small.n != small_lattice.particles() || large.n != large_lattice.particles())
    throw CouplingViolation("states do not match their lattices");
  return poc_error_value(small, large);
}

ErrorCurve combine_repetitions(const std::vector<ErrorCurve>& curves) {
  if (curves.empty()) throw SizeMismatch("no repetitions to combine");
  ErrorCurve out;
  out.metric = curves.front().metric;
  std::vector<double> all;
  for (const auto& c : curves) {
    if (c.metric != out.metric) throw LineageMismatch("repetitions use different metrics");
    all.insert(all.end(), c.abscissa.begin(), c.abscissa.end());
    all.insert(all.end(), c.excluded.begin(), c.excluded.end());
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  for (double x : all) {
    double sum = 0.0;
    bool present = true;
    for (const auto& c : curves) {
      const auto it = std::find(c.abscissa.begin(), c.abscissa.end(), x);
      if (it == c.abscissa.end()) {
        present = false;
        break;
      }
      const double e = c.errors[static_cast<std::size_t>(it - c.abscissa.begin())];
      sum += e * e;
    }
    if (!present) {
      out.excluded.push_back(x);
      continue;
    }
    out.abscissa.push_back(x);
    out.errors.push_back(std::sqrt(sum / static_cast<double>(curves.size())));
  }
  return out;
}

RateFit fit_rate(const std::vector<double>& abscissa, const std::vector<double>& errors) {
  if (abscissa.size() != errors.size()) throw DegenerateFit("abscissa and errors differ in length");
  const std::size_t n = abscissa.size();
  if (n < 3) throw DegenerateFit("a rate fit needs at least 3 points");
  std::vector<double> lx(n), ly(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(abscissa[k] > 0.0) || !(errors[k] > 0.0) || !std::isfinite(errors[k]))
      throw DegenerateFit("rate fits need positive abscissae and errors");
    lx[k] = std::log(abscissa[k]);
    ly[k] = std::log(errors[k]);
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
    syy += (ly[k] - my) * (ly[k] - my);
  }
  if (!(sxx > 0.0)) throw DegenerateFit("abscissa has zero variance");
  RateFit fit;
  fit.slope = sxy / sxx;
  double ss_res = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = ly[k] - (my + fit.slope * (lx[k] - mx));
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  if (syy > 0.0 && ss_res <= 1e-30 * syy) fit.r_squared = 1.0;
  return fit;
}

RateFit fit_rate(ErrorCurve& curve) {
  RateFit fit = fit_rate(curve.abscissa, curve.errors);
  curve.slope = fit.slope;
  curve.r_squared = fit.r_squared;
  return fit;
}

double beta_theoretical(const ModelConstants& c, double h) {
  if (!c.L_f1 || !c.L_us1 || !c.L_us2 || !c.L_b1 || !c.L_b2 || !c.L_b3)
    throw MissingConstant("beta needs L_f1, L_us1, L_us2, L_b1, L_b2 and L_b3");
  const double lf = std::max(*c.L_f1, 0.0);
  const double rho1 = 4.0 * lf + 2.0 * *c.L_us1 + 2.0 * *c.L_us2 + 2.0 * *c.L_b2 + 2.0 * *c.L_b3;
  return (rho1 + 2.0 * *c.L_b1 * h) / (1.0 - h * (4.0 * lf + 2.0 * *c.L_us1 + 2.0 * *c.L_us2));
}

Observer moment_observer(MomentTrace& trace, std::vector<std::int64_t> steps) {
  Observer o;
  o.steps = std::move(steps);
  o.callback = [&trace](const ParticleState& s) {
    std::vector<double> row;
    bool blown = !s.all_finite();
    for (double p : trace.p_values) {
      const double m = empirical_moment(s, p);
      row.push_back(m);
      if (!std::isfinite(m) || (trace.cap > 0.0 && m > trace.cap)) blown = true;
    }
    trace.times.push_back(s.time);
    trace.moments.push_back(std::move(row));
    if (blown && !trace.blowup_time) trace.blowup_time = s.time;
  };
  return o;
}

MomentTrace moment_trace(const std::vector<ParticleState>& trajectory, const std::vector<double>& p_values, double cap) {
  MomentTrace trace;
  trace.p_values = p_values;
  trace.cap = cap;
  Observer o = moment_observer(trace, {});
  for (const auto& s : trajectory) o.callback(s);
  return trace;
}

}  // namespace splitstep
