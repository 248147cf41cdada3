#include "splitstep/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "splitstep/error.hpp"

namespace splitstep {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double dist_sq(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

class Tracker {
 public:
  Tracker(std::string name, double tolerance) : tol_(tolerance) { report_.name = std::move(name); }

  void observe(double value, std::span<const double> x, std::span<const double> y) {
    ++report_.samples;
    if (!seen_ || value > report_.max_violation || std::isnan(value)) {
      seen_ = true;
      report_.max_violation = value;
      report_.worst_x.assign(x.begin(), x.end());
      report_.worst_y.assign(y.begin(), y.end());
    }
  }

  CheckReport finish() {
    report_.pass = !std::isnan(report_.max_violation) && report_.max_violation <= tol_;
    return std::move(report_);
  }

 private:
  CheckReport report_;
  double tol_;
  bool seen_ = false;
};

MeasureSummary summary_of(const SamplePoints& pts) {
  MeasureSummary s;
  s.mean.assign(pts.d, 0.0);
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    auto p = pts.point(i);
    for (std::size_t c = 0; c < pts.d; ++c) s.mean[c] += p[c];
    s.second_moment += dot(p, p);
  }
  double mean_sq = 0.0;
  for (auto& m : s.mean) {
    m /= static_cast<double>(n);
    mean_sq += m * m;
  }
  s.second_moment /= static_cast<double>(n);
  s.variance = std::max(0.0, s.second_moment - mean_sq);
  return s;
}

SamplePoints symmetric_pair(std::span<const double> a) {
  SamplePoints p;
  p.d = a.size();
  p.values.assign(a.begin(), a.end());
  for (double v : a) p.values.push_back(-v);
  return p;
}

// Calls visit(x, x', mu, mu', W2^2) over Dirac measures at (x, x') and symmetric two-point laws.
template <class Visit>
void for_each_measure_sample(const SamplePairs& pairs, const SamplePairs& measure_pairs, Visit&& visit) {
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    auto x = pairs.x.point(k), y = pairs.y.point(k);
    visit(x, y, MeasureSummary::dirac(x), MeasureSummary::dirac(y), dist_sq(x, y));
    if (measure_pairs.size() == 0) continue;
    const std::size_t m = k % measure_pairs.size();
    SamplePoints mu = symmetric_pair(measure_pairs.x.point(m));
    SamplePoints nu = symmetric_pair(measure_pairs.y.point(m));
    const double w = w2_small_support(mu, nu);
    visit(x, y, summary_of(mu), summary_of(nu), w * w);
  }
}

}  // namespace

SamplePoints uniform_points(std::size_t d, std::size_t count, double half_width, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-half_width, half_width);
  SamplePoints p;
  p.d = d;
  p.values.resize(d * count);
  for (auto& v : p.values) v = dist(gen);
  return p;
}

SamplePairs default_pairs(std::size_t d, const VerifyOptions& options) {
  SamplePairs pairs;
  pairs.x = uniform_points(d, options.random_pairs, options.half_width, options.seed);
  pairs.y = uniform_points(d, options.random_pairs, options.half_width, options.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::size_t axes = std::min<std::size_t>(d, 2);
  const std::size_t g = options.grid_per_axis;
  if (g == 0) return pairs;
  std::size_t grid_count = axes == 1 ? g : g * g;
  std::vector<double> grid(grid_count * d, 0.0);
  for (std::size_t k = 0; k < grid_count; ++k) {
    std::size_t idx = k;
    for (std::size_t a = 0; a < axes; ++a) {
      const double t = g == 1 ? 0.0 : static_cast<double>(idx % g) / static_cast<double>(g - 1);
      grid[k * d + a] = -options.half_width + 2.0 * options.half_width * t;
      idx /= g;
    }
  }
  for (std::size_t a = 0; a < grid_count; ++a) {
    for (std::size_t b = 0; b < grid_count; ++b) {
      pairs.x.values.insert(pairs.x.values.end(), grid.begin() + a * d, grid.begin() + (a + 1) * d);
      pairs.y.values.insert(pairs.y.values.end(), grid.begin() + b * d, grid.begin() + (b + 1) * d);
    }
  }
  return pairs;
}

CheckReport check_odd(const Kernel& f, const SamplePoints& points, double tolerance) {
  Tracker t("odd", tolerance);
  const std::size_t vs = f.value_size();
  std::vector<double> fx(vs), fm(vs), neg(points.d);
  for (std::size_t k = 0; k < points.size(); ++k) {
    auto x = points.point(k);
    for (std::size_t c = 0; c < points.d; ++c) neg[c] = -x[c];
    f.evaluate(x, fx);
    f.evaluate(neg, fm);
    double s = 0.0;
    for (std::size_t i = 0; i < vs; ++i) s += (fx[i] + fm[i]) * (fx[i] + fm[i]);
    t.observe(std::sqrt(s), x, neg);
  }
  return t.finish();
}

CheckReport check_one_sided_lipschitz(const Kernel& f, const Kernel& f_sigma, double m, double L,
                                      const SamplePairs& pairs, double tolerance) {
  Tracker t("kernel one-sided Lipschitz", tolerance);
  const std::size_t d = pairs.x.d;
  std::vector<double> fx(d), fy(d), diff(d), sx(f_sigma.value_size()), sy(f_sigma.value_size());
  const bool has_sigma = !f_sigma.is_zero();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    auto x = pairs.x.point(k), y = pairs.y.point(k);
    f.evaluate(x, fx);
    f.evaluate(y, fy);
    double inner = 0.0;
    for (std::size_t c = 0; c < d; ++c) inner += (x[c] - y[c]) * (fx[c] - fy[c]);
    double sig = 0.0;
    if (has_sigma) {
      f_sigma.evaluate(x, sx);
      f_sigma.evaluate(y, sy);
      for (std::size_t i = 0; i < sx.size(); ++i) sig += (sx[i] - sy[i]) * (sx[i] - sy[i]);
    }
    t.observe(inner + 2.0 * (m - 1.0) * sig - L * dist_sq(x, y), x, y);
  }
  return t.finish();
}

CheckReport check_additional_symmetry(const Kernel& f, const std::vector<double>& p_values, double L3,
                                      const SamplePairs& pairs, double tolerance) {
  Tracker t("additional symmetry", tolerance);
  const std::size_t d = pairs.x.d;
  std::vector<double> diff(d), sum(d), fd(d);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    auto x = pairs.x.point(k), y = pairs.y.point(k);
    for (std::size_t c = 0; c < d; ++c) {
      diff[c] = x[c] - y[c];
      sum[c] = x[c] + y[c];
    }
    f.evaluate(diff, fd);
    const double inner = dot(sum, fd), nx = norm(x), ny = norm(y);
    for (double p : p_values) {
      const double lhs = (abs_pow(nx, p - 2.0) - abs_pow(ny, p - 2.0)) * inner;
      t.observe(lhs - L3 * (abs_pow(nx, p) + abs_pow(ny, p)), x, y);
    }
  }
  return t.finish();
}

CheckReport check_drift_diffusion_one_sided(const Model& model, double L_us1, double L_us2,
                                            const SamplePairs& pairs, const SamplePairs& measure_pairs,
                                            double tolerance) {
  Tracker t("drift/diffusion one-sided Lipschitz", tolerance);
  const std::size_t d = model.d, vs = model.sigma.value_size();
  const double m = model.constants.m;
  std::vector<double> ux(d), uy(d), sx(vs), sy(vs);
  for_each_measure_sample(pairs, measure_pairs,
                          [&](auto x, auto y, const MeasureSummary& mu, const MeasureSummary& nu, double w2sq) {
                            model.u.evaluate(0.0, x, mu, ux);
                            model.u.evaluate(0.0, y, nu, uy);
                            model.sigma.evaluate(0.0, x, mu, sx);
                            model.sigma.evaluate(0.0, y, nu, sy);
                            double inner = 0.0, sig = 0.0;
                            for (std::size_t c = 0; c < d; ++c) inner += (x[c] - y[c]) * (ux[c] - uy[c]);
                            for (std::size_t i = 0; i < vs; ++i) sig += (sx[i] - sy[i]) * (sx[i] - sy[i]);
                            t.observe(inner + 2.0 * (m - 1.0) * sig - L_us1 * dist_sq(x, y) - L_us2 * w2sq, x, y);
                          });
  return t.finish();
}

CheckReport check_b_one_sided(const Model& model, double L_b2, double L_b3, const SamplePairs& pairs,
                              const SamplePairs& measure_pairs, double tolerance) {
  Tracker t("b one-sided Lipschitz", tolerance);
  const std::size_t d = model.d;
  std::vector<double> bx(d), by(d);
  for_each_measure_sample(pairs, measure_pairs,
                          [&](auto x, auto y, const MeasureSummary& mu, const MeasureSummary& nu, double w2sq) {
                            model.b.evaluate(0.0, x, mu, bx);
                            model.b.evaluate(0.0, y, nu, by);
                            double inner = 0.0;
                            for (std::size_t c = 0; c < d; ++c) inner += (x[c] - y[c]) * (bx[c] - by[c]);
                            t.observe(inner - L_b2 * dist_sq(x, y) - L_b3 * w2sq, x, y);
                          });
  return t.finish();
}

std::vector<CheckReport> verify_model(const Model& model, const VerifyOptions& options) {
  std::vector<CheckReport> out;
  const auto& c = model.constants;
  const std::size_t d = model.d;
  SamplePoints points = uniform_points(d, options.random_pairs, options.half_width, options.seed + 1);
  SamplePairs pairs = default_pairs(d, options);
  VerifyOptions mopt = options;
  mopt.seed = options.seed + 2;
  mopt.random_pairs = std::max<std::size_t>(1, options.random_pairs / 10);
  mopt.grid_per_axis = 0;
  SamplePairs measure_pairs = default_pairs(d, mopt);

  auto odd = check_odd(model.f, points, options.tolerance);
  odd.name = "f odd";
  out.push_back(odd);
  if (!model.f_sigma.is_zero()) {
    auto odd_s = check_odd(model.f_sigma, points, options.tolerance);
    odd_s.name = "f_sigma odd";
    out.push_back(odd_s);
  }
  {
    Tracker t("kernel normalization", options.tolerance);
    std::vector<double> zero(d, 0.0), v(model.f.value_size()), vs(model.f_sigma.value_size());
    model.f.evaluate(zero, v);
    model.f_sigma.evaluate(zero, vs);
    double worst = 0.0;
    for (double a : v) worst = std::max(worst, std::fabs(a));
    for (double a : vs) worst = std::max(worst, std::fabs(a));
    t.observe(worst, zero, zero);
    out.push_back(t.finish());
  }
  if (c.L_f1) out.push_back(check_one_sided_lipschitz(model.f, model.f_sigma, c.m, *c.L_f1, pairs, options.tolerance));
  if (c.L_f3) {
    std::vector<double> ps;
    for (int k = 1; k <= 4; ++k) ps.push_back(2.0 + (c.m - 2.0) * k / 4.0);
    out.push_back(check_additional_symmetry(model.f, ps, *c.L_f3, pairs, options.tolerance));
  }
  if (c.L_us1 && c.L_us2)
    out.push_back(
        check_drift_diffusion_one_sided(model, *c.L_us1, *c.L_us2, pairs, measure_pairs, options.tolerance));
  if (c.L_b2 && c.L_b3) out.push_back(check_b_one_sided(model, *c.L_b2, *c.L_b3, pairs, measure_pairs, options.tolerance));
  return out;
}

double w2_small_support(const SamplePoints& a, const SamplePoints& b) {
  if (a.d != b.d || a.size() != b.size()) throw SizeMismatch("w2 needs equal sizes and dimensions");
  const std::size_t n = a.size();
  if (n == 0) return 0.0;
  if (n > 8) throw SizeMismatch("w2_small_support is limited to 8 atoms");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += dist_sq(a.point(i), b.point(perm[i]));
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best / static_cast<double>(n));
}

}  // namespace splitstep
