#include "splitstep/coefficient.hpp"

#include <algorithm>
#include <cmath>

#include "splitstep/error.hpp"
#include "splitstep/particle_state.hpp"

namespace splitstep {

MeasureSummary MeasureSummary::dirac(std::span<const double> point) {
  MeasureSummary s;
  s.mean.assign(point.begin(), point.end());
  for (double v : point) s.second_moment += v * v;
  s.variance = 0.0;
  return s;
}

MeasureSummary MeasureSummary::of(const ParticleState& state) {
  MeasureSummary s;
  s.mean.assign(state.d, 0.0);
  double m2 = 0.0;
  for (std::size_t i = 0; i < state.n; ++i) {
    auto x = state.row(i);
    for (std::size_t c = 0; c < state.d; ++c) {
      s.mean[c] += x[c];
      m2 += x[c] * x[c];
    }
  }
  const double inv = 1.0 / static_cast<double>(state.n);
  double mean_sq = 0.0;
  for (auto& m : s.mean) {
    m *= inv;
    mean_sq += m * m;
  }
  s.second_moment = m2 * inv;
  s.variance = std::max(0.0, s.second_moment - mean_sq);
  return s;
}

Coefficient::Coefficient(std::size_t dim, std::size_t cols, Function f, Function jacobian, std::string description)
    : dim_(dim), cols_(cols), function_(std::move(f)), jacobian_(std::move(jacobian)),
      description_(std::move(description)) {
  if (dim == 0 || cols == 0) throw DimensionMismatch("coefficient dimensions must be positive");
}

Coefficient Coefficient::zero(std::size_t dim, std::size_t cols) {
  Coefficient c;
  c.dim_ = dim;
  c.cols_ = cols;
  return c;
}

void Coefficient::evaluate(double t, std::span<const double> x, const MeasureSummary& mu,
                           std::span<double> out) const {
  if (x.size() != dim_ || out.size() != value_size()) throw DimensionMismatch("coefficient evaluate: bad spans");
  if (!function_) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  function_(t, x, mu, out);
}

void Coefficient::jacobian(double t, std::span<const double> x, const MeasureSummary& mu,
                           std::span<double> out) const {
  if (cols_ != 1) throw DimensionMismatch("jacobian is defined for vector coefficients only");
  if (x.size() != dim_ || out.size() != dim_ * dim_) throw DimensionMismatch("coefficient jacobian: bad spans");
  if (!function_) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  if (jacobian_) {
    jacobian_(t, x, mu, out);
    return;
  }
  std::vector<double> xp(x.begin(), x.end()), fp(dim_), fm(dim_);
  for (std::size_t b = 0; b < dim_; ++b) {
    const double step = 1e-6 * (1.0 + std::fabs(x[b]));
    xp[b] = x[b] + step;
    function_(t, xp, mu, fp);
    xp[b] = x[b] - step;
    function_(t, xp, mu, fm);
    xp[b] = x[b];
    for (std::size_t a = 0; a < dim_; ++a) out[a * dim_ + b] = (fp[a] - fm[a]) / (2.0 * step);
  }
}

}  // namespace splitstep
