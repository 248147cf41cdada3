#include "splitstep/measure.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "splitstep/error.hpp"
#include "splitstep/report_io.hpp"

namespace splitstep {
namespace {

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double empirical_moment(const ParticleState& state, double p) {
  double s = 0.0;
  for (std::size_t i = 0; i < state.n; ++i) s += abs_pow(norm(state.row(i)), p);
  return s / static_cast<double>(state.n);
}

double w2_1d(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw SizeMismatch("w2_1d needs samples of equal size");
  if (a.empty()) return 0.0;
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double s = 0.0;
  for (std::size_t k = 0; k < sa.size(); ++k) s += (sa[k] - sb[k]) * (sa[k] - sb[k]);
  return std::sqrt(s / static_cast<double>(sa.size()));
}

double w2_paired_bound(const ParticleState& a, const ParticleState& b) {
  if (a.n != b.n || a.d != b.d) throw SizeMismatch("paired W2 bound needs equal N and d");
  double s = 0.0;
  for (std::size_t k = 0; k < a.positions.size(); ++k) {
    const double e = a.positions[k] - b.positions[k];
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(a.n));
}

double DensityTable::bin_left(std::size_t b) const {
  return lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(mass.size());
}

double DensityTable::bin_right(std::size_t b) const {
  return b + 1 == mass.size() ? hi : bin_left(b + 1);
}

DensityTable histogram_density(const ParticleState& state, std::size_t axis, std::size_t bins, double lo, double hi) {
  if (bins == 0) throw SizeMismatch("histogram needs at least one bin");
  if (!(hi > lo)) throw SizeMismatch("histogram range is empty");
  if (axis >= state.d) throw DimensionMismatch("histogram axis out of range");
  DensityTable t;
  t.axis = axis;
  t.lo = lo;
  t.hi = hi;
  t.mass.assign(bins, 0.0);
  std::vector<std::size_t> counts(bins, 0);
  std::size_t under = 0, over = 0;
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i < state.n; ++i) {
    const double x = state.positions[i * state.d + axis];
    if (x < lo || std::isnan(x)) {
      ++under;
    } else if (x > hi) {
      ++over;
    } else {
      std::size_t b = static_cast<std::size_t>((x - lo) / width);
      counts[std::min(b, bins - 1)]++;
    }
  }
  const double inv = 1.0 / static_cast<double>(state.n);
  for (std::size_t b = 0; b < bins; ++b) t.mass[b] = static_cast<double>(counts[b]) * inv;
  t.underflow = static_cast<double>(under) * inv;
  t.overflow = static_cast<double>(over) * inv;
  return t;
}

DensityTable histogram_density_auto(const ParticleState& state, std::size_t axis, std::size_t bins) {
  if (axis >= state.d) throw DimensionMismatch("histogram axis out of range");
  double mean = 0.0, sq = 0.0;
  std::size_t finite = 0;
  for (std::size_t i = 0; i < state.n; ++i) {
    const double x = state.positions[i * state.d + axis];
    if (!std::isfinite(x)) continue;
    mean += x;
    sq += x * x;
    ++finite;
  }
  if (finite == 0) return histogram_density(state, axis, bins, -1.0, 1.0);
  mean /= static_cast<double>(finite);
  const double sd = std::sqrt(std::max(0.0, sq / static_cast<double>(finite) - mean * mean));
  const double half = sd > 0.0 ? 4.0 * sd : 0.5;
  return histogram_density(state, axis, bins, mean - half, mean + half);
}

void write_density_csv(const std::filesystem::path& path, const DensityTable& table) {
  CsvWriter csv(path, {"bin_left", "bin_right", "mass"});
  for (std::size_t b = 0; b < table.mass.size(); ++b) csv.row({table.bin_left(b), table.bin_right(b), table.mass[b]});
  csv.close();
}

DecompositionCheck identity_decomposition_check(const Kernel& f, const ParticleState& state, double p) {
  if (f.dim() != state.d || f.cols() != 1) throw DimensionMismatch("decomposition check needs a vector kernel on R^d");
  const std::size_t n = state.n, d = state.d;
  std::vector<double> z(d), s(d), fz(d), w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = abs_pow(norm(state.row(i)), p - 2.0);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = state.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      auto xj = state.row(j);
      for (std::size_t c = 0; c < d; ++c) {
        z[c] = xi[c] - xj[c];
        s[c] = xi[c] + xj[c];
      }
      f.evaluate(z, fz);
      lhs += w[i] * dot(xi, fz);
      rhs += 0.5 * w[i] * dot(z, fz) + 0.25 * (w[i] - w[j]) * dot(s, fz);
    }
  }
  const double inv = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  DecompositionCheck c;
  c.lhs = lhs * inv;
  c.rhs = rhs * inv;
  c.residual = std::fabs(c.lhs - c.rhs);
  return c;
}

OddKernelCheck identity_odd_kernel_check(const Kernel& f, const Kernel& f_sigma, const ParticleState& state, double m,
                                         double L) {
  if (f.dim() != state.d || f_sigma.dim() != state.d) throw DimensionMismatch("kernel dimension differs from state");
  const std::size_t n = state.n, d = state.d, vs = f_sigma.value_size();
  std::vector<double> z(d), fz(d), sz(vs);
  double lhs = 0.0, sym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = state.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      auto xj = state.row(j);
      for (std::size_t c = 0; c < d; ++c) z[c] = xi[c] - xj[c];
      f.evaluate(z, fz);
      double sig = 0.0;
      if (!f_sigma.is_zero()) {
        f_sigma.evaluate(z, sz);
        for (double v : sz) sig += v * v;
      }
      lhs += dot(xi, fz) + (m - 1.0) * sig;
      sym += 0.5 * dot(z, fz) + (m - 1.0) * sig;
    }
  }
  const double inv = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  double m2 = 0.0;
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = state.row(i);
    m2 += dot(x, x);
    for (std::size_t c = 0; c < d; ++c) mean[c] += x[c];
  }
  const double nn = static_cast<double>(n);
  double mean_sq = 0.0;
  for (double& v : mean) {
    v /= nn;
    mean_sq += v * v;
  }
  OddKernelCheck c;
  c.lhs = lhs * inv;
  c.symmetrized = sym * inv;
  c.bound = L * (m2 / nn - mean_sq);
  c.equality_residual = std::fabs(c.lhs - c.symmetrized);
  return c;
}

}  // namespace splitstep
