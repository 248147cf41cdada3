#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "splitstep/kernel.hpp"
#include "splitstep/particle_state.hpp"

namespace splitstep {

/// (1/N) sum_j kernel(x_i - x_j) for one particle (0-based i), summed in the reference
/// order: ascending j, blocked pairwise summation for N >= 1024.
std::vector<double> convolve(const Kernel& kernel, const ParticleState& state, std::size_t i);

/// (1/N) sum_i |x_i|^p.
double empirical_moment(const ParticleState& state, double p);

/// Exact W2 of two equal-size 1-D samples (sorted ascending by the caller or not: copies are sorted).
double w2_1d(std::span<const double> a, std::span<const double> b);

/// sqrt((1/N) sum_i |x_i^A - x_i^B|^2): the same-index coupling, an upper bound on W2.
double w2_paired_bound(const ParticleState& a, const ParticleState& b);

struct DensityTable {
  std::size_t axis = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> mass;  // per bin; underflow + sum(mass) + overflow = 1
  double underflow = 0.0;
  double overflow = 0.0;

  double bin_left(std::size_t b) const;
  double bin_right(std::size_t b) const;
};

/// Normalized histogram of one coordinate over [lo, hi) with the last bin closed.
DensityTable histogram_density(const ParticleState& state, std::size_t axis, std::size_t bins, double lo, double hi);

/// Histogram over mean +- 4 std of the coordinate (a unit interval around the mean when the spread is zero).
DensityTable histogram_density_auto(const ParticleState& state, std::size_t axis, std::size_t bins = 60);

/// CSV with header bin_left,bin_right,mass.
void write_density_csv(const std::filesystem::path& path, const DensityTable& table);

struct DecompositionCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;  // |lhs - rhs|
};

/// Both sides of
///   sum_ij |x_i|^(p-2) <x_i, f(x_i - x_j)>
///     = sum_ij [ 1/2 |x_i|^(p-2) <x_i - x_j, f(x_i - x_j)> + 1/4 (|x_i|^(p-2) - |x_j|^(p-2)) <x_i + x_j, f(x_i - x_j)> ]
/// over the empirical measure (both normalized by 1/N^2). Holds for odd f.
DecompositionCheck identity_decomposition_check(const Kernel& f, const ParticleState& state, double p);

struct OddKernelCheck {
  double lhs = 0.0;              // (1/N^2) sum_ij <x_i, f(x_i-x_j)> + (m-1)|f_sigma(x_i-x_j)|^2
  double symmetrized = 0.0;      // (1/N^2) sum_ij 1/2 <x_i-x_j, f(x_i-x_j)> + (m-1)|f_sigma(x_i-x_j)|^2
  double bound = 0.0;            // L * (second moment - |mean|^2)
  double equality_residual = 0.0;  // |lhs - symmetrized|
};

OddKernelCheck identity_odd_kernel_check(const Kernel& f, const Kernel& f_sigma, const ParticleState& state, double m,
                                         double L);

}  // namespace splitstep
