#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "splitstep/model.hpp"

namespace splitstep {

/// Outcome of a sampled structural check. Checks never throw on a failed condition.
struct CheckReport {
  std::string name;
  double max_violation = 0.0;  // worst value of (lhs - rhs) over the samples
  bool pass = true;
  std::vector<double> worst_x;  // where the worst value was attained
  std::vector<double> worst_y;
  std::size_t samples = 0;
};

/// Flat lists of points in R^d (row-major).
struct SamplePoints {
  std::size_t d = 1;
  std::vector<double> values;
  std::size_t size() const { return d == 0 ? 0 : values.size() / d; }
  std::span<const double> point(std::size_t i) const { return {values.data() + i * d, d}; }
};

/// Pairs (x_k, y_k) in R^d.
struct SamplePairs {
  SamplePoints x;
  SamplePoints y;
  std::size_t size() const { return x.size(); }
};

struct VerifyOptions {
  double tolerance = 1e-9;
  double half_width = 10.0;
  std::size_t random_pairs = 10000;
  std::size_t grid_per_axis = 11;
  std::uint64_t seed = 20240101;
};

/// count uniform points in [-half_width, half_width]^d.
SamplePoints uniform_points(std::size_t d, std::size_t count, double half_width, std::uint64_t seed);

/// Uniform random pairs plus every pair of a regular grid with grid_per_axis points on
/// each of the first min(d, 2) axes (remaining coordinates zero).
SamplePairs default_pairs(std::size_t d, const VerifyOptions& options = {});

/// max |f(x) + f(-x)|.
CheckReport check_odd(const Kernel& f, const SamplePoints& points, double tolerance = 1e-9);

/// max <x-x', f(x)-f(x')> + 2(m-1)|f_sigma(x)-f_sigma(x')|^2 - L|x-x'|^2.
CheckReport check_one_sided_lipschitz(const Kernel& f, const Kernel& f_sigma, double m, double L,
                                      const SamplePairs& pairs, double tolerance = 1e-9);

/// max over pairs and p of (|x|^(p-2) - |y|^(p-2)) <x+y, f(x-y)> - L3 (|x|^p + |y|^p).
CheckReport check_additional_symmetry(const Kernel& f, const std::vector<double>& p_values, double L3,
                                      const SamplePairs& pairs, double tolerance = 1e-9);

/// max <x-x', u(x,mu)-u(x',mu')> + 2(m-1)|sigma(x,mu)-sigma(x',mu')|^2 - L_us1|x-x'|^2 - L_us2 W2(mu,mu')^2.
/// The measures are symmetric two-point laws (delta_{a} + delta_{-a})/2 and (delta_{a'} + delta_{-a'})/2
/// built from a second sample of pairs (a, a'), for which W2 is computed exactly, and Dirac masses.
CheckReport check_drift_diffusion_one_sided(const Model& model, double L_us1, double L_us2,
                                            const SamplePairs& pairs, const SamplePairs& measure_pairs,
                                            double tolerance = 1e-9);

/// max <x-x', b(x,mu)-b(x',mu')> - L_b2|x-x'|^2 - L_b3 W2^2 over the same sample family.
CheckReport check_b_one_sided(const Model& model, double L_b2, double L_b3, const SamplePairs& pairs,
                              const SamplePairs& measure_pairs, double tolerance = 1e-9);

/// Runs every check for which the model declares constants.
std::vector<CheckReport> verify_model(const Model& model, const VerifyOptions& options = {});

/// Exact W2 between two empirical measures of equal size and equal (uniform) weights in
/// any dimension, by minimizing over all pairings. Intended for tiny supports (n <= 8).
double w2_small_support(const SamplePoints& a, const SamplePoints& b);

}  // namespace splitstep
