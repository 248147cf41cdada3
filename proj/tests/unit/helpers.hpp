#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "splitstep/particle_state.hpp"

namespace testing {

inline splitstep::ParticleState random_state(std::size_t n, std::size_t d, double scale, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g(0.0, scale);
  splitstep::ParticleState s(n, d);
  for (double& v : s.positions) v = g(gen);
  return s;
}

inline splitstep::ParticleState state_1d(std::vector<double> v) {
  const std::size_t n = v.size();
  return splitstep::ParticleState(n, 1, std::move(v));
}

/// Root of a strictly increasing scalar function on [lo, hi].
inline double bisect(const std::function<double(double)>& g, double lo, double hi) {
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > 0.0) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace testing
