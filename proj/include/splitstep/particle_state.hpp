#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace splitstep {

/// N particles in R^d at one time point. Positions are row-major (particle-major).
struct ParticleState {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> positions;
  double time = 0.0;
  std::int64_t step = 0;

  ParticleState() = default;
  ParticleState(std::size_t particles, std::size_t dim);
  ParticleState(std::size_t particles, std::size_t dim, std::vector<double> values);

  std::span<double> row(std::size_t i) { return {positions.data() + i * d, d}; }
  std::span<const double> row(std::size_t i) const { return {positions.data() + i * d, d}; }

  bool all_finite() const;
};

/// Component-major copy: result[c * n + i] = state(i, c).
std::vector<double> to_component_major(const ParticleState& state);

// Binary checkpoint: u64 N, u64 d, f64 time, then N*d f64 row-major; little-endian.
void write_state(const std::filesystem::path& path, const ParticleState& state);
ParticleState read_state(const std::filesystem::path& path);

}  // namespace splitstep
