#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "splitstep/kernel.hpp"
#include "splitstep/particle_state.hpp"

namespace splitstep {

enum class SimdBackend { scalar, avx2 };

const char* backend_name(SimdBackend backend);

/// True when the AVX2/FMA kernels were compiled in and the CPU supports them.
bool avx2_available();

/// Backend used when a call does not ask for one: AVX2 when available, unless the
/// environment sets SPLITSTEP_SIMD=scalar or set_backend() pinned a choice.
SimdBackend active_backend();
void set_backend(std::optional<SimdBackend> backend);

struct PairSumOptions {
  bool jacobian = false;    // also accumulate (1/N) sum_{j != i} grad f(x_i - x_j); vector kernels only
  double tame_scale = 0.0;  // > 0: every pair value g is replaced by g / (1 + tame_scale |g|)
  std::optional<SimdBackend> backend;
  bool parallel = true;     // split rows over the global pool
};

struct PairSums {
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t value_size = 0;
  std::vector<double> values;    // n x value_size, row i = (1/N) sum_j f(x_i - x_j)
  std::vector<double> jacobian;  // n x d x d when requested

  std::span<const double> row(std::size_t i) const { return {values.data() + i * value_size, value_size}; }
  std::span<const double> jacobian_row(std::size_t i) const { return {jacobian.data() + i * d * d, d * d}; }
};

/// All N convolution rows in one pass. Summation runs over ascending j; for N >= 1024 the
/// j range is cut into blocks of 128 that are combined pairwise. The vectorized backend
/// keeps the block structure but accumulates four interleaved lanes inside a block, so
/// the two backends agree to rounding, not bitwise. Throws NonFinite on a non-finite sum.
void pair_sums(const Kernel& f, const ParticleState& state, const PairSumOptions& options, PairSums& out);

/// Whether the vectorized backend covers this kernel and option set (otherwise the scalar
/// backend is used even when AVX2 is requested).
bool simd_supports(const Kernel& f, const PairSumOptions& options);

inline constexpr std::size_t kPairwiseThreshold = 1024;
inline constexpr std::size_t kSumBlock = 128;

}  // namespace splitstep
