#pragma once

#include <cstddef>
#include <vector>

#include "splitstep/kernel.hpp"
#include "splitstep/pair_sums.hpp"

namespace splitstep::detail {

struct RowTask {
  const Kernel* kernel = nullptr;
  const double* row_major = nullptr;  // n x d
  const double* comp_major = nullptr; // d x n_padded, zero padded
  std::size_t n = 0;
  std::size_t n_padded = 0;
  std::size_t d = 0;
  std::size_t value_size = 0;
  bool jacobian = false;
  double tame_scale = 0.0;
  double* values = nullptr;
  double* jac = nullptr;
  std::size_t out_offset = 0;  // row i is written at output row i - out_offset
};

// Sum of blocks[lo..hi) of width k, halving recursively.
inline void pairwise_combine(const double* blocks, std::size_t lo, std::size_t hi, std::size_t k, double* out) {
  if (hi - lo == 1) {
    for (std::size_t e = 0; e < k; ++e) out[e] = blocks[lo * k + e];
    return;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  std::vector<double> right(k);
  pairwise_combine(blocks, lo, mid, k, out);
  pairwise_combine(blocks, mid, hi, k, right.data());
  for (std::size_t e = 0; e < k; ++e) out[e] += right[e];
}

void scalar_rows(const RowTask& task, std::size_t row_begin, std::size_t row_end);

#ifdef SPLITSTEP_HAVE_AVX2
bool avx2_supports(const Kernel& f, const PairSumOptions& options);
void avx2_rows(const RowTask& task, std::size_t row_begin, std::size_t row_end);
#endif

}  // namespace splitstep::detail
