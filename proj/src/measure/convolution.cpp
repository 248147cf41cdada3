#include "../simd/pair_internal.hpp"
#include "splitstep/error.hpp"
#include "splitstep/measure.hpp"

#include <cmath>

namespace splitstep {

std::vector<double> convolve(const Kernel& kernel, const ParticleState& state, std::size_t i) {
  if (kernel.dim() != state.d) throw DimensionMismatch("kernel dimension differs from state dimension");
  if (i >= state.n) throw SizeMismatch("particle index out of range");
  std::vector<double> out(kernel.value_size());
  detail::RowTask task;
  task.kernel = &kernel;
  task.row_major = state.positions.data();
  task.n = state.n;
  task.d = state.d;
  task.value_size = kernel.value_size();
  task.values = out.data();
  task.out_offset = i;
  detail::scalar_rows(task, i, i + 1);
  for (double v : out)
    if (!std::isfinite(v)) throw NonFinite("non-finite convolution sum");
  return out;
}

}  // namespace splitstep
