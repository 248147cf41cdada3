#include <cmath>
#include <cstdlib>
#include <cstring>
#include <mutex>

#include "pair_internal.hpp"
#include "splitstep/error.hpp"
#include "splitstep/thread_pool.hpp"

namespace splitstep {

namespace {
std::mutex g_backend_mutex;
std::optional<SimdBackend> g_override;
}  // namespace

const char* backend_name(SimdBackend backend) { return backend == SimdBackend::avx2 ? "avx2" : "scalar"; }

bool avx2_available() {
#ifdef SPLITSTEP_HAVE_AVX2
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok;
#else
  return false;
#endif
}

SimdBackend active_backend() {
  {
    std::lock_guard<std::mutex> lock(g_backend_mutex);
    if (g_override) return *g_override == SimdBackend::avx2 && !avx2_available() ? SimdBackend::scalar : *g_override;
  }
  const char* env = std::getenv("SPLITSTEP_SIMD");
  if (env && std::strcmp(env, "scalar") == 0) return SimdBackend::scalar;
  return avx2_available() ? SimdBackend::avx2 : SimdBackend::scalar;
}

void set_backend(std::optional<SimdBackend> backend) {
  std::lock_guard<std::mutex> lock(g_backend_mutex);
  g_override = backend;
}

bool simd_supports(const Kernel& f, const PairSumOptions& options) {
#ifdef SPLITSTEP_HAVE_AVX2
  return avx2_available() && detail::avx2_supports(f, options);
#else
  (void)f;
  (void)options;
  return false;
#endif
}

void pair_sums(const Kernel& f, const ParticleState& state, const PairSumOptions& options, PairSums& out) {
  if (f.dim() != state.d) throw DimensionMismatch("kernel dimension differs from state dimension");
  if (options.jacobian && f.cols() != 1) throw DimensionMismatch("pair Jacobians need a vector kernel");
  const std::size_t n = state.n, d = state.d, vs = f.value_size();
  out.n = n;
  out.d = d;
  out.value_size = vs;
  out.values.assign(n * vs, 0.0);
  if (options.jacobian) out.jacobian.assign(n * d * d, 0.0);
  else out.jacobian.clear();
  if (f.is_zero()) return;

  const SimdBackend want = options.backend.value_or(active_backend());
  const bool vectorized = want == SimdBackend::avx2 && simd_supports(f, options);

  detail::RowTask task;
  task.kernel = &f;
  task.row_major = state.positions.data();
  task.n = n;
  task.d = d;
  task.value_size = vs;
  task.jacobian = options.jacobian;
  task.tame_scale = options.tame_scale;
  task.values = out.values.data();
  task.jac = options.jacobian ? out.jacobian.data() : nullptr;

  std::vector<double> cm;
  if (vectorized) {
    task.n_padded = (n + 3) / 4 * 4;
    cm.assign(d * task.n_padded, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < d; ++c) cm[c * task.n_padded + i] = state.positions[i * d + c];
    task.comp_major = cm.data();
  }

  auto body = [&](std::size_t lo, std::size_t hi) {
#ifdef SPLITSTEP_HAVE_AVX2
    if (vectorized) {
      detail::avx2_rows(task, lo, hi);
      return;
    }
#endif
    detail::scalar_rows(task, lo, hi);
  };
  if (options.parallel && thread_count() > 1) {
    global_pool().parallel_for(0, n, 16, body);
  } else {
    body(0, n);
  }

  for (double v : out.values)
    if (!std::isfinite(v)) throw NonFinite("non-finite convolution sum");
  for (double v : out.jacobian)
    if (!std::isfinite(v)) throw NonFinite("non-finite convolution Jacobian");
}

}  // namespace splitstep
