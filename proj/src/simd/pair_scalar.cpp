#include <cmath>
#include <vector>

#include "pair_internal.hpp"

namespace splitstep::detail {

// Reference backend: evaluates the kernel through its generic evaluator, pair by pair.
void scalar_rows(const RowTask& t, std::size_t row_begin, std::size_t row_end) {
  const std::size_t d = t.d, vs = t.value_size, jd = t.jacobian ? d * d : 0;
  const std::size_t k = vs + jd;
  const bool blocked = t.n >= kPairwiseThreshold;
  const std::size_t nblocks = blocked ? (t.n + kSumBlock - 1) / kSumBlock : 1;
  std::vector<double> z(d), val(vs), jac(jd), acc(k), blocks(nblocks * k), total(k);
  for (std::size_t i = row_begin; i < row_end; ++i) {
    const double* xi = t.row_major + i * d;
    for (std::size_t b = 0; b < nblocks; ++b) {
      const std::size_t j0 = blocked ? b * kSumBlock : 0;
      const std::size_t j1 = blocked ? std::min(t.n, j0 + kSumBlock) : t.n;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t j = j0; j < j1; ++j) {
        if (j == i) continue;
        const double* xj = t.row_major + j * d;
        for (std::size_t c = 0; c < d; ++c) z[c] = xi[c] - xj[c];
        t.kernel->evaluate(z, val);
        if (t.tame_scale > 0.0) {
          double s = 0.0;
          for (double v : val) s += v * v;
          const double fac = 1.0 / (1.0 + t.tame_scale * std::sqrt(s));
          for (double& v : val) v *= fac;
        }
        for (std::size_t e = 0; e < vs; ++e) acc[e] += val[e];
        if (jd) {
          t.kernel->jacobian(z, jac);
          for (std::size_t e = 0; e < jd; ++e) acc[vs + e] += jac[e];
        }
      }
      std::copy(acc.begin(), acc.end(), blocks.begin() + static_cast<std::ptrdiff_t>(b * k));
    }
    pairwise_combine(blocks.data(), 0, nblocks, k, total.data());
    const double inv = 1.0 / static_cast<double>(t.n);
    for (std::size_t e = 0; e < vs; ++e) t.values[(i - t.out_offset) * vs + e] = total[e] * inv;
    for (std::size_t e = 0; e < jd; ++e) t.jac[(i - t.out_offset) * jd + e] = total[vs + e] * inv;
  }
}

}  // namespace splitstep::detail
