#include <immintrin.h>

#include <cmath>
#include <vector>

#include "pair_internal.hpp"

namespace splitstep::detail {
namespace {

constexpr std::size_t kMaxRadial = 4;

struct Program {
  std::vector<double> power_coeff;
  std::vector<int> power_exp;
  bool has_linear = false;
  double linear[16] = {};
  std::vector<double> radial_coeff;
  std::vector<int> radial_exp;
  std::vector<double> gram;  // <B_s, B_t>_F
  bool need_sqrt = false;
};

bool as_int(double v, int lo, int hi, int& out) {
  if (!(v >= lo && v <= hi) || std::floor(v) != v) return false;
  out = static_cast<int>(v);
  return true;
}

bool compile(const Kernel& f, const PairSumOptions& options, Program& p) {
  if (f.is_callable()) return false;
  const std::size_t d = f.dim();
  if (d < 1 || d > 4) return false;
  if (f.has_vector_part() && f.has_radial_part()) return false;
  if (options.jacobian && f.has_radial_part()) return false;
  for (const auto& t : f.power_terms()) {
    int k;
    if (!as_int(t.exponent, 3, 15, k)) return false;
    p.power_coeff.push_back(t.coeff);
    p.power_exp.push_back(k);
    if (k % 2 == 0) p.need_sqrt = true;
  }
  if (!f.linear_part().values.empty()) {
    p.has_linear = true;
    for (std::size_t i = 0; i < d * d; ++i) p.linear[i] = f.linear_part().values[i];
  }
  const auto& radial = f.radial_terms();
  if (radial.size() > kMaxRadial) return false;
  for (const auto& t : radial) {
    int k;
    if (!as_int(t.exponent, 1, 16, k)) return false;
    p.radial_coeff.push_back(t.coeff);
    p.radial_exp.push_back(k);
    if (k % 2 == 1) p.need_sqrt = true;
  }
  for (const auto& a : radial)
    for (const auto& b : radial) {
      double s = 0.0;
      for (std::size_t e = 0; e < a.shape.values.size(); ++e) s += a.shape.values[e] * b.shape.values[e];
      p.gram.push_back(s);
    }
  return true;
}

// |z|^m from r2 = |z|^2 and s = |z|, m >= 0.
inline __m256d norm_pow(__m256d r2, __m256d s, int m) {
  __m256d r = (m & 1) ? s : _mm256_set1_pd(1.0);
  for (int q = 0; q < m / 2; ++q) r = _mm256_mul_pd(r, r2);
  return r;
}

inline double lane_sum(__m256d v) {
  alignas(32) double l[4];
  _mm256_store_pd(l, v);
  return (l[0] + l[1]) + (l[2] + l[3]);
}

template <int D>
void rows_impl(const Program& p, const RowTask& t, std::size_t row_begin, std::size_t row_end) {
  constexpr int NG = D * (D + 1) / 2;
  const std::size_t n = t.n, np = t.n_padded;
  const int nr = static_cast<int>(p.radial_coeff.size());
  const int np_terms = static_cast<int>(p.power_coeff.size());
  const bool radial = nr > 0;
  const bool jac = t.jacobian;
  const bool tame = t.tame_scale > 0.0;
  const std::size_t nv = radial ? static_cast<std::size_t>(nr) : static_cast<std::size_t>(D);
  const std::size_t k = nv + (jac ? 1 + NG : 0);
  const bool blocked = n >= kPairwiseThreshold;
  const std::size_t nblocks = blocked ? (n + kSumBlock - 1) / kSumBlock : 1;
  std::vector<double> blocks(nblocks * k), total(k);

  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d tau = _mm256_set1_pd(t.tame_scale);
  const __m256d lane_idx = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
  __m256d lin[D * D];
  for (int e = 0; e < D * D; ++e) lin[e] = _mm256_set1_pd(p.linear[e]);

  for (std::size_t i = row_begin; i < row_end; ++i) {
    __m256d yi[D];
    for (int c = 0; c < D; ++c) yi[c] = _mm256_set1_pd(t.row_major[i * D + c]);
    for (std::size_t b = 0; b < nblocks; ++b) {
      const std::size_t j0 = blocked ? b * kSumBlock : 0;
      const std::size_t j1 = blocked ? std::min(n, j0 + kSumBlock) : n;
      __m256d av[D], ag[NG], ar[kMaxRadial];
      __m256d aw = zero;
      for (int c = 0; c < D; ++c) av[c] = zero;
      for (int g = 0; g < NG; ++g) ag[g] = zero;
      for (std::size_t r = 0; r < kMaxRadial; ++r) ar[r] = zero;

      for (std::size_t j = j0; j < j1; j += 4) {
        __m256d z[D];
        for (int c = 0; c < D; ++c) z[c] = _mm256_sub_pd(yi[c], _mm256_loadu_pd(t.comp_major + c * np + j));
        if (j + 4 > j1) {
          const __m256d idx = _mm256_add_pd(_mm256_set1_pd(static_cast<double>(j)), lane_idx);
          const __m256d live = _mm256_cmp_pd(idx, _mm256_set1_pd(static_cast<double>(j1)), _CMP_LT_OQ);
          for (int c = 0; c < D; ++c) z[c] = _mm256_and_pd(z[c], live);
        }
        __m256d r2 = _mm256_mul_pd(z[0], z[0]);
        for (int c = 1; c < D; ++c) r2 = _mm256_fmadd_pd(z[c], z[c], r2);
        const __m256d s = p.need_sqrt ? _mm256_sqrt_pd(r2) : zero;

        if (!radial) {
          __m256d w = zero;
          for (int q = 0; q < np_terms; ++q)
            w = _mm256_fmadd_pd(_mm256_set1_pd(p.power_coeff[q]), norm_pow(r2, s, p.power_exp[q] - 1), w);
          __m256d v[D];
          for (int a = 0; a < D; ++a) {
            v[a] = _mm256_mul_pd(w, z[a]);
            if (p.has_linear)
              for (int c = 0; c < D; ++c) v[a] = _mm256_fmadd_pd(lin[a * D + c], z[c], v[a]);
          }
          if (tame) {
            __m256d m2 = _mm256_mul_pd(v[0], v[0]);
            for (int a = 1; a < D; ++a) m2 = _mm256_fmadd_pd(v[a], v[a], m2);
            const __m256d fac = _mm256_div_pd(one, _mm256_fmadd_pd(tau, _mm256_sqrt_pd(m2), one));
            for (int a = 0; a < D; ++a) v[a] = _mm256_mul_pd(v[a], fac);
          }
          for (int a = 0; a < D; ++a) av[a] = _mm256_add_pd(av[a], v[a]);
          if (jac) {
            aw = _mm256_add_pd(aw, w);
            __m256d g = zero;
            for (int q = 0; q < np_terms; ++q)
              g = _mm256_fmadd_pd(_mm256_set1_pd(p.power_coeff[q] * (p.power_exp[q] - 1)),
                                  norm_pow(r2, s, p.power_exp[q] - 3), g);
            int idx = 0;
            for (int a = 0; a < D; ++a) {
              const __m256d ga = _mm256_mul_pd(g, z[a]);
              for (int c = a; c < D; ++c) {
                ag[idx] = _mm256_fmadd_pd(ga, z[c], ag[idx]);
                ++idx;
              }
            }
          }
        } else {
          __m256d st[kMaxRadial];
          for (int q = 0; q < nr; ++q)
            st[q] = _mm256_mul_pd(_mm256_set1_pd(p.radial_coeff[q]), norm_pow(r2, s, p.radial_exp[q]));
          if (tame) {
            __m256d m2 = zero;
            for (int a = 0; a < nr; ++a)
              for (int c = 0; c < nr; ++c)
                m2 = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_set1_pd(p.gram[a * nr + c]), st[a]), st[c], m2);
            const __m256d fac = _mm256_div_pd(one, _mm256_fmadd_pd(tau, _mm256_sqrt_pd(m2), one));
            for (int q = 0; q < nr; ++q) st[q] = _mm256_mul_pd(st[q], fac);
          }
          for (int q = 0; q < nr; ++q) ar[q] = _mm256_add_pd(ar[q], st[q]);
        }
      }

      double* out = blocks.data() + b * k;
      if (!radial) {
        for (int c = 0; c < D; ++c) out[c] = lane_sum(av[c]);
        if (jac) {
          out[D] = lane_sum(aw);
          for (int g = 0; g < NG; ++g) out[D + 1 + g] = lane_sum(ag[g]);
        }
      } else {
        for (int q = 0; q < nr; ++q) out[q] = lane_sum(ar[q]);
      }
    }
    pairwise_combine(blocks.data(), 0, nblocks, k, total.data());

    const double inv = 1.0 / static_cast<double>(n);
    const std::size_t vs = t.value_size;
    if (!radial) {
      for (int c = 0; c < D; ++c) t.values[i * vs + c] = total[c] * inv;
      if (jac) {
        double* J = t.jac + i * D * D;
        const double lin_scale = static_cast<double>(n - 1) * inv;
        int idx = 0;
        for (int a = 0; a < D; ++a) {
          for (int c = a; c < D; ++c) {
            const double g = total[D + 1 + idx] * inv;
            J[a * D + c] = g;
            J[c * D + a] = g;
            ++idx;
          }
        }
        for (int a = 0; a < D; ++a) J[a * D + a] += total[D] * inv;
        if (p.has_linear)
          for (int e = 0; e < D * D; ++e) J[e] += p.linear[e] * lin_scale;
      }
    } else {
      const auto& terms = t.kernel->radial_terms();
      for (std::size_t e = 0; e < vs; ++e) {
        double v = 0.0;
        for (int q = 0; q < nr; ++q) v += total[q] * inv * terms[q].shape.values[e];
        t.values[i * vs + e] = v;
      }
    }
  }
}

}  // namespace

bool avx2_supports(const Kernel& f, const PairSumOptions& options) {
  Program p;
  return compile(f, options, p);
}

void avx2_rows(const RowTask& task, std::size_t row_begin, std::size_t row_end) {
  Program p;
  PairSumOptions o;
  o.jacobian = task.jacobian;
  compile(*task.kernel, o, p);
  switch (task.d) {
    case 1: rows_impl<1>(p, task, row_begin, row_end); break;
    case 2: rows_impl<2>(p, task, row_begin, row_end); break;
    case 3: rows_impl<3>(p, task, row_begin, row_end); break;
    case 4: rows_impl<4>(p, task, row_begin, row_end); break;
    default: scalar_rows(task, row_begin, row_end); break;
  }
}

}  // namespace splitstep::detail
