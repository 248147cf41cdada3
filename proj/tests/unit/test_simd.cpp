#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "splitstep/error.hpp"
#include "splitstep/measure.hpp"
#include "splitstep/model.hpp"
#include "splitstep/pair_sums.hpp"
#include "splitstep/thread_pool.hpp"

using namespace splitstep;
using testing::random_state;

namespace {

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double scale = 1e-300, diff = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    scale = std::max(scale, std::fabs(a[k]));
    diff = std::max(diff, std::fabs(a[k] - b[k]));
  }
  return diff / scale;
}

PairSums run(const Kernel& f, const ParticleState& s, SimdBackend backend, bool jac, double tame = 0.0) {
  PairSumOptions o;
  o.backend = backend;
  o.jacobian = jac;
  o.tame_scale = tame;
  PairSums out;
  pair_sums(f, s, o, out);
  return out;
}

}  // namespace

TEST_SUITE("simd") {
  TEST_CASE("scalar backend matches the per-particle convolution") {
    const Kernel f = builtin_model("double-well", 1).f;
    for (std::size_t n : {1u, 7u, 1500u}) {
      const ParticleState s = random_state(n, 1, 2.0, 3);
      const PairSums p = run(f, s, SimdBackend::scalar, false);
      for (std::size_t i = 0; i < n; i += std::max<std::size_t>(1, n / 13)) {
        const auto v = convolve(f, s, i);
        CHECK(p.row(i)[0] == v[0]);
      }
    }
  }

  TEST_CASE("avx2 agrees with scalar to rounding") {
    if (!avx2_available()) {
      MESSAGE("AVX2 not available; skipped");
      return;
    }
    const std::vector<std::pair<std::string, std::size_t>> models{
        {"double-well", 1}, {"invariant", 1}, {"vdp2d", 2}, {"poc-dd", 2}, {"supermeasure-case1", 1}};
    for (const auto& [name, d] : models) {
      const Model m = builtin_model(name, d);
      for (std::size_t n : {5u, 64u, 1023u, 1024u, 2100u}) {
        const ParticleState s = random_state(n, d, 1.5, static_cast<unsigned>(n));
        for (const Kernel* k : {&m.f, &m.f_sigma}) {
          if (k->is_zero()) continue;
          const bool jac = k->cols() == 1;
          const PairSums a = run(*k, s, SimdBackend::scalar, jac);
          const PairSums b = run(*k, s, SimdBackend::avx2, jac);
          CHECK(max_rel_diff(a.values, b.values) < 1e-12);
          if (jac) CHECK(max_rel_diff(a.jacobian, b.jacobian) < 1e-12);
          const PairSums ta = run(*k, s, SimdBackend::scalar, false, 10.0);
          const PairSums tb = run(*k, s, SimdBackend::avx2, false, 10.0);
          CHECK(max_rel_diff(ta.values, tb.values) < 1e-12);
        }
      }
    }
  }

  TEST_CASE("jacobian matches central differences") {
    const Kernel f = builtin_model("vdp2d", 2).f;
    const ParticleState s = random_state(30, 2, 1.0, 5);
    const PairSums p = run(f, s, SimdBackend::scalar, true);
    const double eps = 1e-6;
    for (std::size_t i = 0; i < 30; i += 7) {
      for (std::size_t c = 0; c < 2; ++c) {
        ParticleState plus = s, minus = s;
        plus.positions[i * 2 + c] += eps;
        minus.positions[i * 2 + c] -= eps;
        const auto vp = convolve(f, plus, i), vm = convolve(f, minus, i);
        for (std::size_t a = 0; a < 2; ++a) {
          // d/dx_i of (1/N) sum_{j != i} f(x_i - x_j)
          const double fd = (vp[a] - vm[a]) / (2 * eps);
          CHECK(p.jacobian_row(i)[a * 2 + c] == doctest::Approx(fd).epsilon(1e-6));
        }
      }
    }
  }

  TEST_CASE("tamed pair values follow g / (1 + s|g|)") {
    const Kernel f = Kernel::linear(1, 1.0);
    const ParticleState s = testing::state_1d({0.0, 2.0});
    const PairSums p = run(f, s, SimdBackend::scalar, false, 100.0);
    // pair (0,1): g = -2, tamed -2/201; averaged over N = 2
    CHECK(p.row(0)[0] == doctest::Approx(-2.0 / 201.0 / 2.0));
    CHECK(p.row(1)[0] == doctest::Approx(2.0 / 201.0 / 2.0));
  }

  TEST_CASE("results do not depend on the thread count") {
    const Model m = builtin_model("poc-dd", 2);
    const ParticleState s = random_state(3000, 2, 1.0, 11);
    for (SimdBackend backend : {SimdBackend::scalar, SimdBackend::avx2}) {
      if (backend == SimdBackend::avx2 && !avx2_available()) continue;
      set_thread_count(1);
      const PairSums one = run(m.f, s, backend, true);
      set_thread_count(4);
      const PairSums four = run(m.f, s, backend, true);
      CHECK(one.values == four.values);
      CHECK(one.jacobian == four.jacobian);
    }
    set_thread_count(1);
  }

  TEST_CASE("non-finite sums are reported") {
    ParticleState s = random_state(10, 1, 1.0, 1);
    s.positions[3] = 1e200;
    PairSums out;
    CHECK_THROWS_AS(pair_sums(Kernel::power_law(1, -1.0, 3.0), s, {}, out), NonFinite);
  }
}
