#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "splitstep/error.hpp"
#include "splitstep/measure.hpp"
#include "splitstep/model.hpp"

using namespace splitstep;
using testing::random_state;
using testing::state_1d;

TEST_SUITE("measure") {
  TEST_CASE("convolve examples") {
    const Kernel cubic = Kernel::power_law(1, -1.0, 3.0);
    CHECK(convolve(cubic, state_1d({0.7}), 0)[0] == 0.0);
    CHECK(convolve(cubic, state_1d({1.0, -1.0}), 0)[0] == doctest::Approx(-4.0));
    const ParticleState s = random_state(17, 2, 1.0, 4);
    const Kernel lin = Kernel::linear(2, 1.0);
    double mean[2] = {0, 0};
    for (std::size_t i = 0; i < s.n; ++i)
      for (int c = 0; c < 2; ++c) mean[c] += s.positions[i * 2 + c] / 17.0;
    for (std::size_t i = 0; i < s.n; ++i) {
      const auto v = convolve(lin, s, i);
      CHECK(v[0] == doctest::Approx(s.positions[i * 2] - mean[0]));
      CHECK(v[1] == doctest::Approx(s.positions[i * 2 + 1] - mean[1]));
    }
  }

  TEST_CASE("odd convolutions sum to zero") {
    for (std::size_t n : {10u, 300u, 1100u}) {
      const ParticleState s = random_state(n, 2, 2.0, 7);
      const Kernel f = Kernel::power_law(2, -1.0, 3.0);
      double sum[2] = {0, 0}, scale = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto v = convolve(f, s, i);
        sum[0] += v[0];
        sum[1] += v[1];
        scale = std::max({scale, std::fabs(v[0]), std::fabs(v[1])});
      }
      CHECK(std::fabs(sum[0]) <= 1e-10 * n * scale);
      CHECK(std::fabs(sum[1]) <= 1e-10 * n * scale);
    }
  }

  TEST_CASE("empirical moments") {
    CHECK(empirical_moment(state_1d({0, 0, 0}), 2.0) == 0.0);
    CHECK(empirical_moment(state_1d({1, -1, 1, -1}), 2.0) == 1.0);
    CHECK(empirical_moment(state_1d({3, 4}), 3.0) == doctest::Approx(45.5));
    ParticleState planar(1, 2, {3.0, 4.0});
    CHECK(empirical_moment(planar, 2.0) == doctest::Approx(25.0));
  }

  TEST_CASE("w2_1d examples and properties") {
    const std::vector<double> a{0.3, -1.0, 2.0};
    CHECK(w2_1d(a, a) == 0.0);
    CHECK(w2_1d(std::vector<double>{0.0}, std::vector<double>{2.0}) == doctest::Approx(2.0));
    CHECK(w2_1d(std::vector<double>{0.0, 2.0}, std::vector<double>{1.0, 3.0}) == doctest::Approx(1.0));
    CHECK(w2_1d(std::vector<double>{2.0, 0.0}, std::vector<double>{3.0, 1.0}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(w2_1d(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}), SizeMismatch);
    std::mt19937_64 gen(9);
    std::normal_distribution<double> g;
    for (int k = 0; k < 100; ++k) {
      std::vector<double> x(20), y(20), z(20);
      for (int i = 0; i < 20; ++i) {
        x[i] = g(gen);
        y[i] = 2.0 * g(gen) + 1.0;
        z[i] = g(gen) - 0.5;
      }
      CHECK(w2_1d(x, z) <= w2_1d(x, y) + w2_1d(y, z) + 1e-12);
      const ParticleState A = state_1d(x), B = state_1d(y);
      CHECK(w2_paired_bound(A, B) >= w2_1d(x, y) - 1e-12);
    }
  }

  TEST_CASE("paired bound examples") {
    const ParticleState A = state_1d({0.0, 1.0}), B = state_1d({1.0, 0.0});
    CHECK(w2_paired_bound(A, A) == 0.0);
    CHECK(w2_paired_bound(A, B) == doctest::Approx(1.0));
    CHECK(w2_1d(A.positions, B.positions) == 0.0);
    CHECK_THROWS_AS(w2_paired_bound(A, state_1d({1.0})), SizeMismatch);
  }

  TEST_CASE("histogram examples") {
    const DensityTable mid = histogram_density(state_1d({0.5, 0.5, 0.5}), 0, 5, 0.0, 1.0);
    CHECK(mid.mass[2] == 1.0);
    const DensityTable split = histogram_density(state_1d({-2, -2, 2, 2}), 0, 3, -3.0, 3.0);
    CHECK(split.mass == std::vector<double>{0.5, 0.0, 0.5});
    std::vector<double> u;
    for (int k = 0; k < 1000; ++k) u.push_back((k + 0.5) / 1000.0);
    const DensityTable halves = histogram_density(state_1d(u), 0, 2, 0.0, 1.0);
    CHECK(halves.mass[0] == doctest::Approx(0.5));
    CHECK(halves.mass[1] == doctest::Approx(0.5));
    for (unsigned seed = 0; seed < 20; ++seed) {
      const ParticleState s = random_state(257, 1, 3.0, seed);
      const DensityTable t = histogram_density(s, 0, 13, -2.0, 2.5);
      double total = t.underflow + t.overflow;
      for (double m : t.mass) total += m;
      CHECK(std::fabs(total - 1.0) <= 1e-12);
      const DensityTable a = histogram_density_auto(s, 0);
      CHECK(a.mass.size() == 60);
    }
  }

  TEST_CASE("decomposition identity for built-in odd kernels") {
    std::vector<Kernel> kernels{Kernel::power_law(1, -1.0, 3.0), Kernel::linear(1, -2.0),
                                builtin_model("double-well", 1).f, builtin_model("invariant", 1).f};
    for (const auto& f : kernels) {
      CHECK(identity_decomposition_check(f, state_1d({1.3}), 4.0).lhs == 0.0);
      for (unsigned seed = 0; seed < 10; ++seed) {
        const ParticleState s = random_state(50, 1, 1.5, seed);
        for (double p : {3.0, 4.0, 6.0}) {
          const DecompositionCheck c = identity_decomposition_check(f, s, p);
          CHECK(c.residual < 1e-10 * (1.0 + std::fabs(c.lhs)));
        }
      }
    }
    // {a, -a}, p = 4: lhs = (1/4) * 2 * |a|^2 <a, f(2a)>
    const double a = 0.8;
    const DecompositionCheck sym = identity_decomposition_check(Kernel::power_law(1, -1.0, 3.0), state_1d({a, -a}), 4.0);
    CHECK(sym.lhs == doctest::Approx(0.5 * a * a * a * (-8.0 * a * a * a)));
    CHECK(sym.residual < 1e-12);
  }

  TEST_CASE("odd kernel inequality examples") {
    const Kernel zero = Kernel::zero(1);
    const OddKernelCheck flat =
        identity_odd_kernel_check(Kernel::power_law(1, -1.0, 3.0), zero, state_1d({0.4, 0.4, 0.4}), 4.0, 0.0);
    CHECK(flat.lhs == 0.0);
    CHECK(flat.bound == 0.0);
    // {1, -1}: (1/4) [<1, f(2)> + <-1, f(-2)>] = -4, i.e. 1/2 <2, f(2)> scaled by the 1/N^2 pair average
    const OddKernelCheck pm = identity_odd_kernel_check(Kernel::power_law(1, -1.0, 3.0), zero, state_1d({1, -1}), 4.0, 0.0);
    CHECK(pm.lhs == doctest::Approx(-4.0));
    CHECK(pm.lhs <= pm.bound);
    const ParticleState s = random_state(40, 1, 2.0, 1);
    const OddKernelCheck lin = identity_odd_kernel_check(Kernel::linear(1, -1.5), zero, s, 4.0, -1.5);
    CHECK(lin.lhs == doctest::Approx(lin.bound).epsilon(1e-12));
    CHECK(lin.equality_residual < 1e-10);
  }

  TEST_CASE("state checkpoint round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "splitstep_state_test";
    std::filesystem::create_directories(dir);
    ParticleState s = random_state(33, 3, 1.0, 2);
    s.time = 0.125;
    write_state(dir / "s.bin", s);
    const ParticleState r = read_state(dir / "s.bin");
    CHECK(r.n == 33);
    CHECK(r.d == 3);
    CHECK(r.time == 0.125);
    CHECK(r.positions == s.positions);
    CHECK(std::filesystem::file_size(dir / "s.bin") == 24 + 33 * 3 * 8);
    std::ofstream(dir / "bad.bin") << "xx";
    CHECK_THROWS_AS(read_state(dir / "bad.bin"), IoFailure);
    CHECK_THROWS_AS(read_state(dir / "missing.bin"), IoFailure);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("state invariants") {
    CHECK_THROWS_AS(ParticleState(0, 1), SizeMismatch);
    ParticleState s(2, 1);
    CHECK(s.all_finite());
    s.positions[1] = NAN;
    CHECK_FALSE(s.all_finite());
  }
}
