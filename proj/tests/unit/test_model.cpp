#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "splitstep/coefficient.hpp"
#include "splitstep/error.hpp"
#include "splitstep/model.hpp"
#include "splitstep/verify.hpp"

using namespace splitstep;

namespace {

Kernel square_kernel() {
  return Kernel::from_function(
      1, 1, [](std::span<const double> x, std::span<double> out) { out[0] = x[0] * x[0]; }, {}, false);
}

double drift_at_dirac(const Model& m, std::span<const double> x, std::span<double> out) {
  const MeasureSummary mu = MeasureSummary::dirac(x);
  std::vector<double> u(m.d), b(m.d);
  m.u.evaluate(0.0, x, mu, u);
  m.b.evaluate(0.0, x, mu, b);
  for (std::size_t a = 0; a < m.d; ++a) out[a] = u[a] + b[a];
  return out[0];
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("double-well drift at a Dirac measure has roots -2, 0, 2") {
    const Model m = builtin_model("double-well", 1);
    for (double x : {-2.0, 0.0, 2.0}) {
      double v[1];
      const double pt[1] = {x};
      drift_at_dirac(m, pt, v);
      CHECK(v[0] == doctest::Approx(0.0).epsilon(1e-14));
    }
    double v[1];
    const double pt[1] = {1.0};
    CHECK(drift_at_dirac(m, pt, v) == doctest::Approx(-0.25 + 1.0));
    CHECK(m.f_sigma.is_zero());
    double fx[1];
    const double three[1] = {3.0};
    m.f.evaluate(three, fx);
    CHECK(fx[0] == doctest::Approx(-27.0));
    double s[1];
    m.sigma.evaluate(0.0, three, MeasureSummary::dirac(three), s);
    CHECK(s[0] == doctest::Approx(3.0 + 9.0 / 4.0));
  }

  TEST_CASE("invariant model at the origin") {
    const Model m = builtin_model("invariant", 1);
    const double x[1] = {0.0};
    double v[1], s[1];
    drift_at_dirac(m, x, v);
    CHECK(v[0] == 0.0);
    m.sigma.evaluate(0.0, x, MeasureSummary::dirac(x), s);
    CHECK(s[0] == doctest::Approx(0.25));
  }

  TEST_CASE("vdp2d at the origin") {
    const Model m = builtin_model("vdp2d", 2);
    const double x[2] = {0.0, 0.0};
    const MeasureSummary mu = MeasureSummary::dirac(x);
    std::vector<double> u(2), b(2), s(m.d * m.l);
    m.u.evaluate(0.0, x, mu, u);
    m.b.evaluate(0.0, x, mu, b);
    m.sigma.evaluate(0.0, x, mu, s);
    CHECK(u == std::vector<double>{0.0, 0.0});
    CHECK(b == std::vector<double>{0.0, 0.0});
    REQUIRE(m.l == 2);
    CHECK(s[0] == 1.0);
    CHECK(s[1] == 0.0);
  }

  TEST_CASE("unknown model and wrong dimension") {
    CHECK_THROWS_AS(builtin_model("no-such-model", 1), UnknownModel);
    CHECK_THROWS_AS(builtin_model("double-well", 2), DimensionMismatch);
    CHECK_THROWS_AS(builtin_model("poc-dd", 1), DimensionMismatch);
    CHECK_NOTHROW(builtin_model("poc-dd", 5));
  }

  TEST_CASE("check_odd examples") {
    const Kernel cubic = Kernel::power_law(1, -1.0, 3.0);
    SamplePoints two{1, {2.0}};
    CHECK(check_odd(cubic, two).max_violation == 0.0);
    SamplePoints one{1, {1.0}};
    const CheckReport r = check_odd(square_kernel(), one);
    CHECK(r.max_violation == doctest::Approx(2.0));
    CHECK_FALSE(r.pass);
    const SamplePoints pts = uniform_points(3, 1000, 10.0, 5);
    CHECK(check_odd(Kernel::power_law(3, -1.0, 3.0), pts).max_violation < 1e-12);
  }

  TEST_CASE("built-in odd kernels are odd and normalized") {
    for (const auto& name : builtin_model_names()) {
      const std::size_t d = name == "vdp2d" || name == "poc-dd" || name == "rotation2d" ? 2 : 1;
      const Model m = builtin_model(name, d);
      const SamplePoints pts = uniform_points(d, 1000, 10.0, 11);
      std::vector<double> zero(d, 0.0), v(m.f.value_size()), vs(m.f_sigma.value_size());
      m.f.evaluate(zero, v);
      m.f_sigma.evaluate(zero, vs);
      CHECK_MESSAGE(std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; }), name);
      CHECK_MESSAGE(std::all_of(vs.begin(), vs.end(), [](double x) { return x == 0.0; }), name);
      if (m.f.declared_odd()) CHECK_MESSAGE(check_odd(m.f, pts).max_violation < 1e-12, name);
    }
  }

  TEST_CASE("one-sided Lipschitz examples") {
    const SamplePairs pairs = default_pairs(1);
    const Kernel zero = Kernel::zero(1);
    const CheckReport cubic = check_one_sided_lipschitz(Kernel::power_law(1, -1.0, 3.0), zero, 4.0, 0.0, pairs);
    CHECK(cubic.pass);
    CHECK(cubic.max_violation <= 0.0);
    const CheckReport lin = check_one_sided_lipschitz(Kernel::linear(1, 1.0), zero, 4.0, 1.0, pairs);
    CHECK(lin.pass);
    CHECK(std::fabs(lin.max_violation) < 1e-12);
  }

  TEST_CASE("one-sided Lipschitz constant found by an independent grid sweep") {
    // f = -x|x|^2, f_sigma = x^2/4 on [-3,3]^2, m = 6
    const double m = 6.0;
    SamplePairs grid;
    grid.x.d = grid.y.d = 1;
    double L_star = -INFINITY;
    for (int a = 0; a <= 60; ++a)
      for (int b = 0; b <= 60; ++b) {
        const double x = -3.0 + 0.1 * a, y = -3.0 + 0.1 * b;
        if (a == b) continue;
        grid.x.values.push_back(x);
        grid.y.values.push_back(y);
        const double inner = (x - y) * (-x * x * x + y * y * y);
        const double s = 0.25 * (x * x - y * y);
        L_star = std::max(L_star, (inner + 2.0 * (m - 1.0) * s * s) / ((x - y) * (x - y)));
      }
    const Kernel f = Kernel::power_law(1, -1.0, 3.0);
    const Kernel fs = Kernel::radial(1, 0.25, 2.0, DenseMatrix::identity(1));
    CHECK(check_one_sided_lipschitz(f, fs, m, L_star, grid, 1e-9).pass);
    const CheckReport tight = check_one_sided_lipschitz(f, fs, m, L_star - 0.1, grid, 1e-9);
    CHECK_FALSE(tight.pass);
    CHECK(tight.max_violation > 0.0);
  }

  TEST_CASE("additional symmetry holds for -x|x|^2 with L3 = 0") {
    for (std::size_t d : {1u, 2u, 3u}) {
      VerifyOptions o;
      o.random_pairs = 10000;
      const SamplePairs pairs = default_pairs(d, o);
      const CheckReport r = check_additional_symmetry(Kernel::power_law(d, -1.0, 3.0), {3.0, 4.0, 6.0}, 0.0, pairs);
      CHECK(r.pass);
      CHECK(r.max_violation <= 1e-12);
    }
  }

  TEST_CASE("additional symmetry at x = y gives -2 L3 |x|^p") {
    SamplePairs p;
    p.x = SamplePoints{1, {1.5}};
    p.y = SamplePoints{1, {1.5}};
    const CheckReport r = check_additional_symmetry(Kernel::power_law(1, -1.0, 3.0), {4.0}, 0.5, p);
    CHECK(r.max_violation == doctest::Approx(-2.0 * 0.5 * std::pow(1.5, 4.0)));
  }

  TEST_CASE("zeta examples and monotonicity") {
    ModelConstants c;
    c.L_f1 = 0.0;
    c.L_us1 = 0.0;
    c.L_us2 = 0.0;
    CHECK(compute_zeta(c) == 0.0);
    CHECK(max_stepsize(c) == 1.0);
    c.L_f1 = 1.0;
    c.L_us1 = 1.0;
    CHECK(compute_zeta(c) == 6.0);
    c.L_f1 = -2.0;
    c.L_us1 = 0.0;
    CHECK(compute_zeta(c) == 0.0);
    CHECK_THROWS_AS(compute_zeta(ModelConstants{}), MissingConstant);

    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-5.0, 5.0), step(0.0, 2.0);
    for (int k = 0; k < 500; ++k) {
      ModelConstants a;
      a.L_f1 = u(gen);
      a.L_us1 = u(gen);
      a.L_us2 = u(gen);
      const double z = compute_zeta(a);
      for (int which = 0; which < 3; ++which) {
        ModelConstants b = a;
        std::optional<double>& slot = which == 0 ? b.L_f1 : which == 1 ? b.L_us1 : b.L_us2;
        *slot += step(gen);
        CHECK(compute_zeta(b) >= z);
      }
    }
    const Model dw = builtin_model("double-well", 1);
    CHECK(compute_zeta(dw.constants) == 24.0);
  }

  TEST_CASE("built-in models pass their declared checks") {
    for (const char* name : {"double-well", "invariant", "ou-linear"}) {
      for (const auto& r : verify_model(builtin_model(name, 1)))
        CHECK_MESSAGE(r.pass, name << ": " << r.name << " violation " << r.max_violation);
    }
    for (const auto& r : verify_model(builtin_model("vdp2d", 2)))
      CHECK_MESSAGE(r.pass, "vdp2d: " << r.name << " violation " << r.max_violation);
    for (const auto& r : verify_model(builtin_model("poc-dd", 2)))
      CHECK_MESSAGE(r.pass, "poc-dd: " << r.name << " violation " << r.max_violation);
  }

  TEST_CASE("supermeasure models are reported as failing, not thrown") {
    for (const char* name : {"supermeasure-case1", "supermeasure-case2"}) {
      std::vector<CheckReport> reports;
      CHECK_NOTHROW(reports = verify_model(builtin_model(name, 1)));
      const bool any_fail = std::any_of(reports.begin(), reports.end(), [](const CheckReport& r) { return !r.pass; });
      CHECK_MESSAGE(any_fail, name);
    }
  }

  TEST_CASE("term expressions") {
    const Kernel k = parse_kernel("power_law(-1,3) + linear(2)", 1, 1);
    double out[1];
    const double x[1] = {2.0};
    k.evaluate(x, out);
    CHECK(out[0] == doctest::Approx(-8.0 + 4.0));
    CHECK(k.declared_odd());
    const Kernel m2 = parse_kernel("linear([0,-1;1,0])", 2, 1);
    double o2[2];
    const double y[2] = {1.0, 2.0};
    m2.evaluate(y, o2);
    CHECK(o2[0] == -2.0);
    CHECK(o2[1] == 1.0);
    const Coefficient c = parse_coefficient("component_power(-0.25,3) + constant(1)", 1, 1);
    double cv[1];
    c.evaluate(0.0, x, MeasureSummary::dirac(x), cv);
    CHECK(cv[0] == doctest::Approx(-2.0 + 1.0));
    CHECK(parse_kernel("0", 1, 1).is_zero());
    CHECK_THROWS_AS(parse_kernel("power_law(-1", 1, 1), ConfigInvalid);
    CHECK_THROWS_AS(parse_kernel("bogus(1)", 1, 1), ConfigInvalid);
    CHECK_THROWS_AS(model_from_expressions("x", 1, 1, {{"g", "linear(1)"}}, ModelConstants{}), ConfigInvalid);
  }

  TEST_CASE("constants by name") {
    ModelConstants c;
    c.set("L_us1", 3.0);
    CHECK(*c.L_us1 == 3.0);
    CHECK(c.declared().at("L_us1") == 3.0);
    CHECK_THROWS_AS(c.set("L_zz", 1.0), ConfigInvalid);
    CHECK_THROWS_AS(c.set("m", 2.0), ConfigInvalid);
  }
}
