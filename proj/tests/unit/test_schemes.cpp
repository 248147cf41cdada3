#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "splitstep/error.hpp"
#include "splitstep/measure.hpp"
#include "splitstep/model.hpp"
#include "splitstep/schemes.hpp"

using namespace splitstep;
using testing::bisect;
using testing::random_state;
using testing::state_1d;

namespace {

Model cubic_u_model() {
  return model_from_expressions("cubic-u", 1, 1, {{"u", "power_law(-1,3)"}}, ModelConstants{});
}

Model cubic_f_model() {
  return model_from_expressions("cubic-f", 1, 1, {{"f", "power_law(-1,3)"}}, ModelConstants{});
}

double max_residual(const Model& model, const ParticleState& X, const ParticleState& Y, double h) {
  double worst = 0.0;
  const MeasureSummary mu = MeasureSummary::of(Y);
  std::vector<double> uv(X.d);
  for (std::size_t i = 0; i < X.n; ++i) {
    const auto c = convolve(model.f, Y, i);
    if (!model.u.is_zero()) model.u.evaluate(0.0, Y.row(i), mu, uv);
    for (std::size_t a = 0; a < X.d; ++a)
      worst = std::max(worst, std::fabs(Y.row(i)[a] - X.row(i)[a] - h * (c[a] + (model.u.is_zero() ? 0.0 : uv[a]))));
  }
  return worst;
}

}  // namespace

TEST_SUITE("schemes") {
  TEST_CASE("implicit stage scalar oracle") {
    const Model m = cubic_u_model();
    const StageState s = solve_implicit_stage(m, state_1d({1.0}), 0.1, SolverConfig{});
    const double y = bisect([](double v) { return v + 0.1 * v * v * v - 1.0; }, 0.0, 1.0);
    CHECK(std::fabs(y + 0.1 * y * y * y - 1.0) < 1e-14);
    CHECK(y == doctest::Approx(0.9216989942).epsilon(1e-9));
    CHECK(std::fabs(s.Y.positions[0] - y) < 1e-8);
  }

  TEST_CASE("implicit stage two-particle oracle") {
    const Model m = cubic_f_model();
    const double h = 0.05;
    const StageState s = solve_implicit_stage(m, state_1d({1.0, -1.0}), h, SolverConfig{});
    const double y = bisect([h](double v) { return v + 4 * h * v * v * v - 1.0; }, 0.0, 1.0);
    CHECK(std::fabs(y + 4 * h * y * y * y - 1.0) < 1e-14);
    CHECK(y == doctest::Approx(0.8688300203).epsilon(1e-9));
    CHECK(std::fabs(s.Y.positions[0] - y) < 1e-8);
    CHECK(std::fabs(s.Y.positions[1] + y) < 1e-8);
  }

  TEST_CASE("implicit stage is unique from different starting points") {
    for (const char* name : {"double-well", "invariant"}) {
      const Model m = builtin_model(name, 1);
      for (unsigned seed = 0; seed < 10; ++seed) {
        const ParticleState X = random_state(50, 1, 4.0, seed);
        SolverConfig cfg;
        const StageState a = solve_implicit_stage(m, X, 0.01, cfg);
        ParticleState guess = X;
        for (double& v : guess.positions) v = -0.5 * v + 1.0;
        const StageState b = solve_implicit_stage(m, X, 0.01, cfg, 0.0, &guess);
        double scale = 1.0;
        for (double v : X.positions) scale = std::max(scale, std::fabs(v));
        for (std::size_t k = 0; k < 50; ++k)
          CHECK(std::fabs(a.Y.positions[k] - b.Y.positions[k]) <= 10 * cfg.tol * scale);
        CHECK(max_residual(m, X, a.Y, 0.01) <= 10 * cfg.tol * scale * 10);
      }
    }
  }

  TEST_CASE("solver handles a 2-d kernel") {
    const Model m = builtin_model("poc-dd", 2);
    const ParticleState X = random_state(100, 2, 2.0, 4);
    const StageState s = solve_implicit_stage(m, X, 0.01, SolverConfig{});
    double scale = 1.0;
    for (double v : X.positions) scale = std::max(scale, std::fabs(v));
    CHECK(s.residual_norm <= SolverConfig{}.tol * scale * 10);
  }

  TEST_CASE("ssm trivial cases") {
    const Model m = cubic_f_model();
    const std::vector<double> dw{0.0};
    const ParticleState one = ssm_step(m, state_1d({2.5}), dw, 0.0, 0.1, SolverConfig{});
    CHECK(one.positions[0] == doctest::Approx(2.5));
    CHECK(one.time == doctest::Approx(0.1));
    CHECK(one.step == 1);
    const std::vector<double> dw3{0.0, 0.0, 0.0};
    const ParticleState flat = ssm_step(m, state_1d({1.0, 1.0, 1.0}), dw3, 0.0, 0.1, SolverConfig{});
    for (double v : flat.positions) CHECK(v == doctest::Approx(1.0));
  }

  TEST_CASE("ssm double-well two-particle step") {
    const Model m = builtin_model("double-well", 1);
    const double h = 0.05;
    const std::vector<double> dw{0.1, -0.3};
    const ParticleState next = ssm_step(m, state_1d({1.0, -1.0}), dw, 0.0, h, SolverConfig{});
    const double y = bisect([h](double v) { return v + 4.25 * h * v * v * v - 1.0; }, 0.0, 1.0);
    const double x1 = y + h * y + (y + 0.25 * y * y) * 0.1;
    const double x2 = -y - h * y + (-y + 0.25 * y * y) * -0.3;
    CHECK(next.positions[0] == doctest::Approx(x1).epsilon(1e-10));
    CHECK(next.positions[1] == doctest::Approx(x2).epsilon(1e-10));
  }

  TEST_CASE("taming examples") {
    const Model m = cubic_f_model();
    const std::vector<double> dw{0.0, 0.0};
    // pair value at x = 0 against x' = 2 is -(-2)^3 = 8; M = 100, alpha = 1: 8 / 801
    const ParticleState in =
        taming_step(m, state_1d({0.0, 2.0}), dw, 0.0, 0.01, 1.0, 100.0, TamingVariant::in);
    CHECK(in.positions[0] == doctest::Approx(0.01 * 0.5 * 8.0 / 801.0));
    // out: conv = 4, tamed 4 / 401
    const ParticleState out =
        taming_step(m, state_1d({0.0, 2.0}), dw, 0.0, 0.01, 1.0, 100.0, TamingVariant::out);
    CHECK(out.positions[0] == doctest::Approx(0.01 * 4.0 / 401.0));
    // u = -x tamed: 2 / (1 + 100 * 2) = 2/201
    const Model lin = model_from_expressions("lin", 1, 1, {{"u", "linear(-1)"}}, ModelConstants{});
    const ParticleState t = taming_step(lin, state_1d({-2.0}), std::vector<double>{0.0}, 0.0, 1.0, 1.0, 100.0,
                                        TamingVariant::out);
    CHECK(t.positions[0] == doctest::Approx(-2.0 + 2.0 / 201.0));
    // tamed drift never exceeds M^-alpha
    const ParticleState huge = taming_step(m, state_1d({0.0, 1e6}), dw, 0.0, 1.0, 0.5, 400.0, TamingVariant::out);
    CHECK(std::fabs(huge.positions[0]) <= 1.0 / 20.0 + 1e-15);
    CHECK(std::fabs(huge.positions[0]) == doctest::Approx(1.0 / 20.0).epsilon(1e-6));
    CHECK_THROWS_AS(taming_step(m, state_1d({0.0, 1.0}), dw, 0.0, 0.1, 0.0, 10.0, TamingVariant::in), ConfigInvalid);
  }

  TEST_CASE("euler examples") {
    const Model m = cubic_f_model();
    const ParticleState e = euler_step(m, state_1d({1.0, -1.0}), std::vector<double>{0.0, 0.0}, 0.0, 0.1);
    CHECK(e.positions[0] == doctest::Approx(1.0 - 0.1 * 4.0));
    CHECK(e.positions[1] == doctest::Approx(-1.0 + 0.1 * 4.0));
    const Model ou = builtin_model("ou-linear", 1);
    const ParticleState n = euler_step(ou, state_1d({1.0}), std::vector<double>{0.5}, 0.0, 0.1);
    CHECK(n.positions[0] == doctest::Approx(1.0 - 0.1 + 0.5));
  }

  TEST_CASE("euler blows up on a superlinear drift") {
    const Model m = builtin_model("double-well", 1);
    SchemeConfig cfg = SchemeConfig::make(SchemeKind::euler, 0.1, 5.0);
    cfg.enforce_h_constraint = false;
    const BrownianLattice lat(1, 20, 1, 0.1, 50);
    const ParticleState X0 = sample_initial(InitialSpec::parse("normal(3,9)"), 20, 1, 1);
    try {
      simulate(m, cfg, lat, X0);
      FAIL("expected a step failure");
    } catch (const StepFailure& e) {
      CHECK(e.step() > 0);
      CHECK(e.step() <= 50);
    }
  }

  TEST_CASE("simulation is deterministic") {
    const Model m = builtin_model("invariant", 1);
    const SchemeConfig cfg = SchemeConfig::make(SchemeKind::ssm, 0.01, 0.5);
    const BrownianLattice lat(5, 64, 1, 0.01, 50);
    const ParticleState X0 = sample_initial(InitialSpec::parse("normal(2,16)"), 64, 1, 5);
    const SimulationResult a = simulate(m, cfg, lat, X0);
    const SimulationResult b = simulate(m, cfg, lat, X0);
    CHECK(a.final_state.positions == b.final_state.positions);
    CHECK(a.steps_taken == 50);
    CHECK(a.final_state.time == doctest::Approx(0.5));
  }

  TEST_CASE("zero horizon takes no steps") {
    const Model m = builtin_model("invariant", 1);
    const SchemeConfig cfg = SchemeConfig::make(SchemeKind::ssm, 0.01, 0.0);
    CHECK(cfg.M == 0);
    const BrownianLattice lat(5, 4, 1, 0.01, 1);
    const ParticleState X0 = state_1d({1, 2, 3, 4});
    const SimulationResult r = simulate(m, cfg, lat, X0);
    CHECK(r.steps_taken == 0);
    CHECK(r.final_state.positions == X0.positions);
  }

  TEST_CASE("scheme config validation") {
    CHECK_THROWS_AS(SchemeConfig::make(SchemeKind::ssm, 0.03, 1.0), ConfigInvalid);
    CHECK(SchemeConfig::make(SchemeKind::ssm, 0.1, 1.0).M == 10);
    CHECK(SchemeConfig::make(SchemeKind::ssm, 0.1, 1.0, 0.5).tame_scale() == doctest::Approx(std::sqrt(10.0)));
    const Model dw = builtin_model("double-well", 1);
    SchemeConfig c = SchemeConfig::make(SchemeKind::ssm, 0.1, 1.0);
    CHECK_THROWS_AS(c.validate(dw), ConfigInvalid);
    c.enforce_h_constraint = false;
    CHECK_NOTHROW(c.validate(dw));
    c.kind = SchemeKind::taming_in;
    c.enforce_h_constraint = true;
    CHECK_NOTHROW(c.validate(dw));
    CHECK(std::string(scheme_name(parse_scheme("taming-out"))) == "taming-out");
    CHECK_THROWS_AS(parse_scheme("rk4"), ConfigInvalid);
    SolverConfig bad;
    bad.tol = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigInvalid);
  }

  TEST_CASE("coarse steps consume summed fine increments") {
    const Model m = builtin_model("ou-linear", 1);
    const BrownianLattice lat(12, 8, 1, 0.01, 100);
    const ParticleState X0 = sample_initial(InitialSpec::parse("normal(0,1)"), 8, 1, 12);
    const SchemeConfig cfg = SchemeConfig::make(SchemeKind::euler, 0.1, 1.0);
    ParticleState x = X0;
    std::vector<double> dw(8);
    for (std::size_t n = 0; n < 10; ++n) {
      for (std::size_t i = 0; i < 8; ++i) {
        double s = 0.0;
        for (std::size_t k = n * 10; k < n * 10 + 10; ++k) s += lat.fine_increment(i, k, 0);
        dw[i] = s;
      }
      x = euler_step(m, x, dw, n * 0.1, 0.1);
    }
    const SimulationResult r = simulate(m, cfg, lat, X0);
    for (std::size_t i = 0; i < 8; ++i) CHECK(r.final_state.positions[i] == doctest::Approx(x.positions[i]).epsilon(1e-14));
  }

  TEST_CASE("noise-free error is first order") {
    // dX = -X dt with no noise: exact e^{-T}
    const Model m = model_from_expressions("decay", 1, 1, {{"u", "linear(-1)"}}, ModelConstants{});
    std::vector<double> errs, hs;
    for (double h : {0.1, 0.05, 0.025, 0.0125}) {
      const SchemeConfig cfg = SchemeConfig::make(SchemeKind::ssm, h, 1.0);
      const BrownianLattice lat(1, 1, 1, 0.0125, 80);
      ParticleState x = state_1d({1.0});
      const std::vector<double> dw{0.0};
      for (std::size_t n = 0; n < cfg.M; ++n) x = ssm_step(m, x, dw, n * h, h, SolverConfig{});
      errs.push_back(std::fabs(x.positions[0] - std::exp(-1.0)));
      hs.push_back(h);
    }
    for (std::size_t k = 1; k < errs.size(); ++k) CHECK(errs[k - 1] / errs[k] == doctest::Approx(2.0).epsilon(0.1));
  }

  TEST_CASE("steps for observation times") {
    CHECK(steps_for_times({0.0, 1.0, 3.0}, 0.01) == std::vector<std::int64_t>{0, 100, 300});
    CHECK_THROWS_AS(steps_for_times({0.015}, 0.01), ConfigInvalid);
  }
}
