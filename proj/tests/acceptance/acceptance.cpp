// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
//
// SPLITSTEP_POC_CI=1 runs the reduced particle grid (N <= 320) with the wider slope band.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "splitstep/error.hpp"
#include "splitstep/experiment.hpp"
#include "splitstep/measure.hpp"
#include "splitstep/model.hpp"
#include "splitstep/schemes.hpp"
#include "splitstep/thread_pool.hpp"
#include "splitstep/verify.hpp"

using namespace splitstep;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "splitstep_acceptance" / name;
  fs::remove_all(p);
  return p;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double num(const json& j) { return j.is_number() ? j.get<double>() : NAN; }

double bisect(const std::function<double(double)>& g, double lo, double hi) {
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

Outcome ssm_rate() {
  ExperimentConfig c = preset_config("dw-rmse");
  c.schemes = {SchemeKind::ssm};
  c.checkpoints = false;
  c.out_dir = scratch("dw-rmse");
  const ExperimentResult r = run_experiment(c);
  const json& curve = r.summary["schemes"]["ssm"]["rmse"];
  const double slope = num(curve["slope"]), r2 = num(curve["r_squared"]);
  const bool ok = slope >= 0.35 && slope <= 0.65 && r2 >= 0.9 && curve["excluded"].empty();
  return {ok, "slope " + fmt(slope) + " in [0.35, 0.65], R^2 " + fmt(r2) + " >= 0.9"};
}

Outcome taming_comparison() {
  ExperimentConfig c = preset_config("dw-taming");
  c.schemes = {SchemeKind::ssm, SchemeKind::taming_out};
  c.checkpoints = false;
  c.out_dir = scratch("dw-taming");
  const ExperimentResult r = run_experiment(c);
  const json& ssm = r.summary["schemes"]["ssm"];
  const json& tout = r.summary["schemes"]["taming-out"];
  const double m2_0 = empirical_moment(sample_initial(InitialSpec::parse(c.x0), c.N_grid.front(), 1, c.seed), 2.0);
  const double m2_max = ssm["max_moment"]["2"].is_number() ? num(ssm["max_moment"]["2"]) : INFINITY;
  const bool ssm_ok = ssm["completed"] == true && std::isfinite(m2_max) && m2_max <= 10.0 * m2_0;
  const double ssm_err = num(ssm["error_vs_proxy"]);
  std::string detail = "SSM completed with max second moment " + fmt(m2_max) + " <= 10 x initial " + fmt(m2_0) +
                       ", error " + fmt(ssm_err) + "; taming-out ";
  bool tout_bad = false;
  if (tout["completed"] == false) {
    tout_bad = tout["failure"]["non_finite"] == true;
    detail += "non-finite at t = " + fmt(num(tout["failure"]["time"]));
  } else {
    const double e = num(tout["error_vs_proxy"]);
    tout_bad = !std::isfinite(e) || e >= 10.0 * ssm_err;
    detail += "error " + fmt(e) + " (ratio " + fmt(e / ssm_err) + ")";
  }
  return {ssm_ok && std::isfinite(ssm_err) && tout_bad, detail};
}

Outcome poc_rate() {
  const bool ci = std::getenv("SPLITSTEP_POC_CI") != nullptr;
  ExperimentConfig c = preset_config(ci ? "poc-ci" : "poc");
  c.checkpoints = false;
  c.out_dir = scratch("poc");
  const ExperimentResult r = run_experiment(c);
  const json& curve = r.summary["schemes"]["ssm"]["poc"];
  const double slope = num(curve["slope"]), r2 = num(curve["r_squared"]);
  const double lo = ci ? -0.8 : -0.70, hi = ci ? -0.25 : -0.35;
  const bool ok = slope >= lo && slope <= hi && r2 >= 0.6;
  return {ok, std::string(ci ? "reduced grid, " : "") + "slope " + fmt(slope) + " in [" + fmt(lo) + ", " + fmt(hi) +
                  "], R^2 " + fmt(r2) + " >= 0.6"};
}

Outcome contraction() {
  ExperimentConfig c = preset_config("contraction");
  c.checkpoints = false;
  c.out_dir = scratch("contraction");
  const ExperimentResult r = run_experiment(c);
  const json& s = r.summary["schemes"]["ssm"];
  if (s["completed"] != true) return {false, "run failed"};
  const double beta = num(s["beta_theoretical"]), decay = num(s["fitted_decay"]);
  const double nm = num(s["non_monotone_fraction"]), rate = num(s["mean_step_rate"]);
  const bool ok = nm <= 0.05 && decay < 0.0 && rate <= beta + 0.5;
  return {ok, "non-monotone share " + fmt(nm) + " <= 0.05, fitted decay " + fmt(decay) + " < 0, step rate " +
                  fmt(rate) + " <= beta + 0.5 = " + fmt(beta + 0.5)};
}

Outcome solver_oracles() {
  std::string detail;
  bool ok = true;
  const SolverConfig cfg;

  const Model flat = model_from_expressions("flat", 1, 1, {}, ModelConstants{});
  const ParticleState X3(3, 1, {0.5, -1.0, 2.0});
  const StageState s0 = solve_implicit_stage(flat, X3, 0.1, cfg);
  ok &= s0.Y.positions == X3.positions && s0.iterations == 1;

  const Model cubic_u = model_from_expressions("cubic-u", 1, 1, {{"u", "power_law(-1,3)"}}, ModelConstants{});
  const double y1 = bisect([](double y) { return y + 0.1 * y * y * y - 1.0; }, 0.0, 1.0);
  const double e1 = std::fabs(solve_implicit_stage(cubic_u, ParticleState(1, 1, {1.0}), 0.1, cfg).Y.positions[0] - y1);
  ok &= e1 <= 1e-8;

  const Model cubic_f = model_from_expressions("cubic-f", 1, 1, {{"f", "power_law(-1,3)"}}, ModelConstants{});
  const double y2 = bisect([](double y) { return y + 4 * 0.05 * y * y * y - 1.0; }, 0.0, 1.0);
  const StageState s2 = solve_implicit_stage(cubic_f, ParticleState(2, 1, {1.0, -1.0}), 0.05, cfg);
  const double e2 = std::max(std::fabs(s2.Y.positions[0] - y2), std::fabs(s2.Y.positions[1] + y2));
  ok &= e2 <= 1e-8;
  detail = "oracle errors " + fmt(e1) + ", " + fmt(e2);

  const Model dw = builtin_model("double-well", 1);
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> size(2, 100);
  std::normal_distribution<double> g(0.0, 3.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    ParticleState X(static_cast<std::size_t>(size(gen)), 1);
    for (double& v : X.positions) v = g(gen);
    ParticleState guess = X;
    for (double& v : guess.positions) v = g(gen);
    const StageState a = solve_implicit_stage(dw, X, 0.01, cfg);
    const StageState b = solve_implicit_stage(dw, X, 0.01, cfg, 0.0, &guess);
    double scale = 1.0;
    for (double v : X.positions) scale = std::max(scale, std::fabs(v));
    for (std::size_t i = 0; i < X.n; ++i)
      worst = std::max(worst, std::fabs(a.Y.positions[i] - b.Y.positions[i]) / (cfg.tol * scale));
  }
  ok &= worst <= 10.0;
  detail += ", uniqueness over 100 states " + fmt(worst) + " tol <= 10 tol";
  return {ok, detail};
}

Outcome integral_identities() {
  const std::vector<std::pair<std::string, std::size_t>> models{
      {"double-well", 1}, {"invariant", 1}, {"vdp2d", 2}, {"poc-dd", 2}, {"poc-dd", 3}};
  std::mt19937_64 gen(2);
  std::uniform_int_distribution<int> size(1, 200);
  double worst_rel = 0.0, worst_gap = -INFINITY;
  std::size_t checks = 0;
  for (const auto& [name, d] : models) {
    const Model m = builtin_model(name, d);
    if (m.f.is_zero() || !m.f.declared_odd()) continue;
    const double L = m.constants.L_f1.value_or(0.0);
    for (int k = 0; k < 50; ++k) {
      const std::size_t n = static_cast<std::size_t>(size(gen));
      std::normal_distribution<double> g(0.0, 0.5 + 0.05 * k);
      ParticleState s(n, d);
      for (double& v : s.positions) v = g(gen);
      for (double p : {3.0, 4.0, 6.0}) {
        const DecompositionCheck dc = identity_decomposition_check(m.f, s, p);
        worst_rel = std::max(worst_rel, dc.residual / (1.0 + std::fabs(dc.lhs)));
        ++checks;
      }
      const OddKernelCheck oc = identity_odd_kernel_check(m.f, m.f_sigma, s, m.constants.m, L);
      worst_gap = std::max(worst_gap, (oc.lhs - oc.bound) / (1.0 + std::fabs(oc.bound)));
    }
  }
  const bool ok = worst_rel < 1e-10 && worst_gap <= 1e-12;
  return {ok, std::to_string(checks) + " decomposition checks, worst residual " + fmt(worst_rel) +
                  " (1+|lhs|) < 1e-10; worst odd-kernel gap " + fmt(worst_gap) + " <= 0"};
}

Outcome verifiers() {
  bool ok = true;
  std::string detail = "additional symmetry of -x|x|^2:";
  for (std::size_t d = 1; d <= 3; ++d) {
    const CheckReport r = check_additional_symmetry(Kernel::power_law(d, -1.0, 3.0), {3.0, 4.0, 6.0}, 0.0,
                                                    default_pairs(d));
    ok &= r.pass;
    detail += " d=" + std::to_string(d) + (r.pass ? " pass" : " FAIL");
  }
  const Kernel square = Kernel::from_function(1, 1, [](std::span<const double> x, std::span<double> o) { o[0] = x[0] * x[0]; });
  const CheckReport odd = check_odd(square, uniform_points(1, 1000, 10.0, 3));
  ok &= !odd.pass;
  detail += "; x^2 odd check " + std::string(odd.pass ? "passes (wrong)" : "fails");
  const VerifyOptions opt;
  for (const char* name : {"supermeasure-case1", "supermeasure-case2"}) {
    try {
      const Model m = builtin_model(name, 1);
      bool failed = false;
      for (const CheckReport& r : verify_model(m, opt))
        if (r.name.find("one-sided") != std::string::npos && !r.pass) failed = true;
      ok &= failed;
      detail += std::string("; ") + name + (failed ? " one-sided check fails (reported)" : " passes (wrong)");
    } catch (const std::exception& e) {
      ok = false;
      detail += std::string("; ") + name + " threw: " + e.what();
    }
  }
  return {ok, detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Each preset trimmed to a short horizon so that every kind runs in seconds.
ExperimentConfig trimmed(const std::string& name) {
  ExperimentConfig c = preset_config(name);
  c.checkpoints = false;
  switch (c.kind) {
    case ExperimentKind::rmse:
      c.T = 0.2;
      c.proxy_h = 1e-3;
      c.N_grid = {1100};
      break;
    case ExperimentKind::density:
      c.T = 0.2;
      c.observe = {0.1, 0.2};
      c.N_grid = {1100};
      if (c.proxy_h) c.proxy_h = 1e-3;
      break;
    case ExperimentKind::contraction:
      c.T = 0.05;
      c.fit_start = 0.01;
      c.N_grid = {1100};
      break;
    case ExperimentKind::portrait:
      c.T = 0.2;
      c.N_grid = {50, 1100};
      break;
    case ExperimentKind::poc: c.T = 0.02; break;
  }
  return c;
}

Outcome determinism() {
  std::size_t compared = 0;
  std::string mismatch;
  for (const auto& name : preset_names()) {
    std::vector<ExperimentResult> runs;
    for (std::size_t threads : {1u, 4u, 1u}) {
      set_thread_count(threads);
      ExperimentConfig c = trimmed(name);
      c.out_dir = scratch("determinism/" + name + "_" + std::to_string(runs.size()));
      runs.push_back(run_experiment(c));
    }
    set_thread_count(1);
    for (std::size_t k = 1; k < runs.size(); ++k) {
      if (runs[k].files != runs[0].files) {
        mismatch += " " + name + ": file lists differ";
        continue;
      }
      for (const auto& rel : runs[0].files) {
        if (rel.extension() != ".csv" && rel.extension() != ".json") continue;
        ++compared;
        if (slurp(runs[0].dir / rel) != slurp(runs[k].dir / rel)) mismatch += " " + name + "/" + rel.string();
      }
    }
  }
  return {mismatch.empty() && compared > 0,
          std::to_string(preset_names().size()) + " presets, " + std::to_string(compared) + " file comparisons" +
              (mismatch.empty() ? ", all identical" : ", differing:" + mismatch)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
      {"ssm strong rate", ssm_rate},
      {"taming comparison", taming_comparison},
      {"poc rate", poc_rate},
      {"mean-square contraction", contraction},
      {"implicit solver oracles", solver_oracles},
      {"integral identities", integral_identities},
      {"assumption verifiers", verifiers},
      {"determinism across thread counts", determinism},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
