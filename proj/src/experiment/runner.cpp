#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "splitstep/analysis.hpp"
#include "splitstep/brownian.hpp"
#include "splitstep/error.hpp"
#include "splitstep/experiment.hpp"
#include "splitstep/measure.hpp"
#include "splitstep/report_io.hpp"

namespace splitstep {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::size_t kMaterializeBytes = 256u << 20;
constexpr std::uint32_t kCoupledStream = 2;

std::string file_token(SchemeKind kind) {
  std::string s = scheme_name(kind);
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(); }

json failure_json(const StepFailure& e) {
  return {{"step", e.step()}, {"time", e.time()}, {"non_finite", e.non_finite()}, {"message", e.what()}};
}

std::size_t step_count(double T, double h) { return static_cast<std::size_t>(std::llround(T / h)); }

BrownianLattice make_lattice(const ExperimentConfig& c, std::size_t n, std::size_t l, bool reused) {
  const double hf = c.fine_step();
  BrownianLattice lattice(c.seed, n, l, hf, step_count(c.T, hf));
  if (reused && n * l * lattice.fine_steps() * sizeof(double) <= kMaterializeBytes) lattice.materialize();
  return lattice;
}

class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {}
  fs::path path(const std::string& rel) {
    files_.emplace_back(rel);
    return dir_ / rel;
  }
  const fs::path& dir() const { return dir_; }
  std::vector<fs::path> files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
};

json curve_json(ErrorCurve& curve, const char* abscissa_name) {
  json j;
  json points = json::array();
  for (std::size_t k = 0; k < curve.abscissa.size(); ++k)
    points.push_back({{abscissa_name, curve.abscissa[k]}, {"error", curve.errors[k]}});
  j["points"] = points;
  j["excluded"] = curve.excluded;
  try {
    fit_rate(curve);
    j["slope"] = *curve.slope;
    j["r_squared"] = *curve.r_squared;
  } catch (const DegenerateFit& e) {
    j["slope"] = nullptr;
    j["r_squared"] = nullptr;
    j["fit_error"] = e.what();
  }
  return j;
}

void write_checkpoint(const ExperimentConfig& c, Artifacts* art, const std::string& rel, const ParticleState& s) {
  if (c.checkpoints && art) write_state(art->path(rel), s);
}

json tag_repetition(json failure, std::size_t rep, std::size_t reps) {
  if (reps > 1) failure["repetition"] = rep;
  return failure;
}

struct RmseCell {
  ErrorCurve terminal;
  ErrorCurve path;
  json failures = json::array();
};

// Proxy plus every scheme on one lattice; nullopt (with proxy_failure set) when the proxy fails.
std::optional<std::vector<RmseCell>> rmse_repetition(const ExperimentConfig& c, const Model& model, std::uint64_t seed,
                                                     Artifacts* art, json& proxy_failure) {
  const std::size_t n = c.N_grid.front();
  ExperimentConfig cs = c;
  cs.seed = seed;
  const BrownianLattice lattice = make_lattice(cs, n, model.l, true);
  const ParticleState X0 = sample_initial(InitialSpec::parse(c.x0), n, model.d, seed);
  const Lineage lineage{seed, c.x0, lattice.h_fine()};

  std::size_t grid_unit = 0;
  for (double h : c.h_grid) grid_unit = std::gcd(grid_unit, lattice.ratio(h));
  const std::size_t proxy_ratio = lattice.ratio(*c.proxy_h);
  const SchemeConfig proxy_scheme = c.scheme_config(SchemeKind::ssm, *c.proxy_h);

  PathRecord proxy_path;
  proxy_path.lineage = lineage;
  proxy_path.abscissa = *c.proxy_h;
  Observer proxy_obs;
  for (std::size_t s = 0; s <= proxy_scheme.M; ++s)
    if ((s * proxy_ratio) % grid_unit == 0) proxy_obs.steps.push_back(static_cast<std::int64_t>(s));
  proxy_obs.callback = [&](const ParticleState& s) {
    proxy_path.times.push_back(static_cast<double>(s.step) * *c.proxy_h);
    proxy_path.states.push_back(s);
  };

  TerminalRun proxy;
  proxy.abscissa = *c.proxy_h;
  proxy.lineage = lineage;
  try {
    proxy.state = simulate(model, proxy_scheme, lattice, X0, {proxy_obs}).final_state;
    write_checkpoint(c, art, "states/proxy.bin", proxy.state);
  } catch (const StepFailure& e) {
    proxy_failure = failure_json(e);
    return std::nullopt;
  }

  std::vector<RmseCell> cells;
  for (SchemeKind kind : c.schemes) {
    std::vector<TerminalRun> runs;
    std::vector<PathRecord> paths;
    RmseCell cell;
    for (double h : c.h_grid) {
      TerminalRun run;
      run.abscissa = h;
      run.lineage = lineage;
      PathRecord path;
      path.abscissa = h;
      path.lineage = lineage;
      Observer obs;
      obs.callback = [&](const ParticleState& s) {
        path.times.push_back(static_cast<double>(s.step) * h);
        path.states.push_back(s);
      };
      try {
        run.state = simulate(model, c.scheme_config(kind, h), lattice, X0, {obs}).final_state;
        write_checkpoint(c, art, "states/" + file_token(kind) + "_h" + format_double(h) + ".bin", run.state);
      } catch (const StepFailure& e) {
        run.failed = path.failed = true;
        json f = failure_json(e);
        f["h"] = h;
        cell.failures.push_back(f);
      }
      runs.push_back(std::move(run));
      paths.push_back(std::move(path));
    }
    cell.terminal = rmse(runs, proxy);
    cell.path = path_error(paths, proxy_path);
    cells.push_back(std::move(cell));
  }
  return cells;
}

json run_rmse(const ExperimentConfig& c, const Model& model, Artifacts& art) {
  json out;
  out["N"] = c.N_grid.front();
  out["proxy_h"] = *c.proxy_h;
  out["repetitions"] = c.repetitions;
  std::vector<std::vector<RmseCell>> reps;
  for (std::size_t r = 0; r < c.repetitions; ++r) {
    json proxy_failure;
    auto cells = rmse_repetition(c, model, c.seed + r, r == 0 ? &art : nullptr, proxy_failure);
    if (!cells) {
      out["proxy_failure"] = tag_repetition(proxy_failure, r, c.repetitions);
      return out;
    }
    reps.push_back(std::move(*cells));
  }

  json per_scheme = json::object();
  for (std::size_t k = 0; k < c.schemes.size(); ++k) {
    const SchemeKind kind = c.schemes[k];
    std::vector<ErrorCurve> terminals, paths;
    json failures = json::array();
    for (std::size_t r = 0; r < reps.size(); ++r) {
      terminals.push_back(reps[r][k].terminal);
      paths.push_back(reps[r][k].path);
      for (const auto& f : reps[r][k].failures) failures.push_back(tag_repetition(f, r, reps.size()));
    }
    ErrorCurve terminal = combine_repetitions(terminals);
    ErrorCurve path = combine_repetitions(paths);
    json s;
    s["rmse"] = curve_json(terminal, "h");
    s["path"] = curve_json(path, "h");
    s["failures"] = failures;
    const CurveContext ctx{model.name, scheme_name(kind), c.seed};
    write_error_curve(art.path("rmse_" + file_token(kind) + ".csv"), terminal, ctx);
    art.path("rmse_" + file_token(kind) + ".json");
    write_error_curve(art.path("path_" + file_token(kind) + ".csv"), path, ctx);
    art.path("path_" + file_token(kind) + ".json");
    per_scheme[scheme_name(kind)] = s;
  }
  out["schemes"] = per_scheme;
  return out;
}

DensityTable density_of(const ExperimentConfig& c, const ParticleState& s, std::size_t axis) {
  if (c.range) return histogram_density(s, axis, c.bins, c.range->first, c.range->second);
  return histogram_density_auto(s, axis, c.bins);
}

json run_density(const ExperimentConfig& c, const Model& model, Artifacts& art) {
  const std::size_t n = c.N_grid.front();
  const double h = c.h_grid.front();
  const BrownianLattice lattice = make_lattice(c, n, model.l, c.schemes.size() > 1 || c.proxy_h.has_value());
  const ParticleState X0 = sample_initial(InitialSpec::parse(c.x0), n, model.d, c.seed);
  const std::vector<double> times = c.observe.empty() ? std::vector<double>{c.T} : c.observe;
  const std::vector<std::int64_t> observe_steps = steps_for_times(times, h);

  json out;
  out["N"] = n;
  out["h"] = h;
  json per_scheme = json::object();
  std::vector<std::pair<SchemeKind, ParticleState>> finals;
  for (SchemeKind kind : c.schemes) {
    const std::string tok = file_token(kind);
    MomentTrace trace;
    trace.p_values = c.moment_p;
    trace.cap = c.moment_cap;
    Observer moments = moment_observer(trace, {});
    Observer densities;
    densities.steps = observe_steps;
    json written = json::array();
    densities.callback = [&](const ParticleState& s) {
      const double t = static_cast<double>(s.step) * h;
      for (std::size_t axis = 0; axis < s.d; ++axis) {
        std::string rel = "density_" + tok + "_t" + format_double(t);
        if (s.d > 1) rel += "_x" + std::to_string(axis + 1);
        rel += ".csv";
        write_density_csv(art.path(rel), density_of(c, s, axis));
        written.push_back(rel);
      }
    };
    json s;
    try {
      ParticleState final_state = simulate(model, c.scheme_config(kind, h), lattice, X0, {moments, densities}).final_state;
      write_checkpoint(c, &art, "states/" + tok + ".bin", final_state);
      finals.emplace_back(kind, std::move(final_state));
      s["completed"] = true;
    } catch (const StepFailure& e) {
      s["completed"] = false;
      s["failure"] = failure_json(e);
    }
    write_moment_trace(art.path("moments_" + tok + ".csv"), trace);
    s["densities"] = written;
    s["blowup_time"] = trace.blowup_time ? json(*trace.blowup_time) : json();
    json maxima = json::object();
    for (std::size_t q = 0; q < trace.p_values.size(); ++q) {
      double m = 0.0;
      for (const auto& row : trace.moments) m = std::isfinite(row[q]) ? std::max(m, row[q]) : INFINITY;
      maxima[format_double(trace.p_values[q])] = finite_or_null(m);
    }
    s["max_moment"] = maxima;
    per_scheme[scheme_name(kind)] = s;
  }

  if (c.proxy_h) {
    const SchemeConfig proxy_scheme = c.scheme_config(SchemeKind::ssm, *c.proxy_h);
    try {
      const ParticleState proxy = simulate(model, proxy_scheme, lattice, X0).final_state;
      out["proxy_h"] = *c.proxy_h;
      for (const auto& [kind, state] : finals)
        per_scheme[scheme_name(kind)]["error_vs_proxy"] = finite_or_null(rmse_value(state, proxy));
    } catch (const StepFailure& e) {
      out["proxy_failure"] = failure_json(e);
    }
  }
  out["schemes"] = per_scheme;
  return out;
}

json run_contraction(const ExperimentConfig& c, const Model& model, Artifacts& art) {
  const std::size_t n = c.N_grid.front();
  const double h = c.h_grid.front();
  const BrownianLattice lattice = make_lattice(c, n, model.l, c.schemes.size() > 1);
  const ParticleState X0 = sample_initial(InitialSpec::parse(c.x0), n, model.d, c.seed);
  const ParticleState Z0 = sample_initial(InitialSpec::parse(c.z0), n, model.d, c.seed, kCoupledStream);
  json out;
  out["N"] = n;
  out["h"] = h;
  json per_scheme = json::object();
  for (SchemeKind kind : c.schemes) {
    json s;
    try {
      const ContractionTrace trace = contraction_run(model, c.scheme_config(kind, h), lattice, X0, Z0, c.fit_start);
      write_contraction(art.path("contraction_" + file_token(kind) + ".csv"), trace, {model.name, scheme_name(kind), c.seed});
      art.path("contraction_" + file_token(kind) + ".json");
      s["completed"] = true;
      s["beta_theoretical"] = finite_or_null(trace.beta_theoretical);
      s["fitted_decay"] = finite_or_null(trace.fitted_decay);
      s["non_monotone_fraction"] = trace.non_monotone_fraction;
      s["mean_step_rate"] = finite_or_null(trace.mean_step_rate);
      s["final_msd"] = trace.msd.back();
    } catch (const StepFailure& e) {
      s["completed"] = false;
      s["failure"] = failure_json(e);
    }
    per_scheme[scheme_name(kind)] = s;
  }
  out["schemes"] = per_scheme;
  return out;
}

json run_portrait(const ExperimentConfig& c, const Model& model, Artifacts& art) {
  const double h = c.h_grid.front();
  const InitialSpec law = InitialSpec::parse(c.x0);
  json out;
  out["h"] = h;
  json per_scheme = json::object();
  for (SchemeKind kind : c.schemes) {
    json cells = json::array();
    for (std::size_t n : c.N_grid) {
      const BrownianLattice lattice = make_lattice(c, n, model.l, false);
      const ParticleState X0 = sample_initial(law, n, model.d, c.seed);
      const std::size_t tracked = std::min(c.track_particles, n);
      std::vector<std::string> header{"t"};
      for (std::size_t a = 0; a < model.d; ++a) header.push_back("mean_x" + std::to_string(a + 1));
      for (std::size_t k = 0; k < tracked; ++k)
        for (std::size_t a = 0; a < model.d; ++a)
          header.push_back("p" + std::to_string(k) + "_x" + std::to_string(a + 1));
      const std::string rel = "track_" + file_token(kind) + "_N" + std::to_string(n) + ".csv";
      CsvWriter csv(art.path(rel), header);
      std::size_t rows = 0;
      Observer obs;
      obs.callback = [&](const ParticleState& s) {
        std::vector<double> row{static_cast<double>(s.step) * h};
        for (std::size_t a = 0; a < s.d; ++a) {
          double m = 0.0;
          for (std::size_t i = 0; i < s.n; ++i) m += s.positions[i * s.d + a];
          row.push_back(m / static_cast<double>(s.n));
        }
        for (std::size_t k = 0; k < tracked; ++k)
          for (std::size_t a = 0; a < s.d; ++a) row.push_back(s.positions[k * s.d + a]);
        csv.row(row);
        ++rows;
      };
      json cell;
      cell["N"] = n;
      cell["file"] = rel;
      try {
        simulate(model, c.scheme_config(kind, h), lattice, X0, {obs});
        cell["completed"] = true;
      } catch (const StepFailure& e) {
        cell["completed"] = false;
        cell["failure"] = failure_json(e);
      }
      csv.close();
      cell["rows"] = rows;
      cells.push_back(cell);
    }
    per_scheme[scheme_name(kind)] = cells;
  }
  out["schemes"] = per_scheme;
  return out;
}

// Final states of every system size for one scheme, nullopt where the run failed.
std::vector<std::optional<ParticleState>> poc_repetition(const ExperimentConfig& c, const Model& model, SchemeKind kind,
                                                         const std::vector<std::size_t>& grid,
                                                         const std::vector<BrownianLattice>& lattices,
                                                         std::uint64_t seed, Artifacts* art, json& failures,
                                                         std::size_t rep) {
  const InitialSpec law = InitialSpec::parse(c.x0);
  std::vector<std::optional<ParticleState>> finals;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const ParticleState X0 = sample_initial(law, grid[k], model.d, seed);
    try {
      finals.emplace_back(simulate(model, c.scheme_config(kind, c.h_grid.front()), lattices[k], X0).final_state);
      write_checkpoint(c, art, "states/" + file_token(kind) + "_N" + std::to_string(grid[k]) + ".bin", *finals.back());
    } catch (const StepFailure& e) {
      finals.emplace_back(std::nullopt);
      json f = failure_json(e);
      f["N"] = grid[k];
      failures.push_back(tag_repetition(f, rep, c.repetitions));
    }
  }
  return finals;
}

json run_poc(const ExperimentConfig& c, const Model& model, Artifacts& art) {
  std::vector<std::size_t> grid = c.N_grid;
  grid.push_back(c.proxy_N ? *c.proxy_N : 2 * c.N_grid.back());
  json out;
  out["h"] = c.h_grid.front();
  out["proxy_N"] = grid.back();
  out["repetitions"] = c.repetitions;
  json per_scheme = json::object();
  for (SchemeKind kind : c.schemes) {
    std::vector<ErrorCurve> curves;
    json failures = json::array();
    for (std::size_t r = 0; r < c.repetitions; ++r) {
      ExperimentConfig cs = c;
      cs.seed = c.seed + r;
      std::vector<BrownianLattice> lattices;
      lattices.push_back(make_lattice(cs, grid.front(), model.l, false));
      for (std::size_t k = 1; k < grid.size(); ++k) lattices.push_back(lattices.front().extend_particles(grid[k]));
      const auto finals =
          poc_repetition(c, model, kind, grid, lattices, cs.seed, r == 0 ? &art : nullptr, failures, r);
      ErrorCurve curve;
      curve.metric = Metric::poc;
      for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double N = static_cast<double>(grid[k]);
        if (!finals[k] || !finals[k + 1]) {
          curve.excluded.push_back(N);
          continue;
        }
        curve.abscissa.push_back(N);
        curve.errors.push_back(poc_error(*finals[k], lattices[k], *finals[k + 1], lattices[k + 1]));
      }
      curves.push_back(std::move(curve));
    }
    ErrorCurve curve = combine_repetitions(curves);
    json s;
    s["poc"] = curve_json(curve, "N");
    s["failures"] = failures;
    write_error_curve(art.path("poc_" + file_token(kind) + ".csv"), curve, {model.name, scheme_name(kind), c.seed});
    art.path("poc_" + file_token(kind) + ".json");
    per_scheme[scheme_name(kind)] = s;
  }
  out["schemes"] = per_scheme;
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Model model = config.build_model();
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) throw IoFailure("cannot create " + config.out_dir.string() + ": " + ec.message());
  Artifacts art(config.out_dir);
  write_text(art.path("manifest.cfg"), to_config_text(config));

  json summary;
  summary["preset"] = config.preset;
  summary["kind"] = experiment_kind_name(config.kind);
  summary["model"] = model.name;
  summary["d"] = model.d;
  summary["seed"] = config.seed;
  summary["T"] = config.T;
  summary["x0"] = config.x0;
  json result;
  switch (config.kind) {
    case ExperimentKind::rmse: result = run_rmse(config, model, art); break;
    case ExperimentKind::density: result = run_density(config, model, art); break;
    case ExperimentKind::contraction: result = run_contraction(config, model, art); break;
    case ExperimentKind::portrait: result = run_portrait(config, model, art); break;
    case ExperimentKind::poc: result = run_poc(config, model, art); break;
  }
  for (auto& [k, v] : result.items()) summary[k] = v;
  write_text(art.path("summary.json"), summary.dump(2) + "\n");

  ExperimentResult out;
  out.dir = config.out_dir;
  out.summary = std::move(summary);
  out.files = art.files();
  return out;
}

}  // namespace splitstep
