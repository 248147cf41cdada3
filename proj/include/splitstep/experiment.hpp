#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "splitstep/model.hpp"
#include "splitstep/schemes.hpp"

namespace splitstep {

/// rmse: terminal and path errors against a fine-step proxy over an h grid.
/// density: histograms and moments at observation times.
/// contraction: two coupled systems from different initial laws.
/// portrait: mean and sampled particle tracks at every step for each N.
/// poc: coupled particle-count doubling errors over an N grid.
enum class ExperimentKind { rmse, density, contraction, portrait, poc };

const char* experiment_kind_name(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& name);

/// Fully resolved experiment. Serialized as a sectioned key/value text (see docs/config.md).
struct ExperimentConfig {
  std::string preset;  // label only; "custom" for hand-written configs
  ExperimentKind kind = ExperimentKind::rmse;
  std::uint64_t seed = 20240101;
  std::size_t repetitions = 1;  // rmse and poc: seeds seed, seed+1, ... pooled by mean square
  double T = 1.0;
  std::vector<double> h_grid{0.01};
  std::optional<double> proxy_h;
  std::optional<double> h_fine;  // default: smallest of the h grid and proxy_h
  std::vector<std::size_t> N_grid{1000};
  std::optional<std::size_t> proxy_N;  // poc only; default 2 * max N
  std::string x0 = "normal(0,1)";
  std::string z0 = "normal(0,1)";
  std::vector<SchemeKind> schemes{SchemeKind::ssm};
  std::vector<double> observe;
  double fit_start = 0.5;
  std::size_t track_particles = 10;
  std::size_t bins = 60;
  std::optional<std::pair<double, double>> range;
  std::vector<double> moment_p{2.0};
  double moment_cap = 1e12;
  bool checkpoints = true;

  std::string model_name = "double-well";
  std::size_t d = 1;
  std::size_t l = 1;
  std::map<std::string, std::string> expressions;  // custom model terms
  std::map<std::string, double> constant_overrides;

  double alpha = 0.5;
  bool enforce_h_constraint = true;
  SolverConfig solver;

  std::filesystem::path out_dir = "out";

  Model build_model() const;
  double fine_step() const;
  SchemeConfig scheme_config(SchemeKind kind, double h) const;
  /// Grids nonempty, laws parse and match d, h commensurate with the fine step, stepsize
  /// constraint where enforced, and kind-specific requirements. ConfigInvalid names the field.
  void validate() const;
};

/// Sets "section.key" from its text value; ConfigInvalid for unknown keys or bad values.
void apply_setting(ExperimentConfig& config, const std::string& dotted_key, const std::string& value, int line = 0);

/// Parses the sectioned key/value format. A "preset" key in [experiment] must come first and
/// starts from that preset; later keys override it.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text of every field; parse_config(to_config_text(c)) reproduces c.
std::string to_config_text(const ExperimentConfig& config);

/// Preset registry.
const std::vector<std::string>& preset_names();
std::string preset_description(const std::string& name);
/// ConfigInvalid for unknown names. full extends the trimmed step grids.
ExperimentConfig preset_config(const std::string& name, bool full = false);

struct ExperimentResult {
  std::filesystem::path dir;
  nlohmann::json summary;
  std::vector<std::filesystem::path> files;  // relative to dir, in write order
};

/// Validates, then runs every cell and writes the artifacts plus manifest.cfg and summary.json.
/// Scheme failures are recorded in the summary, not thrown.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace splitstep
