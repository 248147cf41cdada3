#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "json.hpp"
#include "splitstep/error.hpp"
#include "splitstep/experiment.hpp"
#include "splitstep/pair_sums.hpp"
#include "splitstep/report_io.hpp"
#include "splitstep/thread_pool.hpp"
#include "splitstep/verify.hpp"

using namespace splitstep;

namespace {

struct RunOptions {
  std::string target;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t threads = 1;
  bool full = false;
  bool no_h_constraint = false;
  std::vector<std::string> settings;
  std::string simd = "auto";
};

void add_run_options(CLI::App* app, RunOptions& o) {
  app->add_option("target", o.target, "preset name or config file")->required();
  app->add_option("--seed", o.seed, "master seed");
  app->add_option("--out", o.out, "output directory");
  app->add_option("--threads", o.threads, "worker threads for pair sums")->check(CLI::PositiveNumber);
  app->add_flag("--full", o.full, "use the untrimmed step grids");
  app->add_flag("--no-h-constraint", o.no_h_constraint, "do not enforce the stepsize constraint");
  app->add_option("--set", o.settings, "override a setting, e.g. --set experiment.N=500")->take_all();
  app->add_option("--simd", o.simd, "pair-sum backend")->check(CLI::IsMember({"auto", "scalar", "avx2"}));
}

ExperimentConfig resolve(const RunOptions& o) {
  ExperimentConfig c;
  if (std::filesystem::is_regular_file(o.target)) {
    c = load_config(o.target);
  } else {
    c = preset_config(o.target, o.full);
  }
  for (const auto& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigInvalid(s, "--set expects section.key=value");
    apply_setting(c, s.substr(0, eq), s.substr(eq + 1));
  }
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.out_dir = o.out;
  if (o.no_h_constraint) c.enforce_h_constraint = false;
  return c;
}

void apply_runtime(const RunOptions& o) {
  set_thread_count(o.threads);
  if (o.simd == "scalar") set_backend(SimdBackend::scalar);
  else if (o.simd == "avx2") set_backend(SimdBackend::avx2);
}

int verify(const std::string& name, std::size_t d, const std::string& config, const std::string& out) {
  Model model;
  if (!config.empty()) model = load_config(config).build_model();
  else model = builtin_model(name, d);
  const auto reports = verify_model(model);
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : reports) {
    std::printf("%-28s %s  max violation %s over %zu samples\n", r.name.c_str(), r.pass ? "pass" : "FAIL",
                format_double(r.max_violation).c_str(), r.samples);
    j.push_back({{"check", r.name},
                 {"pass", r.pass},
                 {"max_violation", r.max_violation},
                 {"worst_x", r.worst_x},
                 {"worst_y", r.worst_y},
                 {"samples", r.samples}});
  }
  if (!out.empty()) write_text(out, j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle simulations of McKean-Vlasov SDEs with super-linear convolution kernels"};
  app.require_subcommand(1);

  RunOptions run_opts, describe_opts;
  auto* run = app.add_subcommand("run", "run a preset or config file and write its artifacts");
  add_run_options(run, run_opts);
  auto* describe = app.add_subcommand("describe", "print the resolved config");
  add_run_options(describe, describe_opts);
  auto* list = app.add_subcommand("list-presets", "list the built-in presets");

  std::string model_name, model_config, verify_out;
  std::size_t model_d = 1;
  auto* ver = app.add_subcommand("verify-model", "sample the structural conditions of a model");
  ver->add_option("model", model_name, "built-in model name");
  ver->add_option("--d", model_d, "dimension")->check(CLI::PositiveNumber);
  ver->add_option("--config", model_config, "take the model from a config file");
  ver->add_option("--out", verify_out, "write the reports as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) {
      for (const auto& name : preset_names()) std::printf("%-28s %s\n", name.c_str(), preset_description(name).c_str());
      return 0;
    }
    if (*describe) {
      const ExperimentConfig c = resolve(describe_opts);
      c.validate();
      std::cout << to_config_text(c);
      return 0;
    }
    if (*ver) {
      if (model_name.empty() && model_config.empty()) throw ConfigInvalid("model", "give a model name or --config");
      return verify(model_name, model_d, model_config, verify_out);
    }
    if (*run) {
      apply_runtime(run_opts);
      const ExperimentConfig c = resolve(run_opts);
      const ExperimentResult r = run_experiment(c);
      std::printf("wrote %zu files to %s (backend %s)\n", r.files.size(), r.dir.string().c_str(),
                  backend_name(active_backend()));
      return 0;
    }
  } catch (const ConfigInvalid& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const IoFailure& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
