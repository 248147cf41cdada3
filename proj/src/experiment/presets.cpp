#include <algorithm>

#include "splitstep/error.hpp"
#include "splitstep/experiment.hpp"

namespace splitstep {
namespace {

struct PresetEntry {
  const char* name;
  const char* description;
};

const PresetEntry kPresets[] = {
    {"dw-rmse", "double-well, X0 ~ N(3,9), terminal and path errors over h, proxy h = 1e-4"},
    {"dw-density", "double-well, X0 ~ N(0,1), densities at t = 1, 3, 10 with h = 0.01"},
    {"dw-taming", "double-well, X0 ~ B(50,0.5), densities and errors against an SSM proxy at T = 10"},
    {"invariant-rmse", "invariant model, X0 ~ N(2,16), terminal and path errors over h"},
    {"invariant-density", "invariant model, X0 ~ N(2,16), densities at t = 1, 3, 10 with h = 0.01"},
    {"invariant-density-uniform", "invariant model, X0 ~ U(4,12), densities at t = 1, 3, 10 with h = 0.01"},
    {"contraction", "invariant model, coupled X0 ~ N(2,16) and Z0 ~ N(0,1), h = 1e-3, T = 10"},
    {"vdp2d", "2-d Van der Pol model, mean and particle tracks for N in {50,...,2000}, h = 0.01, T = 12"},
    {"supermeasure-case1", "convolution in the diffusion, X0 ~ N(1,1), terminal errors over h"},
    {"supermeasure-case1-density", "convolution in the diffusion, X0 ~ B(50,0.5), densities with h = 0.01"},
    {"supermeasure-case2", "variance term in the diffusion, X0 ~ N(1,1), terminal errors over h"},
    {"poc", "poc-dd model in d = 2, h = 1e-3, T = 1, N in {40,...,1280}, proxy N = 2560, 8 pooled seeds"},
    {"poc-ci", "poc with N in {40,...,320} and proxy N = 640"},
};

const std::vector<double> kRmseGrid{0.1, 0.05, 0.02, 0.01, 0.005, 0.002};
const std::vector<SchemeKind> kAllSchemes{SchemeKind::ssm, SchemeKind::taming_in, SchemeKind::taming_out};

ExperimentConfig rmse_preset(const std::string& model, const std::string& x0, bool full) {
  ExperimentConfig c;
  c.kind = ExperimentKind::rmse;
  c.model_name = model;
  c.x0 = x0;
  c.T = 1.0;
  c.h_grid = kRmseGrid;
  if (full) c.h_grid.push_back(0.001);
  c.proxy_h = 1e-4;
  c.N_grid = {1000};
  c.schemes = kAllSchemes;
  return c;
}

ExperimentConfig density_preset(const std::string& model, const std::string& x0) {
  ExperimentConfig c;
  c.kind = ExperimentKind::density;
  c.model_name = model;
  c.x0 = x0;
  c.T = 10.0;
  c.h_grid = {0.01};
  c.N_grid = {1000};
  c.schemes = kAllSchemes;
  c.observe = {1.0, 3.0, 10.0};
  c.moment_p = {2.0, 4.0};
  return c;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& p : kPresets) v.emplace_back(p.name);
    return v;
  }();
  return names;
}

std::string preset_description(const std::string& name) {
  for (const auto& p : kPresets)
    if (name == p.name) return p.description;
  throw ConfigInvalid("experiment.preset", "unknown preset '" + name + "'");
}

ExperimentConfig preset_config(const std::string& name, bool full) {
  ExperimentConfig c;
  if (name == "dw-rmse") {
    c = rmse_preset("double-well", "normal(3,9)", full);
    c.enforce_h_constraint = false;
  } else if (name == "dw-density") {
    c = density_preset("double-well", "normal(0,1)");
    c.range = std::make_pair(-4.0, 4.0);
    c.enforce_h_constraint = false;
  } else if (name == "dw-taming") {
    c = density_preset("double-well", "binomial(50,0.5)");
    c.proxy_h = 1e-3;
    c.enforce_h_constraint = false;
  } else if (name == "invariant-rmse") {
    c = rmse_preset("invariant", "normal(2,16)", full);
  } else if (name == "invariant-density") {
    c = density_preset("invariant", "normal(2,16)");
    c.range = std::make_pair(-3.0, 3.0);
  } else if (name == "invariant-density-uniform") {
    c = density_preset("invariant", "uniform(4,12)");
    c.range = std::make_pair(-3.0, 3.0);
  } else if (name == "contraction") {
    c.kind = ExperimentKind::contraction;
    c.model_name = "invariant";
    c.x0 = "normal(2,16)";
    c.z0 = "normal(0,1)";
    c.T = 10.0;
    c.h_grid = {1e-3};
    c.N_grid = {1000};
    c.schemes = {SchemeKind::ssm};
    c.fit_start = 0.5;
  } else if (name == "vdp2d") {
    c.kind = ExperimentKind::portrait;
    c.model_name = "vdp2d";
    c.d = 2;
    c.x0 = "product(normal(2,16), normal(0,16))";
    c.T = 12.0;
    c.h_grid = {0.01};
    c.N_grid = {50, 200, 500, 1000, 2000};
    c.schemes = kAllSchemes;
    c.track_particles = 10;
  } else if (name == "supermeasure-case1") {
    c = rmse_preset("supermeasure-case1", "normal(1,1)", full);
    c.enforce_h_constraint = false;
  } else if (name == "supermeasure-case1-density") {
    c = density_preset("supermeasure-case1", "binomial(50,0.5)");
    c.enforce_h_constraint = false;
  } else if (name == "supermeasure-case2") {
    c = rmse_preset("supermeasure-case2", "normal(1,1)", full);
    c.enforce_h_constraint = false;
  } else if (name == "poc" || name == "poc-ci") {
    c.kind = ExperimentKind::poc;
    c.model_name = "poc-dd";
    c.d = 2;
    c.x0 = "normal(1,1)";
    c.T = 1.0;
    c.h_grid = {1e-3};
    c.N_grid = name == "poc" ? std::vector<std::size_t>{40, 80, 160, 320, 640, 1280}
                             : std::vector<std::size_t>{40, 80, 160, 320};
    c.proxy_N = name == "poc" ? 2560 : 640;
    c.schemes = {SchemeKind::ssm};
    c.repetitions = 8;
  } else {
    throw ConfigInvalid("experiment.preset", "unknown preset '" + name + "'");
  }
  c.preset = name;
  c.out_dir = "out/" + name;
  return c;
}

}  // namespace splitstep
