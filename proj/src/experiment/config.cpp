#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "splitstep/brownian.hpp"
#include "splitstep/error.hpp"
#include "splitstep/experiment.hpp"
#include "splitstep/report_io.hpp"

namespace splitstep {

const char* experiment_kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::rmse: return "rmse";
    case ExperimentKind::density: return "density";
    case ExperimentKind::contraction: return "contraction";
    case ExperimentKind::portrait: return "portrait";
    case ExperimentKind::poc: return "poc";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (auto k : {ExperimentKind::rmse, ExperimentKind::density, ExperimentKind::contraction, ExperimentKind::portrait,
                 ExperimentKind::poc})
    if (name == experiment_kind_name(k)) return k;
  throw ConfigInvalid("experiment.kind", "unknown kind '" + name + "' (rmse, density, contraction, portrait, poc)");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& text, const std::string& field, int line) {
  const std::string s = trim(text);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigInvalid(field, "'" + s + "' is not a number", line);
  return v;
}

std::uint64_t to_uint(const std::string& text, const std::string& field, int line) {
  const std::string s = trim(text);
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigInvalid(field, "'" + s + "' is not a nonnegative integer", line);
  return v;
}

bool to_bool(const std::string& text, const std::string& field, int line) {
  const std::string s = trim(text);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigInvalid(field, "'" + s + "' is not a boolean", line);
}

std::vector<double> to_doubles(const std::string& text, const std::string& field, int line) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(to_double(item, field, line));
  return out;
}

std::optional<double> to_optional_double(const std::string& text, const std::string& field, int line) {
  if (trim(text).empty()) return std::nullopt;
  return to_double(text, field, line);
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? ", " : "") + format_double(v[k]);
  return out;
}

const std::set<std::string> kExpressionKeys{"f", "f_sigma", "u", "b", "sigma"};

bool is_constant_name(const std::string& key) {
  ModelConstants probe;
  try {
    probe.set(key, 3.0);
    return true;
  } catch (const ConfigInvalid&) {
    return key == "m";
  }
}

}  // namespace

void apply_setting(ExperimentConfig& c, const std::string& dotted, const std::string& raw, int line) {
  const auto dot = dotted.find('.');
  if (dot == std::string::npos) throw ConfigInvalid(dotted, "settings are written section.key", line);
  const std::string section = dotted.substr(0, dot), key = dotted.substr(dot + 1);
  const std::string value = trim(raw);
  const std::string& f = dotted;

  if (section == "experiment") {
    if (key == "label") c.preset = value;
    else if (key == "kind") {
      try {
        c.kind = parse_experiment_kind(value);
      } catch (const ConfigInvalid& e) {
        throw ConfigInvalid(f, e.message(), line);
      }
    } else if (key == "seed") c.seed = to_uint(value, f, line);
    else if (key == "repetitions") c.repetitions = to_uint(value, f, line);
    else if (key == "T") c.T = to_double(value, f, line);
    else if (key == "h") c.h_grid = to_doubles(value, f, line);
    else if (key == "proxy_h") c.proxy_h = to_optional_double(value, f, line);
    else if (key == "h_fine") c.h_fine = to_optional_double(value, f, line);
    else if (key == "N") {
      c.N_grid.clear();
      for (const auto& item : split_list(value)) c.N_grid.push_back(to_uint(item, f, line));
    } else if (key == "proxy_N") {
      if (value.empty()) c.proxy_N.reset();
      else c.proxy_N = to_uint(value, f, line);
    } else if (key == "x0") c.x0 = value;
    else if (key == "z0") c.z0 = value;
    else if (key == "schemes") {
      c.schemes.clear();
      for (const auto& item : split_list(value)) {
        try {
          c.schemes.push_back(parse_scheme(item));
        } catch (const ConfigInvalid& e) {
          throw ConfigInvalid(f, e.message(), line);
        }
      }
    } else if (key == "observe") c.observe = to_doubles(value, f, line);
    else if (key == "fit_start") c.fit_start = to_double(value, f, line);
    else if (key == "track_particles") c.track_particles = to_uint(value, f, line);
    else if (key == "bins") c.bins = to_uint(value, f, line);
    else if (key == "range") {
      const auto v = to_doubles(value, f, line);
      if (v.empty()) c.range.reset();
      else if (v.size() == 2) c.range = std::make_pair(v[0], v[1]);
      else throw ConfigInvalid(f, "range is 'lo, hi' or empty", line);
    } else if (key == "moment_p") c.moment_p = to_doubles(value, f, line);
    else if (key == "moment_cap") c.moment_cap = to_double(value, f, line);
    else if (key == "checkpoints") c.checkpoints = to_bool(value, f, line);
    else throw ConfigInvalid(f, "unknown key", line);
  } else if (section == "model") {
    if (key == "name") c.model_name = value;
    else if (key == "d") c.d = to_uint(value, f, line);
    else if (key == "l") c.l = to_uint(value, f, line);
    else if (kExpressionKeys.count(key)) {
      if (value.empty()) c.expressions.erase(key);
      else c.expressions[key] = value;
    } else if (is_constant_name(key)) {
      if (value.empty()) {
        c.constant_overrides.erase(key);
        return;
      }
      const double v = to_double(value, f, line);
      try {
        ModelConstants probe;
        probe.set(key, v);
      } catch (const ConfigInvalid& e) {
        throw ConfigInvalid(f, e.message(), line);
      }
      c.constant_overrides[key] = v;
    } else throw ConfigInvalid(f, "unknown key", line);
  } else if (section == "scheme") {
    if (key == "alpha") c.alpha = to_double(value, f, line);
    else if (key == "enforce_h_constraint") c.enforce_h_constraint = to_bool(value, f, line);
    else throw ConfigInvalid(f, "unknown key", line);
  } else if (section == "solver") {
    if (key == "tol") c.solver.tol = to_double(value, f, line);
    else if (key == "max_outer") c.solver.max_outer = static_cast<int>(to_uint(value, f, line));
    else if (key == "max_newton") c.solver.max_newton = static_cast<int>(to_uint(value, f, line));
    else if (key == "damping") c.solver.damping = to_double(value, f, line);
    else throw ConfigInvalid(f, "unknown key", line);
  } else if (section == "output") {
    if (key == "dir") c.out_dir = value;
    else throw ConfigInvalid(f, "unknown key", line);
  } else {
    throw ConfigInvalid(f, "unknown section '" + section + "'", line);
  }
}

ExperimentConfig parse_config(const std::string& text) {
  struct Entry {
    std::string key, value;
    int line;
  };
  std::vector<Entry> entries;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigInvalid("", "unterminated section header", line);
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigInvalid("", "expected 'key = value'", line);
    const std::string key = trim(s.substr(0, eq));
    if (section.empty()) throw ConfigInvalid(key, "key outside of any section", line);
    entries.push_back({section + "." + key, s.substr(eq + 1), line});
  }

  ExperimentConfig config;
  config.preset = "custom";
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const Entry& e = entries[k];
    if (e.key == "experiment.preset") {
      if (k != 0) throw ConfigInvalid(e.key, "preset must be the first setting", e.line);
      try {
        config = preset_config(trim(e.value));
      } catch (const ConfigInvalid& err) {
        throw ConfigInvalid(e.key, err.message(), e.line);
      }
      continue;
    }
    apply_setting(config, e.key, e.value, e.line);
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "[experiment]\n";
  o << "label = " << c.preset << "\n";
  o << "kind = " << experiment_kind_name(c.kind) << "\n";
  o << "seed = " << c.seed << "\n";
  o << "repetitions = " << c.repetitions << "\n";
  o << "T = " << format_double(c.T) << "\n";
  o << "h = " << join(c.h_grid) << "\n";
  o << "proxy_h = " << (c.proxy_h ? format_double(*c.proxy_h) : "") << "\n";
  o << "h_fine = " << (c.h_fine ? format_double(*c.h_fine) : "") << "\n";
  o << "N = ";
  for (std::size_t k = 0; k < c.N_grid.size(); ++k) o << (k ? ", " : "") << c.N_grid[k];
  o << "\n";
  o << "proxy_N = " << (c.proxy_N ? std::to_string(*c.proxy_N) : "") << "\n";
  o << "x0 = " << c.x0 << "\n";
  o << "z0 = " << c.z0 << "\n";
  o << "schemes = ";
  for (std::size_t k = 0; k < c.schemes.size(); ++k) o << (k ? ", " : "") << scheme_name(c.schemes[k]);
  o << "\n";
  o << "observe = " << join(c.observe) << "\n";
  o << "fit_start = " << format_double(c.fit_start) << "\n";
  o << "track_particles = " << c.track_particles << "\n";
  o << "bins = " << c.bins << "\n";
  o << "range = " << (c.range ? format_double(c.range->first) + ", " + format_double(c.range->second) : "") << "\n";
  o << "moment_p = " << join(c.moment_p) << "\n";
  o << "moment_cap = " << format_double(c.moment_cap) << "\n";
  o << "checkpoints = " << (c.checkpoints ? "true" : "false") << "\n";
  o << "\n[model]\n";
  o << "name = " << c.model_name << "\n";
  o << "d = " << c.d << "\n";
  o << "l = " << c.l << "\n";
  for (const auto& [k, v] : c.expressions) o << k << " = " << v << "\n";
  for (const auto& [k, v] : c.constant_overrides) o << k << " = " << format_double(v) << "\n";
  o << "\n[scheme]\n";
  o << "alpha = " << format_double(c.alpha) << "\n";
  o << "enforce_h_constraint = " << (c.enforce_h_constraint ? "true" : "false") << "\n";
  o << "\n[solver]\n";
  o << "tol = " << format_double(c.solver.tol) << "\n";
  o << "max_outer = " << c.solver.max_outer << "\n";
  o << "max_newton = " << c.solver.max_newton << "\n";
  o << "damping = " << format_double(c.solver.damping) << "\n";
  o << "\n[output]\n";
  o << "dir = " << c.out_dir.string() << "\n";
  return o.str();
}

Model ExperimentConfig::build_model() const {
  Model model;
  try {
    if (!expressions.empty()) {
      ModelConstants constants;
      model = model_from_expressions(model_name, d, l, expressions, constants);
    } else {
      model = builtin_model(model_name, d);
    }
  } catch (const ConfigInvalid&) {
    throw;
  } catch (const Error& e) {
    throw ConfigInvalid("model.name", e.what());
  }
  for (const auto& [k, v] : constant_overrides) model.constants.set(k, v);
  model.validate();
  return model;
}

double ExperimentConfig::fine_step() const {
  if (h_fine) return *h_fine;
  double h = proxy_h ? *proxy_h : INFINITY;
  for (double v : h_grid) h = std::min(h, v);
  return h;
}

SchemeConfig ExperimentConfig::scheme_config(SchemeKind kind_, double h) const {
  SchemeConfig s = SchemeConfig::make(kind_, h, T, alpha);
  s.solver = solver;
  s.enforce_h_constraint = enforce_h_constraint;
  return s;
}

void ExperimentConfig::validate() const {
  const Model model = build_model();
  if (!(T > 0.0)) throw ConfigInvalid("experiment.T", "horizon must be positive");
  if (h_grid.empty()) throw ConfigInvalid("experiment.h", "step grid is empty");
  if (N_grid.empty()) throw ConfigInvalid("experiment.N", "particle grid is empty");
  if (schemes.empty()) throw ConfigInvalid("experiment.schemes", "no scheme selected");
  if (repetitions == 0) throw ConfigInvalid("experiment.repetitions", "need at least one repetition");
  for (double h : h_grid)
    if (!(h > 0.0)) throw ConfigInvalid("experiment.h", "steps must be positive");
  for (std::size_t n : N_grid)
    if (n == 0) throw ConfigInvalid("experiment.N", "particle counts must be positive");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigInvalid("scheme.alpha", "taming exponent must lie in (0,1]");
  try {
    solver.validate();
  } catch (const ConfigInvalid& e) {
    throw ConfigInvalid(e.field(), e.message());
  }

  auto check_law = [&](const std::string& text, const char* field) {
    try {
      const InitialSpec spec = InitialSpec::parse(text);
      if (spec.laws.size() != 1 && spec.laws.size() != d)
        throw ConfigInvalid(field, "law has " + std::to_string(spec.laws.size()) + " components but d = " +
                                       std::to_string(d));
    } catch (const ConfigInvalid& e) {
      throw ConfigInvalid(field, e.message());
    }
  };
  check_law(x0, "experiment.x0");
  if (kind == ExperimentKind::contraction) check_law(z0, "experiment.z0");

  const double hf = fine_step();
  if (!(hf > 0.0)) throw ConfigInvalid("experiment.h_fine", "fine step must be positive");
  const BrownianLattice probe(seed, 1, model.l, hf, 1);
  auto check_step = [&](double h, SchemeKind scheme, const char* field) {
    try {
      probe.ratio(h);
    } catch (const NonCommensurate& e) {
      throw ConfigInvalid(field, std::string(e.what()) + " (fine step " + format_double(hf) + ")");
    }
    try {
      scheme_config(scheme, h).validate(model);
    } catch (const ConfigInvalid& e) {
      throw ConfigInvalid(field, e.message());
    }
  };
  for (double h : h_grid)
    for (SchemeKind s : schemes) check_step(h, s, "experiment.h");

  switch (kind) {
    case ExperimentKind::rmse: {
      if (!proxy_h) throw ConfigInvalid("experiment.proxy_h", "rmse experiments need a proxy step");
      check_step(*proxy_h, SchemeKind::ssm, "experiment.proxy_h");
      for (double h : h_grid)
        if (!(*proxy_h < h)) throw ConfigInvalid("experiment.proxy_h", "proxy step must be finer than every h");
      break;
    }
    case ExperimentKind::density: {
      if (proxy_h) check_step(*proxy_h, SchemeKind::ssm, "experiment.proxy_h");
      for (double t : observe)
        if (t < 0.0 || t > T * (1.0 + 1e-12)) throw ConfigInvalid("experiment.observe", "times must lie in [0, T]");
      for (double h : h_grid) {
        try {
          steps_for_times(observe, h);
        } catch (const ConfigInvalid& e) {
          throw ConfigInvalid("experiment.observe", e.message());
        }
      }
      break;
    }
    case ExperimentKind::contraction:
      if (!(fit_start >= 0.0 && fit_start < T)) throw ConfigInvalid("experiment.fit_start", "must lie in [0, T)");
      break;
    case ExperimentKind::portrait: break;
    case ExperimentKind::poc: {
      if (h_grid.size() != 1) throw ConfigInvalid("experiment.h", "poc experiments use a single step");
      std::vector<std::size_t> grid = N_grid;
      grid.push_back(proxy_N ? *proxy_N : 2 * N_grid.back());
      if (N_grid.size() < 1) throw ConfigInvalid("experiment.N", "particle grid is empty");
      for (std::size_t k = 1; k < grid.size(); ++k)
        if (grid[k] != 2 * grid[k - 1])
          throw ConfigInvalid(k + 1 == grid.size() ? "experiment.proxy_N" : "experiment.N",
                              "each particle count must double the previous one");
      break;
    }
  }
  if (bins == 0) throw ConfigInvalid("experiment.bins", "need at least one bin");
  if (range && !(range->first < range->second)) throw ConfigInvalid("experiment.range", "need lo < hi");
  for (double p : moment_p)
    if (!(p >= 1.0)) throw ConfigInvalid("experiment.moment_p", "moment orders must be >= 1");
}

}  // namespace splitstep
