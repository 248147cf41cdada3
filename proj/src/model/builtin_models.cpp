#include <algorithm>
#include <cmath>

#include "splitstep/error.hpp"
#include "splitstep/model.hpp"

namespace splitstep {

double ModelConstants::q() const { return std::max({q1.value_or(0.0), q2.value_or(0.0), 0.0}); }

std::map<std::string, double> ModelConstants::declared() const {
  std::map<std::string, double> out;
  auto put = [&](const char* k, const std::optional<double>& v) {
    if (v) out[k] = *v;
  };
  put("L_f1", L_f1);
  put("L_f2", L_f2);
  put("L_f3", L_f3);
  put("L_us1", L_us1);
  put("L_us2", L_us2);
  put("L_us3", L_us3);
  put("L_us4", L_us4);
  put("L_b1", L_b1);
  put("L_b2", L_b2);
  put("L_b3", L_b3);
  put("q1", q1);
  put("q2", q2);
  out["m"] = m;
  return out;
}

void ModelConstants::set(const std::string& name, double value) {
  if (name == "m") {
    if (!(value > 2.0)) throw ConfigInvalid("m", "moment order must exceed 2");
    m = value;
    return;
  }
  std::optional<double>* slot = nullptr;
  if (name == "L_f1") slot = &L_f1;
  else if (name == "L_f2") slot = &L_f2;
  else if (name == "L_f3") slot = &L_f3;
  else if (name == "L_us1") slot = &L_us1;
  else if (name == "L_us2") slot = &L_us2;
  else if (name == "L_us3") slot = &L_us3;
  else if (name == "L_us4") slot = &L_us4;
  else if (name == "L_b1") slot = &L_b1;
  else if (name == "L_b2") slot = &L_b2;
  else if (name == "L_b3") slot = &L_b3;
  else if (name == "q1") slot = &q1;
  else if (name == "q2") slot = &q2;
  if (!slot) throw ConfigInvalid(name, "unknown model constant");
  *slot = value;
}

void Model::validate() const {
  auto bad = [&](const std::string& what) { throw DimensionMismatch(name + ": " + what); };
  if (d == 0 || l == 0) bad("d and l must be positive");
  if (f.dim() != d || f.cols() != 1) bad("f must map R^d -> R^d");
  if (f_sigma.dim() != d || f_sigma.cols() != l) bad("f_sigma must map R^d -> R^(d x l)");
  if (u.dim() != d || u.cols() != 1) bad("u must be R^d-valued");
  if (b.dim() != d || b.cols() != 1) bad("b must be R^d-valued");
  if (sigma.dim() != d || sigma.cols() != l) bad("sigma must be R^(d x l)-valued");
  if (!(constants.m > 2.0)) bad("moment order m must exceed 2");
}

const std::vector<std::string>& builtin_model_names() {
  static const std::vector<std::string> names = {"double-well",        "invariant",          "vdp2d",
                                                 "supermeasure-case1", "supermeasure-case2", "poc-dd",
                                                 "ou-linear",          "rotation2d"};
  return names;
}

namespace {

using Span = std::span<const double>;
using Out = std::span<double>;

Coefficient scalar_coefficient(double (*value)(double), double (*slope)(double), const char* desc) {
  return Coefficient(
      1, 1, [value](double, Span x, const MeasureSummary&, Out out) { out[0] = value(x[0]); },
      [slope](double, Span x, const MeasureSummary&, Out out) { out[0] = slope(x[0]); }, desc);
}

void require_dim(const std::string& name, std::size_t d, std::size_t want) {
  if (d != want)
    throw DimensionMismatch(name + " is defined for d=" + std::to_string(want) + ", got d=" + std::to_string(d));
}

// x + x^2/4: the super-linear diffusion shared by the double-well family.
Coefficient dw_sigma() {
  return scalar_coefficient([](double x) { return x + 0.25 * x * x; }, [](double x) { return 1.0 + 0.5 * x; },
                            "linear(1) + norm_power(0.25,2)");
}

ModelConstants dw_constants() {
  ModelConstants c;
  c.m = 2.2;
  c.L_f1 = 0.0;
  c.L_f2 = 1.5;
  c.L_f3 = 0.0;
  c.q2 = 2.0;
  // sup over x != x' of -(x^2+xx'+x'^2)/4 + 2(m-1)(1+(x+x')/4)^2, attained at x = x' = 8
  c.L_us1 = 12.0;
  c.L_us2 = 0.0;
  c.L_us3 = 1.25;
  c.L_us4 = 0.0;
  c.q1 = 2.0;
  c.L_b1 = 1.0;
  c.L_b2 = 1.0;
  c.L_b3 = 0.0;
  return c;
}

Model double_well_family(const std::string& name) {
  Model m;
  m.name = name;
  m.d = 1;
  m.l = 1;
  m.f = Kernel::power_law(1, -1.0, 3.0);
  m.f_sigma = Kernel::zero(1, 1);
  m.u = scalar_coefficient([](double x) { return -0.25 * x * x * x; }, [](double x) { return -0.75 * x * x; },
                           "power_law(-0.25,3)");
  m.b = scalar_coefficient([](double x) { return x; }, [](double) { return 1.0; }, "linear(1)");
  m.sigma = dw_sigma();
  m.constants = dw_constants();
  return m;
}

Model make_double_well() { return double_well_family("double-well"); }

Model make_invariant() {
  Model m;
  m.name = "invariant";
  m.d = 1;
  m.l = 1;
  m.f = Kernel::power_law(1, -1.0, 3.0);
  m.f_sigma = Kernel::zero(1, 1);
  m.u = scalar_coefficient([](double x) { return -x * x * x; }, [](double x) { return -3.0 * x * x; },
                           "power_law(-1,3)");
  m.b = scalar_coefficient([](double x) { return -x; }, [](double) { return -1.0; }, "linear(-1)");
  m.sigma = scalar_coefficient([](double x) { return 0.25 * (1.0 - x * x); }, [](double x) { return -0.5 * x; },
                               "matrix(0.25) + norm_power(-0.25,2)");
  ModelConstants c;
  c.m = 4.0;  // -(x^2+xx'+x'^2) + (m-1)(x+x')^2/8 <= 0 needs m <= 7
  c.L_f1 = 0.0;
  c.L_f2 = 1.5;
  c.L_f3 = 0.0;
  c.q2 = 2.0;
  c.L_us1 = 0.0;
  c.L_us2 = 0.0;
  c.L_us3 = 1.625;
  c.L_us4 = 0.0;
  c.q1 = 2.0;
  c.L_b1 = 1.0;
  c.L_b2 = -1.0;
  c.L_b3 = 0.0;
  m.constants = c;
  return m;
}

Model make_vdp2d() {
  Model m;
  m.name = "vdp2d";
  m.d = 2;
  m.l = 2;
  m.f = Kernel::power_law(2, -1.0, 3.0);
  m.f_sigma = Kernel::zero(2, 2);
  m.u = Coefficient(
      2, 1,
      [](double, Span x, const MeasureSummary&, Out out) {
        out[0] = -x[0] * x[0] * x[0] / 3.0;
        out[1] = 0.0;
      },
      [](double, Span x, const MeasureSummary&, Out out) {
        out[0] = -x[0] * x[0];
        out[1] = out[2] = out[3] = 0.0;
      },
      "-(1/3)(x1^3, 0)");
  m.b = Coefficient(
      2, 1,
      [](double, Span x, const MeasureSummary&, Out out) {
        out[0] = x[0] - x[1];
        out[1] = x[0];
      },
      [](double, Span, const MeasureSummary&, Out out) {
        out[0] = 1.0;
        out[1] = -1.0;
        out[2] = 1.0;
        out[3] = 0.0;
      },
      "linear(1,-1;1,0)");
  m.sigma = Coefficient(
      2, 2,
      [](double, Span x, const MeasureSummary&, Out out) {
        out[0] = 1.0 + 0.25 * x[0] * x[0];
        out[1] = out[2] = out[3] = 0.0;
      },
      {}, "[1 + x1^2/4, 0; 0, 0]");
  ModelConstants c;
  c.m = 3.0;  // -(x1+x1')^2/4 + (m-1)(x1+x1')^2/8 <= 0 needs m <= 3
  c.L_f1 = 0.0;
  c.L_f2 = 1.5;
  c.L_f3 = 0.0;
  c.q2 = 2.0;
  c.L_us1 = 0.0;
  c.L_us2 = 0.0;
  c.L_us3 = 1.0;
  c.L_us4 = 0.0;
  c.q1 = 2.0;
  c.L_b1 = (3.0 + std::sqrt(5.0)) / 2.0;  // squared spectral norm of [1 -1; 1 0]
  c.L_b2 = 1.0;
  c.L_b3 = 0.0;
  m.constants = c;
  return m;
}

Model make_supermeasure(int which) {
  Model m = double_well_family(which == 1 ? "supermeasure-case1" : "supermeasure-case2");
  if (which == 1) {
    m.f_sigma = Kernel::radial(1, 1.0, 2.0, DenseMatrix::identity(1));
  } else {
    // x + x^2/4 + int int (y - z)^2 mu(dy) mu(dz) = x + x^2/4 + 2 Var(mu)
    m.sigma = Coefficient(
        1, 1,
        [](double, Span x, const MeasureSummary& mu, Out out) { out[0] = x[0] + 0.25 * x[0] * x[0] + 2.0 * mu.variance; },
        [](double, Span x, const MeasureSummary&, Out out) { out[0] = 1.0 + 0.5 * x[0]; },
        "linear(1) + norm_power(0.25,2) + 2 Var(mu)");
  }
  return m;
}

Model make_poc(std::size_t d) {
  if (d < 2) throw DimensionMismatch("poc-dd needs d >= 2");
  Model m;
  m.name = "poc-dd";
  m.d = d;
  m.l = d;
  m.f = Kernel::power_law(d, -1.0, 3.0);
  m.f_sigma = Kernel::zero(d, d);
  m.u = Coefficient(
      d, 1,
      [](double, Span x, const MeasureSummary&, Out out) {
        for (std::size_t k = 0; k < x.size(); ++k) out[k] = -x[k] * x[k] * x[k] / 3.0;
      },
      [d](double, Span x, const MeasureSummary&, Out out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t k = 0; k < d; ++k) out[k * d + k] = -x[k] * x[k];
      },
      "component_power(-0.333333,3)");
  m.b = Coefficient(
      d, 1, [](double, Span x, const MeasureSummary&, Out out) { std::copy(x.begin(), x.end(), out.begin()); },
      [d](double, Span, const MeasureSummary&, Out out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t k = 0; k < d; ++k) out[k * d + k] = 1.0;
      },
      "linear(1)");
  // entry (r, c) = x_c + [r == c] x_c^2 / 4
  m.sigma = Coefficient(
      d, d,
      [d](double, Span x, const MeasureSummary&, Out out) {
        for (std::size_t r = 0; r < d; ++r)
          for (std::size_t c = 0; c < d; ++c) out[r * d + c] = x[c] + (r == c ? 0.25 * x[c] * x[c] : 0.0);
      },
      {}, "x_c + [r==c] x_c^2/4");
  ModelConstants c;
  c.m = 2.5;
  c.L_f1 = 0.0;
  c.L_f2 = 1.5;
  c.L_f3 = 0.0;
  c.q2 = 2.0;
  // per component: -s^2/16 + 3s/2 + 3d with s = x_c + x_c', maximal at s = 12
  c.L_us1 = 9.0 + 3.0 * static_cast<double>(d);
  c.L_us2 = 0.0;
  c.L_us4 = 0.0;
  c.q1 = 2.0;
  c.L_b1 = 1.0;
  c.L_b2 = 1.0;
  c.L_b3 = 0.0;
  m.constants = c;
  return m;
}

Model make_ou_linear() {
  Model m;
  m.name = "ou-linear";
  m.d = 1;
  m.l = 1;
  m.f = Kernel::zero(1, 1);
  m.f_sigma = Kernel::zero(1, 1);
  m.u = scalar_coefficient([](double x) { return -x; }, [](double) { return -1.0; }, "linear(-1)");
  m.b = Coefficient::zero(1);
  m.sigma = scalar_coefficient([](double) { return 1.0; }, [](double) { return 0.0; }, "matrix(1)");
  ModelConstants c;
  c.m = 4.0;
  c.L_f1 = 0.0;
  c.L_f3 = 0.0;
  c.L_us1 = -1.0;
  c.L_us2 = 0.0;
  c.L_b1 = 0.0;
  c.L_b2 = 0.0;
  c.L_b3 = 0.0;
  m.constants = c;
  return m;
}

Model make_rotation2d() {
  Model m;
  m.name = "rotation2d";
  m.d = 2;
  m.l = 1;
  m.f = Kernel::zero(2, 1);
  m.f_sigma = Kernel::zero(2, 1);
  m.u = Coefficient::zero(2);
  m.b = Coefficient(
      2, 1,
      [](double, Span x, const MeasureSummary&, Out out) {
        out[0] = -x[1];
        out[1] = x[0];
      },
      {}, "linear(0,-1;1,0)");
  m.sigma = Coefficient::zero(2, 1);
  ModelConstants c;
  c.m = 4.0;
  c.L_f1 = 0.0;
  c.L_f3 = 0.0;
  c.L_us1 = 0.0;
  c.L_us2 = 0.0;
  c.L_b1 = 1.0;
  c.L_b2 = 0.0;
  c.L_b3 = 0.0;
  m.constants = c;
  return m;
}

}  // namespace

Model builtin_model(const std::string& name, std::size_t d) {
  Model m;
  if (name == "double-well") {
    require_dim(name, d, 1);
    m = make_double_well();
  } else if (name == "invariant") {
    require_dim(name, d, 1);
    m = make_invariant();
  } else if (name == "vdp2d") {
    require_dim(name, d, 2);
    m = make_vdp2d();
  } else if (name == "supermeasure-case1") {
    require_dim(name, d, 1);
    m = make_supermeasure(1);
  } else if (name == "supermeasure-case2") {
    require_dim(name, d, 1);
    m = make_supermeasure(2);
  } else if (name == "poc-dd") {
    m = make_poc(d);
  } else if (name == "ou-linear") {
    require_dim(name, d, 1);
    m = make_ou_linear();
  } else if (name == "rotation2d") {
    require_dim(name, d, 2);
    m = make_rotation2d();
  } else {
    throw UnknownModel("unknown model '" + name + "'");
  }
  m.validate();
  return m;
}

double compute_zeta(const ModelConstants& c) {
  if (!c.L_f1 || !c.L_us1 || !c.L_us2) throw MissingConstant("zeta needs L_f1, L_us1 and L_us2");
  const double lf = *c.L_f1, l1 = *c.L_us1, l2 = *c.L_us2;
  return std::max({2.0 * (lf + l1), 2.0 * (2.0 * std::max(lf, 0.0) + l1 + l2), 0.0});
}

double max_stepsize(const ModelConstants& c) {
  const double zeta = compute_zeta(c);
  return zeta > 0.0 ? std::min(1.0, 1.0 / zeta) : 1.0;
}

}  // namespace splitstep
