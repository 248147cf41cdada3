#include <cmath>

#include "splitstep/error.hpp"
#include "splitstep/pair_sums.hpp"
#include "splitstep/schemes.hpp"

namespace splitstep {

const char* scheme_name(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::ssm: return "ssm";
    case SchemeKind::taming_in: return "taming-in";
    case SchemeKind::taming_out: return "taming-out";
    case SchemeKind::euler: return "euler";
  }
  return "?";
}

SchemeKind parse_scheme(const std::string& name) {
  if (name == "ssm") return SchemeKind::ssm;
  if (name == "taming-in") return SchemeKind::taming_in;
  if (name == "taming-out") return SchemeKind::taming_out;
  if (name == "euler") return SchemeKind::euler;
  throw ConfigInvalid("scheme", "unknown scheme '" + name + "' (ssm, taming-in, taming-out, euler)");
}

SchemeConfig SchemeConfig::make(SchemeKind kind, double h, double T, double alpha) {
  SchemeConfig c;
  c.kind = kind;
  c.h = h;
  c.T = T;
  c.alpha = alpha;
  if (!(h > 0.0) || !(T >= 0.0)) throw ConfigInvalid("h", "stepsize must be positive and horizon nonnegative");
  c.M = static_cast<std::size_t>(std::llround(T / h));
  if (std::fabs(static_cast<double>(c.M) * h - T) > std::nextafter(T, INFINITY) - T)
    throw ConfigInvalid("h", "horizon " + std::to_string(T) + " is not a whole number of steps of " + std::to_string(h));
  return c;
}

void SchemeConfig::validate(const Model& model) const {
  if (!(h > 0.0)) throw ConfigInvalid("h", "stepsize must be positive");
  if (std::fabs(static_cast<double>(M) * h - T) > std::nextafter(T, INFINITY) - T)
    throw ConfigInvalid("h", "M h must equal T");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigInvalid("alpha", "taming exponent must lie in (0,1]");
  solver.validate();
  if (enforce_h_constraint && kind == SchemeKind::ssm) {
    const double zeta = compute_zeta(model.constants);
    const double hmax = max_stepsize(model.constants);
    if (!(h < hmax) && !(zeta == 0.0 && h <= 1.0))
      throw ConfigInvalid("h", "stepsize " + std::to_string(h) + " violates h < min{1, 1/zeta} = " +
                                   std::to_string(hmax) + " (zeta = " + std::to_string(zeta) +
                                   "); disable enforce_h_constraint to run anyway");
  }
}

double SchemeConfig::tame_scale() const { return std::pow(static_cast<double>(M), alpha); }

namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void check_increments(const Model& model, const ParticleState& X, std::span<const double> dW) {
  if (X.d != model.d) throw DimensionMismatch("state dimension differs from the model");
  if (dW.size() != X.n * model.l) throw SizeMismatch("increments must be N x l");
}

void tame(std::span<double> v, double scale) {
  const double f = 1.0 / (1.0 + scale * norm(v));
  for (double& x : v) x *= f;
}

struct ExplicitParts {
  double scale = 0.0;
  TamingVariant variant = TamingVariant::in;
  bool tamed = false;
};

// X + h (f*mu + u + b)(X) + (sigma + f_sigma*mu)(X) dW with the requested taming.
ParticleState explicit_step(const Model& model, const ParticleState& X, std::span<const double> dW, double t, double h,
                            const ExplicitParts& parts) {
  check_increments(model, X, dW);
  const std::size_t n = X.n, d = X.d, l = model.l;
  const MeasureSummary mu = MeasureSummary::of(X);
  PairSums cf, cs;
  PairSumOptions popt;
  if (parts.tamed && parts.variant == TamingVariant::in) popt.tame_scale = parts.scale;
  if (!model.f.is_zero()) pair_sums(model.f, X, popt, cf);
  if (!model.f_sigma.is_zero()) pair_sums(model.f_sigma, X, popt, cs);
  const bool out_tame = parts.tamed && parts.variant == TamingVariant::out;

  ParticleState next(n, d);
  std::vector<double> drift(d), u(d), b(d), sig(d * l), conv(d), convs(d * l);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = X.row(i);
    std::fill(drift.begin(), drift.end(), 0.0);
    if (!model.f.is_zero()) {
      std::copy(cf.row(i).begin(), cf.row(i).end(), conv.begin());
      if (out_tame) tame(conv, parts.scale);
      for (std::size_t a = 0; a < d; ++a) drift[a] += conv[a];
    }
    if (!model.u.is_zero()) {
      model.u.evaluate(t, x, mu, u);
      if (parts.tamed) tame(u, parts.scale);
      for (std::size_t a = 0; a < d; ++a) drift[a] += u[a];
    }
    model.b.evaluate(t, x, mu, b);
    model.sigma.evaluate(t, x, mu, sig);
    if (!model.f_sigma.is_zero()) {
      std::copy(cs.row(i).begin(), cs.row(i).end(), convs.begin());
      if (out_tame) tame(convs, parts.scale);
      for (std::size_t e = 0; e < d * l; ++e) sig[e] += convs[e];
    }
    auto out = next.row(i);
    for (std::size_t a = 0; a < d; ++a) {
      double noise = 0.0;
      for (std::size_t c = 0; c < l; ++c) noise += sig[a * l + c] * dW[i * l + c];
      out[a] = x[a] + h * (drift[a] + b[a]) + noise;
    }
  }
  next.time = X.time + h;
  next.step = X.step + 1;
  return next;
}

}  // namespace

ParticleState ssm_step(const Model& model, const ParticleState& X, std::span<const double> dW, double t, double h,
                       const SolverConfig& solver, StageState* stage_out) {
  check_increments(model, X, dW);
  StageState stage = solve_implicit_stage(model, X, h, solver, t);
  if (!stage.Y.all_finite()) throw NonFinite("implicit stage is non-finite");
  const std::size_t n = X.n, d = X.d, l = model.l;
  const ParticleState& Y = stage.Y;
  const MeasureSummary mu = MeasureSummary::of(Y);
  PairSums cs;
  if (!model.f_sigma.is_zero()) pair_sums(model.f_sigma, Y, {}, cs);

  ParticleState next(n, d);
  std::vector<double> b(d), sig(d * l);
  for (std::size_t i = 0; i < n; ++i) {
    auto y = Y.row(i);
    model.b.evaluate(t, y, mu, b);
    model.sigma.evaluate(t, y, mu, sig);
    if (!model.f_sigma.is_zero())
      for (std::size_t e = 0; e < d * l; ++e) sig[e] += cs.values[i * d * l + e];
    auto out = next.row(i);
    for (std::size_t a = 0; a < d; ++a) {
      double noise = 0.0;
      for (std::size_t c = 0; c < l; ++c) noise += sig[a * l + c] * dW[i * l + c];
      out[a] = y[a] + h * b[a] + noise;
    }
  }
  next.time = X.time + h;
  next.step = X.step + 1;
  if (stage_out) *stage_out = std::move(stage);
  return next;
}

ParticleState taming_step(const Model& model, const ParticleState& X, std::span<const double> dW, double t, double h,
                          double alpha, double M, TamingVariant variant) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigInvalid("alpha", "taming exponent must lie in (0,1]");
  ExplicitParts parts;
  parts.tamed = true;
  parts.variant = variant;
  parts.scale = std::pow(M, alpha);
  return explicit_step(model, X, dW, t, h, parts);
}

ParticleState euler_step(const Model& model, const ParticleState& X, std::span<const double> dW, double t, double h) {
  return explicit_step(model, X, dW, t, h, ExplicitParts{});
}

}  // namespace splitstep
