#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "splitstep/coefficient.hpp"
#include "splitstep/kernel.hpp"

namespace splitstep {

/// Declared structural constants of the coefficient bundle. They are asserted by the
/// model author and checked by sampling (see verify.hpp), never inferred.
struct ModelConstants {
  std::optional<double> L_f1;   // one-sided Lipschitz constant of the (f, f_sigma) pair
  std::optional<double> L_f2;   // local Lipschitz growth constant of f, f_sigma
  std::optional<double> L_f3;   // additional-symmetry constant
  std::optional<double> L_us1;  // one-sided constant of the (u, sigma) pair in x
  std::optional<double> L_us2;  // ... and in W2
  std::optional<double> L_us3;
  std::optional<double> L_us4;
  std::optional<double> L_b1;   // |b - b'|^2 <= L_b1 (|x-x'|^2 + W2^2)
  std::optional<double> L_b2;   // <x-x', b-b'> <= L_b2 |x-x'|^2 + L_b3 W2^2
  std::optional<double> L_b3;
  std::optional<double> q1;
  std::optional<double> q2;
  double m = 4.0;               // moment order, > 2

  double q() const;  // max{q1, q2}, 0 when undeclared

  /// Flat name -> value view of every declared constant (for manifests and reports).
  std::map<std::string, double> declared() const;
  /// Sets a constant by its name; throws ConfigInvalid for unknown names.
  void set(const std::string& name, double value);
};

/// Coefficient bundle of dX = (f*mu(X) + u(X,mu) + b(t,X,mu)) dt + (sigma(t,X,mu) + f_sigma*mu(X)) dW.
struct Model {
  std::string name;
  std::size_t d = 1;
  std::size_t l = 1;
  Kernel f;
  Kernel f_sigma;
  Coefficient u;
  Coefficient b;
  Coefficient sigma;
  ModelConstants constants;
  /// Term expressions for config-defined models, keyed by coefficient name; empty for built-ins.
  std::map<std::string, std::string> expressions;

  /// Checks that every component agrees on d and l; throws DimensionMismatch.
  void validate() const;
};

/// Names accepted by builtin_model.
const std::vector<std::string>& builtin_model_names();

/// Coefficient sets of the reference experiments:
/// double-well, invariant, vdp2d, supermeasure-case1, supermeasure-case2, poc-dd, plus
/// ou-linear (v = -x, b = 0, sigma = 1) used as an analytic test model.
Model builtin_model(const std::string& name, std::size_t d);

/// zeta = max{2(L_f1 + L_us1), 2(2 max(L_f1,0) + L_us1 + L_us2), 0}.
double compute_zeta(const ModelConstants& constants);

/// Upper end of the admissible stepsize interval: min{1, 1/zeta} (1 when zeta = 0).
double max_stepsize(const ModelConstants& constants);

/// Builds a model from term expressions (see terms.cpp for the grammar). Keys:
/// f, f_sigma, u, b, sigma; missing keys are zero.
Model model_from_expressions(const std::string& name, std::size_t d, std::size_t l,
                             const std::map<std::string, std::string>& expressions,
                             const ModelConstants& constants);

Kernel parse_kernel(const std::string& expression, std::size_t d, std::size_t cols);
Coefficient parse_coefficient(const std::string& expression, std::size_t d, std::size_t cols);

}  // namespace splitstep
