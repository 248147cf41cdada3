#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace splitstep {

struct ParticleState;

/// What a coefficient may see of the measure: empirical moments, never raw particles.
struct MeasureSummary {
  std::vector<double> mean;    // d
  double second_moment = 0.0;  // (1/N) sum |x_i|^2
  double variance = 0.0;       // second_moment - |mean|^2 (trace of the covariance)

  static MeasureSummary dirac(std::span<const double> point);
  static MeasureSummary of(const ParticleState& state);
};

/// Drift- or diffusion-type coefficient (t, x, mu) -> R^(rows x cols).
class Coefficient {
 public:
  using Function =
      std::function<void(double t, std::span<const double> x, const MeasureSummary& mu, std::span<double> out)>;

  Coefficient() = default;
  Coefficient(std::size_t dim, std::size_t cols, Function f, Function jacobian = {},
              std::string description = "callable");

  static Coefficient zero(std::size_t dim, std::size_t cols = 1);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t value_size() const noexcept { return dim_ * cols_; }
  bool is_zero() const noexcept { return !function_; }
  bool has_jacobian() const noexcept { return is_zero() || static_cast<bool>(jacobian_); }

  void evaluate(double t, std::span<const double> x, const MeasureSummary& mu, std::span<double> out) const;
  /// d x d Jacobian with respect to x for vector coefficients; central differences
  /// with step 1e-6 (1 + |x_b|) when no analytic Jacobian is attached.
  void jacobian(double t, std::span<const double> x, const MeasureSummary& mu, std::span<double> out) const;

  const std::string& description() const noexcept { return description_; }

 private:
  std::size_t dim_ = 1;
  std::size_t cols_ = 1;
  Function function_;
  Function jacobian_;
  std::string description_ = "0";
};

}  // namespace splitstep
