#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace splitstep {

/// Small dense row-major matrix.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, std::vector<double> v);

  static DenseMatrix zeros(std::size_t r, std::size_t c);
  static DenseMatrix identity(std::size_t n);
  static DenseMatrix scaled_identity(std::size_t n, double c);

  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double frobenius_norm() const;
};

/// c * x * |x|^(k-1); odd, vector-valued.
struct PowerLawTerm {
  double coeff = 0.0;
  double exponent = 1.0;
};

/// c * |x|^k * B with B a fixed d x cols matrix; even.
struct RadialTerm {
  double coeff = 0.0;
  double exponent = 1.0;
  DenseMatrix shape;
};

/// Interaction kernel f: R^d -> R^(d x cols), convolved against the empirical measure.
///
/// Kernels are sums of primitive terms (power law, linear, radial) so that the pair
/// sums can be compiled into SIMD loops. An arbitrary callable is also accepted; it
/// is evaluated through the scalar path only.
class Kernel {
 public:
  using Function = std::function<void(std::span<const double> x, std::span<double> out)>;

  Kernel() = default;
  Kernel(std::size_t dim, std::size_t cols);

  static Kernel zero(std::size_t dim, std::size_t cols = 1);
  static Kernel power_law(std::size_t dim, double coeff, double exponent);
  static Kernel linear(DenseMatrix a);
  static Kernel linear(std::size_t dim, double coeff);
  static Kernel radial(std::size_t dim, double coeff, double exponent, DenseMatrix shape);
  /// Jacobian may be empty; callers then fall back to central differences.
  static Kernel from_function(std::size_t dim, std::size_t cols, Function f, Function jacobian = {},
                              bool declared_odd = false);

  Kernel& operator+=(const Kernel& other);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t value_size() const noexcept { return dim_ * cols_; }

  bool is_zero() const noexcept;
  bool is_callable() const noexcept { return static_cast<bool>(function_); }
  bool has_vector_part() const noexcept { return !power_.empty() || !linear_.values.empty(); }
  bool has_radial_part() const noexcept { return !radial_.empty(); }

  const std::vector<PowerLawTerm>& power_terms() const noexcept { return power_; }
  /// Sum of all linear terms (d x d), empty when there are none.
  const DenseMatrix& linear_part() const noexcept { return linear_; }
  const std::vector<RadialTerm>& radial_terms() const noexcept { return radial_; }

  void evaluate(std::span<const double> x, std::span<double> out) const;
  /// d x d Jacobian of a vector kernel (cols == 1).
  void jacobian(std::span<const double> x, std::span<double> out) const;
  bool has_jacobian() const noexcept;

  bool declared_odd() const noexcept { return declared_odd_; }
  bool declared_additional_symmetry() const noexcept { return declared_symmetry_; }
  void set_declared_odd(bool v) noexcept { declared_odd_ = v; }
  void set_declared_additional_symmetry(bool v) noexcept { declared_symmetry_ = v; }

  /// Human-readable composition, e.g. "power_law(-1,3)".
  const std::string& description() const noexcept { return description_; }
  void set_description(std::string s) { description_ = std::move(s); }

 private:
  std::size_t dim_ = 1;
  std::size_t cols_ = 1;
  std::vector<PowerLawTerm> power_;
  DenseMatrix linear_;
  std::vector<RadialTerm> radial_;
  Function function_;
  Function function_jacobian_;
  bool declared_odd_ = true;
  bool declared_symmetry_ = true;
  std::string description_ = "0";
};

/// |x|^p for p real, with |0|^p = 0 for p > 0 and 1 for p == 0.
double abs_pow(double norm, double p);

}  // namespace splitstep
