#include "splitstep/kernel.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "splitstep/error.hpp"

namespace splitstep {

DenseMatrix::DenseMatrix(std::size_t r, std::size_t c, std::vector<double> v)
    : rows(r), cols(c), values(std::move(v)) {
  if (values.size() != r * c) throw DimensionMismatch("matrix storage does not match its shape");
}

DenseMatrix DenseMatrix::zeros(std::size_t r, std::size_t c) {
  return DenseMatrix(r, c, std::vector<double>(r * c, 0.0));
}

DenseMatrix DenseMatrix::identity(std::size_t n) { return scaled_identity(n, 1.0); }

DenseMatrix DenseMatrix::scaled_identity(std::size_t n, double c) {
  DenseMatrix m = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = c;
  return m;
}

double DenseMatrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

double abs_pow(double norm, double p) {
  if (p == 0.0) return 1.0;
  if (norm == 0.0) return p > 0.0 ? 0.0 : INFINITY;
  double ip;
  if (std::modf(p, &ip) == 0.0 && std::fabs(p) <= 16.0) {
    int n = static_cast<int>(ip);
    bool neg = n < 0;
    n = neg ? -n : n;
    double r = 1.0, b = norm;
    while (n) {
      if (n & 1) r *= b;
      b *= b;
      n >>= 1;
    }
    return neg ? 1.0 / r : r;
  }
  return std::pow(norm, p);
}

namespace {

std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double norm_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

Kernel::Kernel(std::size_t dim, std::size_t cols) : dim_(dim), cols_(cols) {
  if (dim == 0 || cols == 0) throw DimensionMismatch("kernel dimensions must be positive");
}

Kernel Kernel::zero(std::size_t dim, std::size_t cols) { return Kernel(dim, cols); }

Kernel Kernel::power_law(std::size_t dim, double coeff, double exponent) {
  if (exponent < 1.0) throw DimensionMismatch("power-law exponent must be >= 1");
  if (exponent == 1.0) {
    Kernel k = linear(dim, coeff);
    k.description_ = "power_law(" + fmt_num(coeff) + ",1)";
    return k;
  }
  Kernel k(dim, 1);
  k.power_.push_back({coeff, exponent});
  k.declared_odd_ = true;
  k.declared_symmetry_ = coeff <= 0.0 || dim == 1;
  k.description_ = "power_law(" + fmt_num(coeff) + "," + fmt_num(exponent) + ")";
  return k;
}

Kernel Kernel::linear(DenseMatrix a) {
  if (a.rows != a.cols) throw DimensionMismatch("linear kernel needs a square matrix");
  Kernel k(a.rows, 1);
  bool scaled_identity = true;
  for (std::size_t r = 0; r < a.rows; ++r)
    for (std::size_t c = 0; c < a.cols; ++c)
      if ((r == c && a(r, c) != a(0, 0)) || (r != c && a(r, c) != 0.0)) scaled_identity = false;
  k.declared_odd_ = true;
  k.declared_symmetry_ = scaled_identity || a.rows == 1;
  std::string desc = "linear(";
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (i) desc += (i % a.cols == 0) ? ";" : ",";
    desc += fmt_num(a.values[i]);
  }
  k.description_ = desc + ")";
  k.linear_ = std::move(a);
  return k;
}

Kernel Kernel::linear(std::size_t dim, double coeff) {
  Kernel k = linear(DenseMatrix::scaled_identity(dim, coeff));
  k.description_ = "linear(" + fmt_num(coeff) + ")";
  return k;
}

Kernel Kernel::radial(std::size_t dim, double coeff, double exponent, DenseMatrix shape) {
  if (exponent <= 0.0) throw DimensionMismatch("radial exponent must be > 0 (kernel must vanish at 0)");
  if (shape.rows != dim) throw DimensionMismatch("radial shape matrix must have d rows");
  Kernel k(dim, shape.cols);
  std::string desc = "norm_power(" + fmt_num(coeff) + "," + fmt_num(exponent) + ")";
  k.radial_.push_back({coeff, exponent, std::move(shape)});
  k.declared_odd_ = false;
  k.declared_symmetry_ = false;
  k.description_ = desc;
  return k;
}

Kernel Kernel::from_function(std::size_t dim, std::size_t cols, Function f, Function jacobian,
                             bool declared_odd) {
  Kernel k(dim, cols);
  k.function_ = std::move(f);
  k.function_jacobian_ = std::move(jacobian);
  k.declared_odd_ = declared_odd;
  k.declared_symmetry_ = declared_odd && dim == 1;
  k.description_ = "callable";
  return k;
}

Kernel& Kernel::operator+=(const Kernel& other) {
  if (other.dim_ != dim_ || other.cols_ != cols_) throw DimensionMismatch("kernel shapes differ in sum");
  if (other.is_zero()) return *this;
  if (is_zero()) {
    *this = other;
    return *this;
  }
  std::string desc = description_ + " + " + other.description_;
  bool odd = declared_odd_ && other.declared_odd_;
  bool sym = declared_symmetry_ && other.declared_symmetry_;
  if (is_callable() || other.is_callable()) {
    Kernel a = *this;
    Kernel b = other;
    std::size_t vs = value_size();
    Function f = [a, b, vs](std::span<const double> x, std::span<double> out) {
      std::vector<double> tmp(vs);
      a.evaluate(x, out);
      b.evaluate(x, tmp);
      for (std::size_t i = 0; i < vs; ++i) out[i] += tmp[i];
    };
    Function jac;
    if (a.has_jacobian() && b.has_jacobian() && cols_ == 1) {
      std::size_t d = dim_;
      jac = [a, b, d](std::span<const double> x, std::span<double> out) {
        std::vector<double> tmp(d * d);
        a.jacobian(x, out);
        b.jacobian(x, tmp);
        for (std::size_t i = 0; i < d * d; ++i) out[i] += tmp[i];
      };
    }
    Kernel k = from_function(dim_, cols_, std::move(f), std::move(jac), odd);
    *this = std::move(k);
  } else {
    power_.insert(power_.end(), other.power_.begin(), other.power_.end());
    if (!other.linear_.values.empty()) {
      if (linear_.values.empty()) {
        linear_ = other.linear_;
      } else {
        for (std::size_t i = 0; i < linear_.values.size(); ++i) linear_.values[i] += other.linear_.values[i];
      }
    }
    radial_.insert(radial_.end(), other.radial_.begin(), other.radial_.end());
  }
  declared_odd_ = odd;
  declared_symmetry_ = sym;
  description_ = desc;
  return *this;
}

bool Kernel::is_zero() const noexcept {
  return !function_ && power_.empty() && linear_.values.empty() && radial_.empty();
}

bool Kernel::has_jacobian() const noexcept {
  if (function_) return static_cast<bool>(function_jacobian_);
  return true;
}

void Kernel::evaluate(std::span<const double> x, std::span<double> out) const {
  if (x.size() != dim_ || out.size() != value_size()) throw DimensionMismatch("kernel evaluate: bad spans");
  if (function_) {
    function_(x, out);
    return;
  }
  std::fill(out.begin(), out.end(), 0.0);
  const double r = norm_of(x);
  if (cols_ == 1) {
    for (const auto& t : power_) {
      const double w = t.coeff * abs_pow(r, t.exponent - 1.0);
      for (std::size_t a = 0; a < dim_; ++a) out[a] += w * x[a];
    }
    if (!linear_.values.empty()) {
      for (std::size_t a = 0; a < dim_; ++a)
        for (std::size_t b = 0; b < dim_; ++b) out[a] += linear_(a, b) * x[b];
    }
  }
  for (const auto& t : radial_) {
    const double s = t.coeff * abs_pow(r, t.exponent);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * t.shape.values[i];
  }
}

void Kernel::jacobian(std::span<const double> x, std::span<double> out) const {
  if (cols_ != 1) throw DimensionMismatch("jacobian is defined for vector kernels only");
  if (x.size() != dim_ || out.size() != dim_ * dim_) throw DimensionMismatch("kernel jacobian: bad spans");
  if (function_) {
    if (function_jacobian_) {
      function_jacobian_(x, out);
      return;
    }
    // central differences
    std::vector<double> xp(x.begin(), x.end()), fp(dim_), fm(dim_);
    for (std::size_t b = 0; b < dim_; ++b) {
      const double step = 1e-6 * (1.0 + std::fabs(x[b]));
      xp[b] = x[b] + step;
      function_(xp, fp);
      xp[b] = x[b] - step;
      function_(xp, fm);
      xp[b] = x[b];
      for (std::size_t a = 0; a < dim_; ++a) out[a * dim_ + b] = (fp[a] - fm[a]) / (2.0 * step);
    }
    return;
  }
  std::fill(out.begin(), out.end(), 0.0);
  const double r = norm_of(x);
  for (const auto& t : power_) {
    const double w = t.coeff * abs_pow(r, t.exponent - 1.0);
    const double g = r > 0.0 ? t.coeff * (t.exponent - 1.0) * abs_pow(r, t.exponent - 3.0) : 0.0;
    for (std::size_t a = 0; a < dim_; ++a) {
      out[a * dim_ + a] += w;
      for (std::size_t b = 0; b < dim_; ++b) out[a * dim_ + b] += g * x[a] * x[b];
    }
  }
  if (!linear_.values.empty())
    for (std::size_t i = 0; i < dim_ * dim_; ++i) out[i] += linear_.values[i];
  for (const auto& t : radial_) {
    const double g = r > 0.0 ? t.coeff * t.exponent * abs_pow(r, t.exponent - 2.0) : 0.0;
    for (std::size_t a = 0; a < dim_; ++a)
      for (std::size_t b = 0; b < dim_; ++b) out[a * dim_ + b] += g * t.shape.values[a] * x[b];
  }
}

}  // namespace splitstep
