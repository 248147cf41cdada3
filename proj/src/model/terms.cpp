// Term grammar for config-defined models.
//
//   expr   := term ('+' term)*
//   term   := name '(' [arg (',' arg)*] ')'
//   arg    := number | '[' row (';' row)* ']' | term
//   row    := number (',' number)*
//
// Kernels:       power_law(c,k)  linear(c) | linear([A])  norm_power(c,k[,[B]])
// Coefficients:  the kernel terms above evaluated at x, plus component_power(c,k),
//                constant(v...) | constant([v]), matrix(c) | matrix([B]), diag(term).

#include <cctype>
#include <cmath>
#include <memory>

#include "splitstep/error.hpp"
#include "splitstep/model.hpp"

namespace splitstep {
namespace {

struct Arg;

struct TermNode {
  std::string name;
  std::vector<Arg> args;
};

struct Arg {
  enum class Kind { number, matrix, term } kind = Kind::number;
  double number = 0.0;
  DenseMatrix matrix;
  std::shared_ptr<TermNode> term;
};

class Parser {
 public:
  Parser(const std::string& text, std::string field) : s_(text), field_(std::move(field)) {}

  std::vector<TermNode> parse_expression() {
    std::vector<TermNode> out;
    skip();
    if (pos_ == s_.size()) fail("empty expression");
    if (s_.compare(pos_, std::string::npos, "0") == 0) return out;
    out.push_back(parse_term());
    skip();
    while (pos_ < s_.size() && s_[pos_] == '+') {
      ++pos_;
      out.push_back(parse_term());
      skip();
    }
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigInvalid(field_, msg + " at offset " + std::to_string(pos_) + " in '" + s_ + "'");
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip();
    return pos_ < s_.size() && s_[pos_] == c;
  }

  void expect(char c) {
    if (!peek(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  TermNode parse_term() {
    skip();
    std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    if (start == pos_) fail("expected a term name");
    TermNode node;
    node.name = s_.substr(start, pos_ - start);
    expect('(');
    if (!peek(')')) {
      node.args.push_back(parse_arg());
      while (peek(',')) {
        ++pos_;
        node.args.push_back(parse_arg());
      }
    }
    expect(')');
    return node;
  }

  double parse_number() {
    skip();
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) fail("expected a number");
    pos_ += static_cast<std::size_t>(end - begin);
    return v;
  }

  Arg parse_arg() {
    skip();
    Arg a;
    if (peek('[')) {
      ++pos_;
      std::vector<std::vector<double>> rows(1);
      rows.back().push_back(parse_number());
      while (true) {
        if (peek(',')) {
          ++pos_;
          rows.back().push_back(parse_number());
        } else if (peek(';')) {
          ++pos_;
          rows.emplace_back();
          rows.back().push_back(parse_number());
        } else {
          break;
        }
      }
      expect(']');
      std::size_t cols = rows.front().size();
      std::vector<double> vals;
      for (auto& r : rows) {
        if (r.size() != cols) fail("ragged matrix literal");
        vals.insert(vals.end(), r.begin(), r.end());
      }
      a.kind = Arg::Kind::matrix;
      a.matrix = DenseMatrix(rows.size(), cols, std::move(vals));
      return a;
    }
    if (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) {
      a.kind = Arg::Kind::term;
      a.term = std::make_shared<TermNode>(parse_term());
      return a;
    }
    a.number = parse_number();
    return a;
  }

  std::string s_;
  std::string field_;
  std::size_t pos_ = 0;
};

double number_arg(const TermNode& t, std::size_t i, const std::string& field) {
  if (i >= t.args.size() || t.args[i].kind != Arg::Kind::number)
    throw ConfigInvalid(field, t.name + ": argument " + std::to_string(i + 1) + " must be a number");
  return t.args[i].number;
}

void arity(const TermNode& t, std::size_t lo, std::size_t hi, const std::string& field) {
  if (t.args.size() < lo || t.args.size() > hi)
    throw ConfigInvalid(field, t.name + ": wrong number of arguments");
}

DenseMatrix square_or_scalar(const TermNode& t, std::size_t d, const std::string& field) {
  arity(t, 1, 1, field);
  if (t.args[0].kind == Arg::Kind::number) return DenseMatrix::scaled_identity(d, t.args[0].number);
  if (t.args[0].kind != Arg::Kind::matrix || t.args[0].matrix.rows != d || t.args[0].matrix.cols != d)
    throw ConfigInvalid(field, t.name + ": expected a scalar or a " + std::to_string(d) + "x" + std::to_string(d) +
                                   " matrix");
  return t.args[0].matrix;
}

DenseMatrix default_shape(std::size_t d, std::size_t cols, const std::string& field, const std::string& name) {
  if (d == cols) return DenseMatrix::identity(d);
  if (cols == 1 && d == 1) return DenseMatrix::identity(1);
  throw ConfigInvalid(field, name + ": shape matrix required when d != cols");
}

Kernel build_kernel_term(const TermNode& t, std::size_t d, std::size_t cols, const std::string& field) {
  if (t.name == "power_law") {
    arity(t, 2, 2, field);
    if (cols != 1) throw ConfigInvalid(field, "power_law is vector-valued (cols must be 1)");
    return Kernel::power_law(d, number_arg(t, 0, field), number_arg(t, 1, field));
  }
  if (t.name == "linear") {
    if (cols != 1) throw ConfigInvalid(field, "linear is vector-valued (cols must be 1)");
    Kernel k = Kernel::linear(square_or_scalar(t, d, field));
    return k;
  }
  if (t.name == "norm_power") {
    arity(t, 2, 3, field);
    DenseMatrix shape = t.args.size() == 3 && t.args[2].kind == Arg::Kind::matrix
                            ? t.args[2].matrix
                            : default_shape(d, cols, field, t.name);
    if (shape.rows != d || shape.cols != cols) throw ConfigInvalid(field, "norm_power: shape must be d x cols");
    return Kernel::radial(d, number_arg(t, 0, field), number_arg(t, 1, field), shape);
  }
  throw ConfigInvalid(field, "unknown kernel term '" + t.name + "'");
}

// A coefficient term accumulates its value (and, for vectors, its Jacobian) into out.
struct CoefTerm {
  std::function<void(std::span<const double>, std::span<double>)> add_value;
  std::function<void(std::span<const double>, std::span<double>)> add_jacobian;
};

CoefTerm build_coef_term(const TermNode& t, std::size_t d, std::size_t cols, const std::string& field);

CoefTerm from_kernel(Kernel k) {
  const std::size_t vs = k.value_size(), jd = k.dim() * k.dim();
  const bool vec = k.cols() == 1;
  CoefTerm ct;
  ct.add_value = [k, vs](std::span<const double> x, std::span<double> out) {
    std::vector<double> tmp(vs);
    k.evaluate(x, tmp);
    for (std::size_t i = 0; i < vs; ++i) out[i] += tmp[i];
  };
  if (vec) {
    ct.add_jacobian = [k, jd](std::span<const double> x, std::span<double> out) {
      std::vector<double> tmp(jd);
      k.jacobian(x, tmp);
      for (std::size_t i = 0; i < jd; ++i) out[i] += tmp[i];
    };
  }
  return ct;
}

CoefTerm build_coef_term(const TermNode& t, std::size_t d, std::size_t cols, const std::string& field) {
  if (t.name == "power_law" || t.name == "linear" || t.name == "norm_power")
    return from_kernel(build_kernel_term(t, d, cols, field));
  if (t.name == "component_power") {
    arity(t, 2, 2, field);
    if (cols != 1) throw ConfigInvalid(field, "component_power is vector-valued");
    const double c = number_arg(t, 0, field), k = number_arg(t, 1, field);
    CoefTerm ct;
    ct.add_value = [c, k](std::span<const double> x, std::span<double> out) {
      for (std::size_t i = 0; i < x.size(); ++i) out[i] += c * x[i] * abs_pow(std::fabs(x[i]), k - 1.0);
    };
    ct.add_jacobian = [c, k](std::span<const double> x, std::span<double> out) {
      const std::size_t n = x.size();
      for (std::size_t i = 0; i < n; ++i) out[i * n + i] += c * k * abs_pow(std::fabs(x[i]), k - 1.0);
    };
    return ct;
  }
  if (t.name == "constant" || t.name == "matrix") {
    DenseMatrix value;
    if (t.args.size() == 1 && t.args[0].kind == Arg::Kind::matrix) {
      value = t.args[0].matrix;
    } else if (t.name == "matrix" && t.args.size() == 1) {
      value = default_shape(d, cols, field, t.name);
      for (auto& v : value.values) v *= number_arg(t, 0, field);
    } else {
      std::vector<double> vals;
      for (std::size_t i = 0; i < t.args.size(); ++i) vals.push_back(number_arg(t, i, field));
      value = DenseMatrix(vals.size(), 1, vals);
    }
    if (value.values.size() != d * cols)
      throw ConfigInvalid(field, t.name + ": expected " + std::to_string(d * cols) + " entries");
    CoefTerm ct;
    ct.add_value = [value](std::span<const double>, std::span<double> out) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += value.values[i];
    };
    if (cols == 1) ct.add_jacobian = [](std::span<const double>, std::span<double>) {};
    return ct;
  }
  if (t.name == "diag") {
    arity(t, 1, 1, field);
    if (t.args[0].kind != Arg::Kind::term) throw ConfigInvalid(field, "diag expects a vector term");
    if (cols != d) throw ConfigInvalid(field, "diag needs a square (d x d) coefficient");
    CoefTerm inner = build_coef_term(*t.args[0].term, d, 1, field);
    CoefTerm ct;
    ct.add_value = [inner, d](std::span<const double> x, std::span<double> out) {
      std::vector<double> v(d, 0.0);
      inner.add_value(x, v);
      for (std::size_t i = 0; i < d; ++i) out[i * d + i] += v[i];
    };
    return ct;
  }
  throw ConfigInvalid(field, "unknown coefficient term '" + t.name + "'");
}

}  // namespace

Kernel parse_kernel(const std::string& expression, std::size_t d, std::size_t cols) {
  Parser p(expression, "kernel");
  Kernel k = Kernel::zero(d, cols);
  for (const auto& t : p.parse_expression()) k += build_kernel_term(t, d, cols, "kernel");
  return k;
}

Coefficient parse_coefficient(const std::string& expression, std::size_t d, std::size_t cols) {
  Parser p(expression, "coefficient");
  auto nodes = p.parse_expression();
  if (nodes.empty()) return Coefficient::zero(d, cols);
  std::vector<CoefTerm> terms;
  bool all_jac = cols == 1;
  for (const auto& t : nodes) {
    terms.push_back(build_coef_term(t, d, cols, "coefficient"));
    if (!terms.back().add_jacobian) all_jac = false;
  }
  Coefficient::Function f = [terms](double, std::span<const double> x, const MeasureSummary&, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& t : terms) t.add_value(x, out);
  };
  Coefficient::Function jac;
  if (all_jac) {
    jac = [terms](double, std::span<const double> x, const MeasureSummary&, std::span<double> out) {
      std::fill(out.begin(), out.end(), 0.0);
      for (const auto& t : terms) t.add_jacobian(x, out);
    };
  }
  return Coefficient(d, cols, std::move(f), std::move(jac), expression);
}

Model model_from_expressions(const std::string& name, std::size_t d, std::size_t l,
                             const std::map<std::string, std::string>& expressions,
                             const ModelConstants& constants) {
  auto get = [&](const char* key) -> std::string {
    auto it = expressions.find(key);
    return it == expressions.end() ? "0" : it->second;
  };
  for (const auto& [key, value] : expressions) {
    if (key != "f" && key != "f_sigma" && key != "u" && key != "b" && key != "sigma")
      throw ConfigInvalid("model." + key, "unknown coefficient name");
  }
  auto wrap = [](const char* key, auto&& fn) {
    try {
      return fn();
    } catch (const ConfigInvalid& e) {
      throw ConfigInvalid(std::string("model.") + key, e.what());
    } catch (const DimensionMismatch& e) {
      throw ConfigInvalid(std::string("model.") + key, e.what());
    }
  };
  Model m;
  m.name = name;
  m.d = d;
  m.l = l;
  m.f = wrap("f", [&] { return parse_kernel(get("f"), d, 1); });
  m.f_sigma = wrap("f_sigma", [&] { return parse_kernel(get("f_sigma"), d, l); });
  m.u = wrap("u", [&] { return parse_coefficient(get("u"), d, 1); });
  m.b = wrap("b", [&] { return parse_coefficient(get("b"), d, 1); });
  m.sigma = wrap("sigma", [&] { return parse_coefficient(get("sigma"), d, l); });
  m.constants = constants;
  m.expressions = expressions;
  m.validate();
  return m;
}

}  // namespace splitstep
