#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace splitstep {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownModel : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class MissingConstant : public Error {
 public:
  using Error::Error;
};

/// A non-finite value appeared in a sum, a stage or a step.
class NonFinite : public Error {
 public:
  using Error::Error;
};

class SizeMismatch : public Error {
 public:
  using Error::Error;
};

/// Coarse stepsize is not an integer multiple of the lattice's fine stepsize.
class NonCommensurate : public Error {
 public:
  using Error::Error;
};

class ShrinkNotAllowed : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  NonConvergence(double residual, int iterations)
      : Error("implicit stage did not converge: residual " + std::to_string(residual) +
              " after " + std::to_string(iterations) + " iterations"),
        residual_(residual),
        iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

class LineageMismatch : public Error {
 public:
  using Error::Error;
};

class CouplingViolation : public Error {
 public:
  using Error::Error;
};

class DegenerateFit : public Error {
 public:
  using Error::Error;
};

class ConfigInvalid : public Error {
 public:
  ConfigInvalid(std::string field, const std::string& message, int line = 0)
      : Error(format(field, message, line)), field_(std::move(field)), message_(message), line_(line) {}

  const std::string& field() const noexcept { return field_; }
  const std::string& message() const noexcept { return message_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& field, const std::string& message, int line) {
    std::string out = "invalid config";
    if (line > 0) out += " (line " + std::to_string(line) + ")";
    if (!field.empty()) out += " [" + field + "]";
    return out + ": " + message;
  }

  std::string field_;
  std::string message_;
  int line_;
};

class IoFailure : public Error {
 public:
  using Error::Error;
};

/// A step of a simulation failed; carries the step index where it happened.
class StepFailure : public Error {
 public:
  StepFailure(std::size_t step, double time, const std::string& what, bool non_finite)
      : Error("step " + std::to_string(step) + " (t=" + std::to_string(time) + "): " + what),
        step_(step),
        time_(time),
        non_finite_(non_finite) {}

  std::size_t step() const noexcept { return step_; }
  double time() const noexcept { return time_; }
  bool non_finite() const noexcept { return non_finite_; }

 private:
  std::size_t step_;
  double time_;
  bool non_finite_;
};

}  // namespace splitstep
