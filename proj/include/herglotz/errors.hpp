#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace herglotz {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised by Expr::parse. `offset` is the byte offset into the source text.
struct ParseError : Error {
  enum class Kind { Syntax, UnknownVariable, UnknownFunction };

  ParseError(Kind k, std::size_t off, std::string tok, const std::string& msg)
      : Error(msg), kind(k), offset(off), token(std::move(tok)) {}

  Kind kind;
  std::size_t offset;
  std::string token;  // offending identifier, when applicable
};

/// Raised by Expr::eval: missing bindings and arithmetic domain errors
/// (division by zero, log/sqrt of out-of-domain arguments, ...).
struct EvalError : Error {
  using Error::Error;
};

/// A linear system came out singular or too ill-conditioned to trust.
struct SingularMatrixError : Error {
  explicit SingularMatrixError(const std::string& msg, double cond = 0.0)
      : Error(msg), condition(cond) {}

  double condition;  // estimate, 0 when unavailable
};

/// Newton iteration failed; carries the best iterate seen and its residual.
struct NewtonError : Error {
  NewtonError(const std::string& msg, std::vector<double> best, double residual, int iters)
      : Error(msg), best_iterate(std::move(best)), best_residual(residual), iterations(iters) {}

  std::vector<double> best_iterate;
  double best_residual;
  int iterations;
};

/// An ODE right-hand side failed to evaluate; `time` is the failing stage time.
struct OdeError : Error {
  OdeError(const std::string& msg, double t) : Error(msg), time(t) {}

  double time;
};

/// Dimension or boundary-data mismatch between problem pieces.
struct DimensionError : Error {
  using Error::Error;
};

/// Problem-definition file could not be loaded or validated.
struct ProblemFileError : Error {
  explicit ProblemFileError(const std::string& msg, std::string field = {})
      : Error(msg), field_path(std::move(field)) {}

  std::string field_path;  // e.g. "boundary.x_b"
};

}  // namespace herglotz
