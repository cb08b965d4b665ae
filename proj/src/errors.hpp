#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hilferstab {

/// Error taxonomy shared by all modules. Every failure mode that crosses a
/// module boundary is one of these; the C API maps them onto status codes.
enum class ErrorCode {
  InvalidArgument,
  Syntax,
  UnknownFunction,
  UnboundVariable,
  SeriesDivergence,
  QuadratureFailure,
  NonFinite,
  NonMonotonePsi,
  GridTooCoarse,
  MeshMismatch,
  NoConvergence,
  TruncationInconclusive,
  PhiConditionViolated,
  SampleNotGBounded,
  RescaleFailure,
  ConfigError,
  IoError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct SyntaxError : Error {
  SyntaxError(std::size_t position, std::string expected)
      : Error(ErrorCode::Syntax,
              "syntax error at offset " + std::to_string(position) +
                  ": expected " + expected),
        position(position),
        expected(std::move(expected)) {}
  std::size_t position;
  std::string expected;
};

struct UnknownFunctionError : Error {
  explicit UnknownFunctionError(std::string name, std::size_t position)
      : Error(ErrorCode::UnknownFunction, "unknown function '" + name + "'"),
        name(std::move(name)),
        position(position) {}
  std::string name;
  std::size_t position;
};

struct UnboundVariableError : Error {
  explicit UnboundVariableError(std::string name)
      : Error(ErrorCode::UnboundVariable, "unbound variable '" + name + "'"),
        name(std::move(name)) {}
  std::string name;
};

struct SeriesDivergenceError : Error {
  SeriesDivergenceError(std::string what, double argument)
      : Error(ErrorCode::SeriesDivergence, std::move(what)), argument(argument) {}
  double argument;
};

struct NoConvergenceError : Error {
  NoConvergenceError(double last_delta, double ratio, int iterations)
      : Error(ErrorCode::NoConvergence,
              "fixed-point iteration did not converge after " +
                  std::to_string(iterations) + " iterations (last delta " +
                  std::to_string(last_delta) + ", contraction ratio " +
                  std::to_string(ratio) + ")"),
        last_delta(last_delta),
        ratio(ratio),
        iterations(iterations) {}
  double last_delta;
  double ratio;
  int iterations;
};

struct PhiConditionError : Error {
  PhiConditionError(std::size_t node, double t, double integral, double bound)
      : Error(ErrorCode::PhiConditionViolated,
              "phi envelope condition violated at node " + std::to_string(node) +
                  " (t=" + std::to_string(t) + "): integral " +
                  std::to_string(integral) + " > K*phi = " + std::to_string(bound)),
        node(node) {}
  std::size_t node;
};

struct ConfigError : Error {
  ConfigError(std::string key, std::string what)
      : Error(ErrorCode::ConfigError, "config error: " + key + ": " + what),
        key(std::move(key)) {}
  std::string key;
};

}  // namespace hilferstab
