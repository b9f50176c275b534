#ifndef REFLEQ_ERRORS_HPP
#define REFLEQ_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace refleq {

/// Base class for all refleq failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Syntax error while parsing an expression. Carries the byte offset of the
/// failure and the set of tokens that would have been accepted there.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset,
             std::vector<std::string> expected)
      : Error(what), offset_(offset), expected_(std::move(expected)) {}

  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

/// Runtime evaluation failure (unbound variable, domain error). The offset
/// points at the offending node in the original source text.
class EvalError : public Error {
 public:
  EvalError(const std::string& what, std::size_t offset)
      : Error(what), offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Quadrature did not meet its tolerance, or a truncation certificate was
/// unusable.
class QuadratureError : public Error {
 public:
  using Error::Error;
};

/// Grid mismatch or malformed GridFunction input.
class GridError : public Error {
 public:
  using Error::Error;
};

/// Configuration problems. `invariant` distinguishes semantic violations
/// (exit code 1) from file/syntax problems (exit code 3).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, bool invariant = false)
      : Error(what), invariant_(invariant) {}

  bool invariant() const { return invariant_; }

 private:
  bool invariant_ = false;
};

}  // namespace refleq

#endif  // REFLEQ_ERRORS_HPP
