#ifndef REFLEQ_EXPR_HPP
#define REFLEQ_EXPR_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "refleq/errors.hpp"

namespace refleq {

/// Parsed arithmetic expression over real variables.
///
/// Grammar:
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := '-' factor | atom ('^' factor)?
///   atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
///
/// '^' is right-associative and "-x^y" parses as -(x^y). Functions:
/// sin cos tan tanh exp ln sqrt abs sign (unary), min max (binary).
/// `pi` and `e` are predefined constants, folded to literals at parse time.
///
/// Expressions are immutable after parse; evaluation is pure and safe to
/// call concurrently.
class Expression {
 public:
  enum class NodeKind : std::uint8_t { literal, variable, negate, binary, call };
  enum class BinaryOp : std::uint8_t { add, sub, mul, div, pow };
  enum class Func : std::uint8_t {
    sin, cos, tan, tanh, exp, ln, sqrt, abs, sign, min, max
  };

  struct Node {
    NodeKind kind;
    double literal = 0.0;
    std::string name;        // variable name
    BinaryOp op = BinaryOp::add;
    Func func = Func::sin;
    std::vector<Node> args;
    std::size_t offset = 0;  // byte offset in the source text
  };

  static Expression parse(std::string_view source);

  /// Variables in first-appearance order. Every variable in the tree is
  /// listed here.
  const std::vector<std::string>& free_vars() const { return free_vars_; }

  /// Evaluate with values given in free_vars() order.
  double eval(std::span<const double> values) const;

  /// Evaluate with named bindings; throws EvalError on an unbound variable.
  double eval(const std::map<std::string, double>& bindings) const;

  /// Stable pretty-printer; parse(str()) is structurally identical to *this.
  std::string str() const;

  const Node& root() const { return *root_; }
  const std::string& source() const { return source_; }

  bool same_structure(const Expression& other) const;

  /// True when the expression is the literal 0 (used for zero kernels).
  bool is_literal_zero() const;

  struct Op;  // postfix program instruction, defined in expr.cpp

 private:
  Expression() = default;

  void compile();

  std::shared_ptr<const Node> root_;
  std::vector<std::string> free_vars_;
  std::string source_;
  std::shared_ptr<const std::vector<Op>> program_;
  std::size_t stack_need_ = 0;

  friend class CompiledExpr;
};

/// Positional evaluator: binds an expression's free variables to argument
/// slots once, so hot loops avoid name lookups. Variables listed in
/// `positional` map to eval arguments by position; everything else must be
/// covered by `constants`.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  CompiledExpr(const Expression& e, std::span<const std::string> positional,
               const std::map<std::string, double>& constants = {});

  double operator()(std::span<const double> args) const;
  double operator()(double a) const { return (*this)(std::span(&a, 1)); }
  double operator()(double a, double b) const {
    const double v[2] = {a, b};
    return (*this)(std::span(v, 2));
  }
  double operator()(double a, double b, double c) const {
    const double v[3] = {a, b, c};
    return (*this)(std::span(v, 3));
  }

  bool valid() const { return program_ != nullptr; }

 private:
  std::shared_ptr<const std::vector<Expression::Op>> program_;
  std::size_t stack_need_ = 0;
  std::vector<int> slot_map_;          // program slot -> argument index, or -1
  std::vector<double> slot_constant_;  // value when slot_map_ is -1
};

}  // namespace refleq

#endif  // REFLEQ_EXPR_HPP
