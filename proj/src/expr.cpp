#include "refleq/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace refleq {

struct Expression::Op {
  enum class Code : std::uint8_t {
    push_lit, push_var, neg,
    add, sub, mul, div, pow,
    f_sin, f_cos, f_tan, f_tanh, f_exp, f_ln, f_sqrt, f_abs, f_sign,
    f_min, f_max
  };
  Code code;
  std::uint16_t slot = 0;   // variable index for push_var
  std::uint32_t offset = 0; // source byte offset, for diagnostics
  double value = 0.0;       // literal for push_lit
};

namespace {

using Node = Expression::Node;
using Func = Expression::Func;
using BinaryOp = Expression::BinaryOp;

struct FuncInfo {
  const char* name;
  Func func;
  int arity;
};

constexpr FuncInfo kFuncs[] = {
    {"sin", Func::sin, 1},   {"cos", Func::cos, 1},   {"tan", Func::tan, 1},
    {"tanh", Func::tanh, 1}, {"exp", Func::exp, 1},   {"ln", Func::ln, 1},
    {"sqrt", Func::sqrt, 1}, {"abs", Func::abs, 1},   {"sign", Func::sign, 1},
    {"min", Func::min, 2},   {"max", Func::max, 2},
};

const FuncInfo* find_func(std::string_view name) {
  for (const auto& f : kFuncs)
    if (name == f.name) return &f;
  return nullptr;
}

const char* func_name(Func f) {
  for (const auto& fi : kFuncs)
    if (fi.func == f) return fi.name;
  return "?";
}

struct Parser {
  std::string_view src;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < src.size() &&
           (src[pos] == ' ' || src[pos] == '\t' || src[pos] == '\n' ||
            src[pos] == '\r'))
      ++pos;
  }

  bool at_end() {
    skip_ws();
    return pos >= src.size();
  }

  bool accept(char c) {
    skip_ws();
    if (pos < src.size() && src[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(std::vector<std::string> expected) {
    skip_ws();
    std::ostringstream msg;
    msg << "syntax error at byte " << pos << ": ";
    if (pos >= src.size())
      msg << "unexpected end of input";
    else
      msg << "unexpected '" << src[pos] << "'";
    msg << "; expected ";
    for (std::size_t i = 0; i < expected.size(); ++i)
      msg << (i ? ", " : "") << expected[i];
    throw ParseError(msg.str(), pos, std::move(expected));
  }

  Node parse_expr() {
    Node lhs = parse_term();
    for (;;) {
      skip_ws();
      std::size_t at = pos;
      if (accept('+'))
        lhs = binary(BinaryOp::add, std::move(lhs), parse_term(), at);
      else if (accept('-'))
        lhs = binary(BinaryOp::sub, std::move(lhs), parse_term(), at);
      else
        return lhs;
    }
  }

  Node parse_term() {
    Node lhs = parse_factor();
    for (;;) {
      skip_ws();
      std::size_t at = pos;
      if (accept('*'))
        lhs = binary(BinaryOp::mul, std::move(lhs), parse_factor(), at);
      else if (accept('/'))
        lhs = binary(BinaryOp::div, std::move(lhs), parse_factor(), at);
      else
        return lhs;
    }
  }

  // factor := '-' factor | atom ('^' factor)?
  // Exponent recursion makes '^' right-associative; the leading '-' branch
  // makes "-x^2" parse as -(x^2).
  Node parse_factor() {
    skip_ws();
    std::size_t at = pos;
    if (accept('-')) {
      Node n;
      n.kind = Expression::NodeKind::negate;
      n.offset = at;
      n.args.push_back(parse_factor());
      return n;
    }
    Node base = parse_atom();
    skip_ws();
    at = pos;
    if (accept('^'))
      return binary(BinaryOp::pow, std::move(base), parse_factor(), at);
    return base;
  }

  Node parse_atom() {
    skip_ws();
    if (pos >= src.size()) fail({"number", "identifier", "'('", "'-'"});
    char c = src[pos];
    if (c == '(') {
      ++pos;
      Node inner = parse_expr();
      if (!accept(')')) fail({"')'"});
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos + 1 < src.size() &&
         std::isdigit(static_cast<unsigned char>(src[pos + 1]))))
      return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
      return parse_ident();
    fail({"number", "identifier", "'('", "'-'"});
  }

  Node parse_number() {
    std::size_t at = pos;
    std::size_t end = pos;
    while (end < src.size() &&
           std::isdigit(static_cast<unsigned char>(src[end])))
      ++end;
    if (end < src.size() && src[end] == '.') {
      ++end;
      while (end < src.size() &&
             std::isdigit(static_cast<unsigned char>(src[end])))
        ++end;
    }
    if (end < src.size() && (src[end] == 'e' || src[end] == 'E')) {
      std::size_t exp_start = end + 1;
      if (exp_start < src.size() &&
          (src[exp_start] == '+' || src[exp_start] == '-'))
        ++exp_start;
      std::size_t exp_end = exp_start;
      while (exp_end < src.size() &&
             std::isdigit(static_cast<unsigned char>(src[exp_end])))
        ++exp_end;
      if (exp_end > exp_start) end = exp_end;  // else: not an exponent
    }
    double value = 0;
    auto res = std::from_chars(src.data() + at, src.data() + end, value);
    if (res.ec != std::errc() || res.ptr != src.data() + end) {
      pos = at;
      fail({"number"});
    }
    pos = end;
    Node n;
    n.kind = Expression::NodeKind::literal;
    n.literal = value;
    n.offset = at;
    return n;
  }

  Node parse_ident() {
    std::size_t at = pos;
    std::size_t end = pos;
    while (end < src.size() &&
           (std::isalnum(static_cast<unsigned char>(src[end])) ||
            src[end] == '_'))
      ++end;
    std::string name(src.substr(at, end - at));
    pos = end;

    skip_ws();
    if (pos < src.size() && src[pos] == '(') {
      const FuncInfo* fi = find_func(name);
      if (!fi) {
        std::ostringstream msg;
        msg << "unknown function name '" << name << "' at byte " << at;
        throw ParseError(msg.str(), at, {"known function"});
      }
      ++pos;  // '('
      Node n;
      n.kind = Expression::NodeKind::call;
      n.func = fi->func;
      n.offset = at;
      n.args.push_back(parse_expr());
      while (accept(',')) n.args.push_back(parse_expr());
      if (!accept(')')) fail({"')'", "','"});
      if (static_cast<int>(n.args.size()) != fi->arity) {
        std::ostringstream msg;
        msg << "wrong arity for '" << name << "' at byte " << at << ": got "
            << n.args.size() << ", expected " << fi->arity;
        throw ParseError(msg.str(), at, {"argument list"});
      }
      return n;
    }

    // Predefined constants fold to literals.
    if (name == "pi" || name == "e") {
      Node n;
      n.kind = Expression::NodeKind::literal;
      n.literal = (name == "pi") ? M_PI : M_E;
      n.offset = at;
      return n;
    }
    Node n;
    n.kind = Expression::NodeKind::variable;
    n.name = std::move(name);
    n.offset = at;
    return n;
  }

  static Node binary(BinaryOp op, Node lhs, Node rhs, std::size_t at) {
    Node n;
    n.kind = Expression::NodeKind::binary;
    n.op = op;
    n.offset = at;
    n.args.push_back(std::move(lhs));
    n.args.push_back(std::move(rhs));
    return n;
  }
};

void collect_vars(const Node& n, std::vector<std::string>& out) {
  if (n.kind == Expression::NodeKind::variable) {
    for (const auto& v : out)
      if (v == n.name) return;
    out.push_back(n.name);
  }
  for (const auto& a : n.args) collect_vars(a, out);
}

void print_node(const Node& n, std::string& out);

bool is_atom(const Node& n) {
  return n.kind == Expression::NodeKind::literal ||
         n.kind == Expression::NodeKind::variable ||
         n.kind == Expression::NodeKind::call;
}

void print_operand(const Node& n, std::string& out) {
  if (is_atom(n)) {
    print_node(n, out);
  } else {
    out += '(';
    print_node(n, out);
    out += ')';
  }
}

void print_node(const Node& n, std::string& out) {
  switch (n.kind) {
    case Expression::NodeKind::literal: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", n.literal);
      out += buf;
      break;
    }
    case Expression::NodeKind::variable:
      out += n.name;
      break;
    case Expression::NodeKind::negate:
      out += '-';
      print_operand(n.args[0], out);
      break;
    case Expression::NodeKind::binary: {
      static const char* ops = "+-*/^";
      print_operand(n.args[0], out);
      out += ops[static_cast<int>(n.op)];
      print_operand(n.args[1], out);
      break;
    }
    case Expression::NodeKind::call: {
      out += func_name(n.func);
      out += '(';
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) out += ',';
        print_node(n.args[i], out);
      }
      out += ')';
      break;
    }
  }
}

}  // namespace

Expression Expression::parse(std::string_view source) {
  Parser p{source};
  Node root = p.parse_expr();
  if (!p.at_end()) p.fail({"operator", "end of input"});

  Expression e;
  e.source_ = std::string(source);
  std::vector<std::string> vars;
  collect_vars(root, vars);
  e.free_vars_ = std::move(vars);
  e.root_ = std::make_shared<const Node>(std::move(root));
  e.compile();
  return e;
}

void Expression::compile() {
  auto program = std::make_shared<std::vector<Op>>();
  std::size_t depth = 0, max_depth = 0;

  auto emit = [&](Op op, int pops, int pushes) {
    program->push_back(op);
    depth = depth - pops + pushes;
    max_depth = std::max(max_depth, depth);
  };

  auto walk = [&](auto&& self, const Node& n) -> void {
    Op op;
    op.offset = static_cast<std::uint32_t>(n.offset);
    switch (n.kind) {
      case NodeKind::literal:
        op.code = Op::Code::push_lit;
        op.value = n.literal;
        emit(op, 0, 1);
        return;
      case NodeKind::variable: {
        op.code = Op::Code::push_var;
        for (std::size_t i = 0; i < free_vars_.size(); ++i)
          if (free_vars_[i] == n.name) op.slot = static_cast<std::uint16_t>(i);
        emit(op, 0, 1);
        return;
      }
      case NodeKind::negate:
        self(self, n.args[0]);
        op.code = Op::Code::neg;
        emit(op, 1, 1);
        return;
      case NodeKind::binary: {
        self(self, n.args[0]);
        self(self, n.args[1]);
        static const Op::Code codes[] = {Op::Code::add, Op::Code::sub,
                                         Op::Code::mul, Op::Code::div,
                                         Op::Code::pow};
        op.code = codes[static_cast<int>(n.op)];
        emit(op, 2, 1);
        return;
      }
      case NodeKind::call: {
        for (const auto& a : n.args) self(self, a);
        static const Op::Code codes[] = {
            Op::Code::f_sin, Op::Code::f_cos,  Op::Code::f_tan,
            Op::Code::f_tanh, Op::Code::f_exp, Op::Code::f_ln,
            Op::Code::f_sqrt, Op::Code::f_abs, Op::Code::f_sign,
            Op::Code::f_min,  Op::Code::f_max};
        op.code = codes[static_cast<int>(n.func)];
        emit(op, static_cast<int>(n.args.size()), 1);
        return;
      }
    }
  };
  walk(walk, *root_);
  program_ = std::move(program);
  stack_need_ = max_depth;
}

namespace {

double run_program(const std::vector<Expression::Op>& program,
                   std::size_t stack_need,
                   const std::vector<int>* slot_map,
                   const std::vector<double>* slot_constant,
                   std::span<const double> args) {
  using Op = Expression::Op;
  std::array<double, 64> small;
  std::vector<double> big;
  double* stack = small.data();
  if (stack_need > small.size()) {
    big.resize(stack_need);
    stack = big.data();
  }
  std::size_t top = 0;

  auto domain_check = [](double v, const Op& op, const char* what) {
    if (std::isnan(v))
      throw EvalError(std::string("domain error (") + what + ") at byte " +
                          std::to_string(op.offset),
                      op.offset);
    return v;
  };

  for (const Op& op : program) {
    switch (op.code) {
      case Op::Code::push_lit:
        stack[top++] = op.value;
        break;
      case Op::Code::push_var: {
        int idx = op.slot;
        if (slot_map) {
          idx = (*slot_map)[op.slot];
          if (idx < 0) {
            stack[top++] = (*slot_constant)[op.slot];
            break;
          }
        }
        if (static_cast<std::size_t>(idx) >= args.size())
          throw EvalError("unbound variable at byte " +
                              std::to_string(op.offset),
                          op.offset);
        stack[top++] = args[idx];
        break;
      }
      case Op::Code::neg:
        stack[top - 1] = -stack[top - 1];
        break;
      case Op::Code::add:
        --top;
        stack[top - 1] = domain_check(stack[top - 1] + stack[top], op, "nan");
        break;
      case Op::Code::sub:
        --top;
        stack[top - 1] = domain_check(stack[top - 1] - stack[top], op, "nan");
        break;
      case Op::Code::mul:
        --top;
        stack[top - 1] = domain_check(stack[top - 1] * stack[top], op, "nan");
        break;
      case Op::Code::div: {
        --top;
        if (stack[top] == 0.0)
          throw EvalError("division by zero at byte " +
                              std::to_string(op.offset),
                          op.offset);
        stack[top - 1] = stack[top - 1] / stack[top];
        break;
      }
      case Op::Code::pow:
        --top;
        stack[top - 1] =
            domain_check(std::pow(stack[top - 1], stack[top]), op, "'^'");
        break;
      case Op::Code::f_sin:
        stack[top - 1] = std::sin(stack[top - 1]);
        break;
      case Op::Code::f_cos:
        stack[top - 1] = std::cos(stack[top - 1]);
        break;
      case Op::Code::f_tan:
        stack[top - 1] = std::tan(stack[top - 1]);
        break;
      case Op::Code::f_tanh:
        stack[top - 1] = std::tanh(stack[top - 1]);
        break;
      case Op::Code::f_exp:
        stack[top - 1] = std::exp(stack[top - 1]);
        break;
      case Op::Code::f_ln:
        if (stack[top - 1] <= 0.0)
          throw EvalError("ln of non-positive value at byte " +
                              std::to_string(op.offset),
                          op.offset);
        stack[top - 1] = std::log(stack[top - 1]);
        break;
      case Op::Code::f_sqrt:
        if (stack[top - 1] < 0.0)
          throw EvalError("sqrt of negative value at byte " +
                              std::to_string(op.offset),
                          op.offset);
        stack[top - 1] = std::sqrt(stack[top - 1]);
        break;
      case Op::Code::f_abs:
        stack[top - 1] = std::fabs(stack[top - 1]);
        break;
      case Op::Code::f_sign:
        stack[top - 1] =
            (stack[top - 1] > 0.0) ? 1.0 : (stack[top - 1] < 0.0 ? -1.0 : 0.0);
        break;
      case Op::Code::f_min:
        --top;
        stack[top - 1] = std::fmin(stack[top - 1], stack[top]);
        break;
      case Op::Code::f_max:
        --top;
        stack[top - 1] = std::fmax(stack[top - 1], stack[top]);
        break;
    }
  }
  return stack[0];
}

}  // namespace

double Expression::eval(std::span<const double> values) const {
  if (values.size() < free_vars_.size()) {
    // locate the first uncovered variable for the diagnostic
    throw EvalError("unbound variable '" + free_vars_[values.size()] + "'", 0);
  }
  return run_program(*program_, stack_need_, nullptr, nullptr, values);
}

double Expression::eval(const std::map<std::string, double>& bindings) const {
  std::vector<double> values;
  values.reserve(free_vars_.size());
  for (const auto& v : free_vars_) {
    auto it = bindings.find(v);
    if (it == bindings.end()) {
      std::size_t off = 0;
      auto find = [&](auto&& self, const Node& n) -> bool {
        if (n.kind == NodeKind::variable && n.name == v) {
          off = n.offset;
          return true;
        }
        for (const auto& a : n.args)
          if (self(self, a)) return true;
        return false;
      };
      find(find, *root_);
      throw EvalError("unbound variable '" + v + "' at byte " +
                          std::to_string(off),
                      off);
    }
    values.push_back(it->second);
  }
  return eval(values);
}

std::string Expression::str() const {
  std::string out;
  print_node(*root_, out);
  return out;
}

namespace {

bool nodes_equal(const Node& a, const Node& b) {
  if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
  switch (a.kind) {
    case Expression::NodeKind::literal:
      if (a.literal != b.literal) return false;
      break;
    case Expression::NodeKind::variable:
      if (a.name != b.name) return false;
      break;
    case Expression::NodeKind::binary:
      if (a.op != b.op) return false;
      break;
    case Expression::NodeKind::call:
      if (a.func != b.func) return false;
      break;
    case Expression::NodeKind::negate:
      break;
  }
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!nodes_equal(a.args[i], b.args[i])) return false;
  return true;
}

}  // namespace

bool Expression::same_structure(const Expression& other) const {
  return nodes_equal(*root_, *other.root_);
}

bool Expression::is_literal_zero() const {
  return root_->kind == NodeKind::literal && root_->literal == 0.0;
}

CompiledExpr::CompiledExpr(const Expression& e,
                           std::span<const std::string> positional,
                           const std::map<std::string, double>& constants)
    : program_(e.program_), stack_need_(e.stack_need_) {
  const auto& vars = e.free_vars();
  slot_map_.resize(vars.size(), -1);
  slot_constant_.resize(vars.size(), 0.0);
  for (std::size_t i = 0; i < vars.size(); ++i) {
    bool found = false;
    for (std::size_t j = 0; j < positional.size(); ++j) {
      if (positional[j] == vars[i]) {
        slot_map_[i] = static_cast<int>(j);
        found = true;
        break;
      }
    }
    if (found) continue;
    auto it = constants.find(vars[i]);
    if (it == constants.end())
      throw Error("expression uses variable '" + vars[i] +
                  "' which is neither positional nor a bound constant");
    slot_constant_[i] = it->second;
  }
}

double CompiledExpr::operator()(std::span<const double> args) const {
  return run_program(*program_, stack_need_, &slot_map_, &slot_constant_,
                     args);
}

}  // namespace refleq
