#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace hilferstab::expr {

/// Set when evaluation wanders outside a function's domain (log of a
/// non-positive value and friends). The result is NaN, never a throw.
struct EvalFlags {
  bool domain_error = false;
};

enum class NodeKind : std::uint8_t {
  Number,
  Variable,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Neg,
  Call,
};

enum class Builtin : std::uint8_t { Exp, Log, Sin, Cos, Sqrt, Abs, Pow, Min, Max };

/// Immutable arithmetic AST. Nodes are value types held in a flat vector;
/// `root` indexes into `nodes`. Safe to share across threads once built.
class Expression {
 public:
  struct Node {
    NodeKind kind;
    double number = 0.0;          // Number
    std::string name;             // Variable
    Builtin builtin = Builtin::Exp;  // Call
    std::vector<std::uint32_t> args;  // operands / call arguments
  };

  const std::vector<Node>& nodes() const { return nodes_; }
  std::uint32_t root() const { return root_; }

  /// Free variables in first-appearance order.
  std::vector<std::string> variables() const;

  /// Infix form that reparses to an identical AST.
  std::string pretty() const;

  /// Evaluates with variables bound by name. Throws UnboundVariable; domain
  /// faults surface as NaN with flags->domain_error set.
  double eval(const std::map<std::string, double>& bindings,
              EvalFlags* flags = nullptr) const;

  bool operator==(const Expression& other) const;

 private:
  friend Expression parse_expr(const std::string& source);
  friend class Parser;
  std::vector<Node> nodes_;
  std::uint32_t root_ = 0;
};

/// Parses the grammar
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := unary ('^' factor)?
///   unary  := '-' unary | primary
///   primary:= NUMBER | IDENT | IDENT '(' expr (',' expr)* ')' | '(' expr ')'
/// Throws SyntaxError{position, expected} / UnknownFunction{name}.
Expression parse_expr(const std::string& source);

/// Expression bound to a fixed variable layout for fast repeated evaluation.
/// Binding checks that every variable of the expression is declared in the
/// scope (UnboundVariable otherwise); evaluation then reads a value span.
class BoundExpression {
 public:
  BoundExpression() = default;
  BoundExpression(Expression e, const std::vector<std::string>& scope);

  /// values[i] holds the value of scope[i] passed at construction.
  double operator()(const double* values, EvalFlags* flags = nullptr) const;
  bool valid() const { return !expr_.nodes().empty(); }

 private:
  double eval_node(std::uint32_t id, const double* values, EvalFlags* flags) const;
  Expression expr_;
  std::vector<std::int32_t> slots_;  // per node: variable slot, else -1
};

}  // namespace hilferstab::expr
