#include "expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>

#include "errors.hpp"

namespace hilferstab::expr {

namespace {

struct BuiltinInfo {
  const char* name;
  Builtin id;
  int arity;
};

constexpr BuiltinInfo kBuiltins[] = {
    {"exp", Builtin::Exp, 1},  {"log", Builtin::Log, 1},
    {"sin", Builtin::Sin, 1},  {"cos", Builtin::Cos, 1},
    {"sqrt", Builtin::Sqrt, 1}, {"abs", Builtin::Abs, 1},
    {"pow", Builtin::Pow, 2},  {"min", Builtin::Min, 2},
    {"max", Builtin::Max, 2},
};

const BuiltinInfo* find_builtin(const std::string& name) {
  for (const auto& b : kBuiltins)
    if (name == b.name) return &b;
  return nullptr;
}

const char* builtin_name(Builtin b) {
  for (const auto& info : kBuiltins)
    if (info.id == b) return info.name;
  return "?";
}

}  // namespace

class Parser {
 public:
  explicit Parser(const std::string& src) : src_(src) {}

  Expression run() {
    Expression e;
    nodes_ = &e.nodes_;
    e.root_ = parse_sum();
    skip_ws();
    if (pos_ != src_.size()) throw SyntaxError(pos_, "end of input");
    nodes_ = nullptr;
    return e;
  }

 private:
  std::uint32_t add(Expression::Node n) {
    nodes_->push_back(std::move(n));
    return static_cast<std::uint32_t>(nodes_->size() - 1);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < src_.size() && src_[pos_] == c;
  }

  bool accept(char c) {
    if (peek(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::uint32_t parse_sum() {
    std::uint32_t lhs = parse_term();
    for (;;) {
      if (accept('+'))
        lhs = add({NodeKind::Add, 0.0, {}, Builtin::Exp, {lhs, parse_term()}});
      else if (accept('-'))
        lhs = add({NodeKind::Sub, 0.0, {}, Builtin::Exp, {lhs, parse_term()}});
      else
        return lhs;
    }
  }

  std::uint32_t parse_term() {
    std::uint32_t lhs = parse_factor();
    for (;;) {
      if (accept('*'))
        lhs = add({NodeKind::Mul, 0.0, {}, Builtin::Exp, {lhs, parse_factor()}});
      else if (accept('/'))
        lhs = add({NodeKind::Div, 0.0, {}, Builtin::Exp, {lhs, parse_factor()}});
      else
        return lhs;
    }
  }

  // '^' binds tighter than unary minus (so "-t^2" is -(t^2)) and is
  // right-associative.
  std::uint32_t parse_factor() {
    if (accept('-'))
      return add({NodeKind::Neg, 0.0, {}, Builtin::Exp, {parse_factor()}});
    std::uint32_t base = parse_primary();
    if (accept('^')) {
      std::uint32_t exponent = parse_factor();
      return add({NodeKind::Pow, 0.0, {}, Builtin::Exp, {base, exponent}});
    }
    return base;
  }

  std::uint32_t parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) throw SyntaxError(pos_, "a number, name or '('");
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    if (accept('(')) {
      std::uint32_t inner = parse_sum();
      if (!accept(')')) throw SyntaxError(pos_, "')'");
      return inner;
    }
    throw SyntaxError(pos_, "a number, name or '('");
  }

  std::uint32_t parse_number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
      ++pos_;
    // exponent part: 1e-3, 2.5E+4
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t mark = pos_ + 1;
      if (mark < src_.size() && (src_[mark] == '+' || src_[mark] == '-')) ++mark;
      if (mark < src_.size() && std::isdigit(static_cast<unsigned char>(src_[mark]))) {
        pos_ = mark;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
          ++pos_;
      }
    }
    const std::string text = src_.substr(start, pos_ - start);
    try {
      const double v = std::stod(text);
      return add({NodeKind::Number, v, {}, Builtin::Exp, {}});
    } catch (const std::exception&) {
      throw SyntaxError(start, "a valid number");
    }
  }

  std::uint32_t parse_ident() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    std::string name = src_.substr(start, pos_ - start);
    if (peek('(')) {
      const BuiltinInfo* info = find_builtin(name);
      if (!info) throw UnknownFunctionError(name, start);
      ++pos_;  // consume '('
      std::vector<std::uint32_t> args;
      args.push_back(parse_sum());
      while (accept(',')) args.push_back(parse_sum());
      if (!accept(')')) throw SyntaxError(pos_, "')'");
      if (static_cast<int>(args.size()) != info->arity)
        throw SyntaxError(start, std::string(info->name) + " takes " +
                                     std::to_string(info->arity) + " argument(s)");
      return add({NodeKind::Call, 0.0, std::move(name), info->id, std::move(args)});
    }
    return add({NodeKind::Variable, 0.0, std::move(name), Builtin::Exp, {}});
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  std::vector<Expression::Node>* nodes_ = nullptr;
};

Expression parse_expr(const std::string& source) { return Parser(source).run(); }

namespace {

void collect_vars(const Expression& e, std::uint32_t id,
                  std::vector<std::string>& out) {
  const auto& n = e.nodes()[id];
  if (n.kind == NodeKind::Variable) {
    for (const auto& v : out)
      if (v == n.name) return;
    out.push_back(n.name);
    return;
  }
  for (std::uint32_t a : n.args) collect_vars(e, a, out);
}

double apply_builtin(Builtin b, double x, double y, EvalFlags* flags) {
  switch (b) {
    case Builtin::Exp:
      return std::exp(x);
    case Builtin::Log:
      if (x <= 0.0) {
        if (flags) flags->domain_error = true;
        return std::numeric_limits<double>::quiet_NaN();
      }
      return std::log(x);
    case Builtin::Sin:
      return std::sin(x);
    case Builtin::Cos:
      return std::cos(x);
    case Builtin::Sqrt:
      if (x < 0.0) {
        if (flags) flags->domain_error = true;
        return std::numeric_limits<double>::quiet_NaN();
      }
      return std::sqrt(x);
    case Builtin::Abs:
      return std::abs(x);
    case Builtin::Pow: {
      const double v = std::pow(x, y);
      if (std::isnan(v) && flags) flags->domain_error = true;
      return v;
    }
    case Builtin::Min:
      return std::min(x, y);
    case Builtin::Max:
      return std::max(x, y);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double eval_rec(const Expression& e, std::uint32_t id,
                const std::map<std::string, double>& bindings, EvalFlags* flags) {
  const auto& n = e.nodes()[id];
  switch (n.kind) {
    case NodeKind::Number:
      return n.number;
    case NodeKind::Variable: {
      auto it = bindings.find(n.name);
      if (it == bindings.end()) throw UnboundVariableError(n.name);
      return it->second;
    }
    case NodeKind::Add:
      return eval_rec(e, n.args[0], bindings, flags) +
             eval_rec(e, n.args[1], bindings, flags);
    case NodeKind::Sub:
      return eval_rec(e, n.args[0], bindings, flags) -
             eval_rec(e, n.args[1], bindings, flags);
    case NodeKind::Mul:
      return eval_rec(e, n.args[0], bindings, flags) *
             eval_rec(e, n.args[1], bindings, flags);
    case NodeKind::Div: {
      const double num = eval_rec(e, n.args[0], bindings, flags);
      const double den = eval_rec(e, n.args[1], bindings, flags);
      return num / den;  // IEEE semantics; inf/NaN propagate
    }
    case NodeKind::Pow: {
      const double base = eval_rec(e, n.args[0], bindings, flags);
      const double ex = eval_rec(e, n.args[1], bindings, flags);
      const double v = std::pow(base, ex);
      if (std::isnan(v) && flags) flags->domain_error = true;
      return v;
    }
    case NodeKind::Neg:
      return -eval_rec(e, n.args[0], bindings, flags);
    case NodeKind::Call: {
      const double x = eval_rec(e, n.args[0], bindings, flags);
      const double y = n.args.size() > 1 ? eval_rec(e, n.args[1], bindings, flags) : 0.0;
      return apply_builtin(n.builtin, x, y, flags);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

int precedence(NodeKind k) {
  switch (k) {
    case NodeKind::Add:
    case NodeKind::Sub:
      return 1;
    case NodeKind::Mul:
    case NodeKind::Div:
      return 2;
    case NodeKind::Neg:
      return 3;
    case NodeKind::Pow:
      return 4;
    default:
      return 5;
  }
}

void print_rec(const Expression& e, std::uint32_t id, int parent_prec,
               bool right_side, std::string& out) {
  const auto& n = e.nodes()[id];
  const int prec = precedence(n.kind);
  // Conservative bracketing: parenthesize whenever precedence does not
  // strictly dominate, which keeps associativity round-trip exact.
  const bool need_paren =
      prec < parent_prec || (prec == parent_prec && right_side && prec <= 2) ||
      (n.kind == NodeKind::Pow && parent_prec == 4 && !right_side) ||
      (n.kind == NodeKind::Neg && parent_prec >= 3);
  if (need_paren) out += '(';
  switch (n.kind) {
    case NodeKind::Number: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", n.number);
      out += buf;
      break;
    }
    case NodeKind::Variable:
      out += n.name;
      break;
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div: {
      const char op = n.kind == NodeKind::Add   ? '+'
                      : n.kind == NodeKind::Sub ? '-'
                      : n.kind == NodeKind::Mul ? '*'
                                                : '/';
      print_rec(e, n.args[0], prec, false, out);
      out += ' ';
      out += op;
      out += ' ';
      print_rec(e, n.args[1], prec, true, out);
      break;
    }
    case NodeKind::Pow:
      print_rec(e, n.args[0], prec, false, out);
      out += '^';
      print_rec(e, n.args[1], prec, true, out);
      break;
    case NodeKind::Neg:
      out += '-';
      print_rec(e, n.args[0], prec, true, out);
      break;
    case NodeKind::Call:
      out += builtin_name(n.builtin);
      out += '(';
      print_rec(e, n.args[0], 0, false, out);
      if (n.args.size() > 1) {
        out += ", ";
        print_rec(e, n.args[1], 0, false, out);
      }
      out += ')';
      break;
  }
  if (need_paren) out += ')';
}

bool equal_rec(const Expression& a, std::uint32_t ia, const Expression& b,
               std::uint32_t ib) {
  const auto& na = a.nodes()[ia];
  const auto& nb = b.nodes()[ib];
  if (na.kind != nb.kind || na.args.size() != nb.args.size()) return false;
  switch (na.kind) {
    case NodeKind::Number:
      if (!(na.number == nb.number)) return false;
      break;
    case NodeKind::Variable:
      if (na.name != nb.name) return false;
      break;
    case NodeKind::Call:
      if (na.builtin != nb.builtin) return false;
      break;
    default:
      break;
  }
  for (std::size_t i = 0; i < na.args.size(); ++i)
    if (!equal_rec(a, na.args[i], b, nb.args[i])) return false;
  return true;
}

}  // namespace

std::vector<std::string> Expression::variables() const {
  std::vector<std::string> out;
  if (!nodes_.empty()) collect_vars(*this, root_, out);
  return out;
}

std::string Expression::pretty() const {
  std::string out;
  if (!nodes_.empty()) print_rec(*this, root_, 0, false, out);
  return out;
}

double Expression::eval(const std::map<std::string, double>& bindings,
                        EvalFlags* flags) const {
  return eval_rec(*this, root_, bindings, flags);
}

bool Expression::operator==(const Expression& other) const {
  if (nodes_.empty() || other.nodes_.empty()) return nodes_.empty() == other.nodes_.empty();
  return equal_rec(*this, root_, other, other.root_);
}

BoundExpression::BoundExpression(Expression e, const std::vector<std::string>& scope)
    : expr_(std::move(e)) {
  slots_.assign(expr_.nodes().size(), -1);
  for (std::size_t i = 0; i < expr_.nodes().size(); ++i) {
    const auto& n = expr_.nodes()[i];
    if (n.kind != NodeKind::Variable) continue;
    std::int32_t slot = -1;
    for (std::size_t s = 0; s < scope.size(); ++s)
      if (scope[s] == n.name) {
        slot = static_cast<std::int32_t>(s);
        break;
      }
    if (slot < 0) throw UnboundVariableError(n.name);
    slots_[i] = slot;
  }
}

double BoundExpression::eval_node(std::uint32_t id, const double* values,
                                  EvalFlags* flags) const {
  const auto& n = expr_.nodes()[id];
  switch (n.kind) {
    case NodeKind::Number:
      return n.number;
    case NodeKind::Variable:
      return values[slots_[id]];
    case NodeKind::Add:
      return eval_node(n.args[0], values, flags) + eval_node(n.args[1], values, flags);
    case NodeKind::Sub:
      return eval_node(n.args[0], values, flags) - eval_node(n.args[1], values, flags);
    case NodeKind::Mul:
      return eval_node(n.args[0], values, flags) * eval_node(n.args[1], values, flags);
    case NodeKind::Div:
      return eval_node(n.args[0], values, flags) / eval_node(n.args[1], values, flags);
    case NodeKind::Pow: {
      const double v = std::pow(eval_node(n.args[0], values, flags),
                                eval_node(n.args[1], values, flags));
      if (std::isnan(v) && flags) flags->domain_error = true;
      return v;
    }
    case NodeKind::Neg:
      return -eval_node(n.args[0], values, flags);
    case NodeKind::Call: {
      const double x = eval_node(n.args[0], values, flags);
      const double y = n.args.size() > 1 ? eval_node(n.args[1], values, flags) : 0.0;
      return apply_builtin(n.builtin, x, y, flags);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double BoundExpression::operator()(const double* values, EvalFlags* flags) const {
  return eval_node(expr_.root(), values, flags);
}

}  // namespace hilferstab::expr
