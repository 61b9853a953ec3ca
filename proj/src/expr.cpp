#include "herglotz/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>

#include "herglotz/errors.hpp"

namespace herglotz {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

std::optional<UnaryOp> function_by_name(std::string_view name) {
  if (name == "sin") return UnaryOp::Sin;
  if (name == "cos") return UnaryOp::Cos;
  if (name == "tan") return UnaryOp::Tan;
  if (name == "exp") return UnaryOp::Exp;
  if (name == "log") return UnaryOp::Log;
  if (name == "sqrt") return UnaryOp::Sqrt;
  if (name == "abs") return UnaryOp::Abs;
  return std::nullopt;
}

[[noreturn]] void syntax_error(std::size_t off, const std::string& what) {
  throw ParseError(ParseError::Kind::Syntax, off, {},
                   "syntax error at offset " + std::to_string(off) + ": " + what);
}

std::string format_number(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

}  // namespace

struct Expr::Parser {
  std::string_view src;
  std::span<const std::string> vars;
  Expr& out;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
  }
  bool eof() const { return pos >= src.size(); }
  char peek() const { return src[pos]; }

  int add(Node n) {
    out.nodes_.push_back(n);
    return static_cast<int>(out.nodes_.size()) - 1;
  }
  int add_unary(UnaryOp op, int child) {
    Node n;
    n.kind = Node::Kind::Unary;
    n.uop = op;
    n.lhs = child;
    return add(n);
  }
  int add_binary(BinaryOp op, int lhs, int rhs) {
    Node n;
    n.kind = Node::Kind::Binary;
    n.bop = op;
    n.lhs = lhs;
    n.rhs = rhs;
    return add(n);
  }

  int parse_number() {
    const std::size_t start = pos;
    while (!eof() && digit(peek())) ++pos;
    if (!eof() && peek() == '.') {
      ++pos;
      while (!eof() && digit(peek())) ++pos;
    }
    if (pos == start || (pos == start + 1 && src[start] == '.'))
      syntax_error(start, "malformed number");
    if (!eof() && (peek() == 'e' || peek() == 'E')) {
      ++pos;
      if (!eof() && (peek() == '+' || peek() == '-')) ++pos;
      if (eof() || !digit(peek())) syntax_error(pos, "malformed exponent");
      while (!eof() && digit(peek())) ++pos;
    }
    double value = 0.0;
    auto [p, ec] = std::from_chars(src.data() + start, src.data() + pos, value);
    if (ec != std::errc{} || p != src.data() + pos) syntax_error(start, "malformed number");
    Node n;
    n.kind = Node::Kind::Constant;
    n.value = value;
    return add(n);
  }

  int parse_base() {
    skip_ws();
    if (eof()) syntax_error(pos, "unexpected end of input");
    const char c = peek();
    if (digit(c) || c == '.') return parse_number();
    if (ident_start(c)) {
      const std::size_t start = pos;
      while (!eof() && ident_char(peek())) ++pos;
      std::string_view name = src.substr(start, pos - start);
      skip_ws();
      if (!eof() && peek() == '(') {
        auto fn = function_by_name(name);
        if (!fn)
          throw ParseError(ParseError::Kind::UnknownFunction, start, std::string(name),
                           "unknown function '" + std::string(name) + "' at offset " +
                               std::to_string(start));
        ++pos;  // '('
        int arg = parse_expr();
        skip_ws();
        if (eof() || peek() != ')') syntax_error(pos, "expected ')'");
        ++pos;
        return add_unary(*fn, arg);
      }
      auto it = std::find(vars.begin(), vars.end(), name);
      if (it == vars.end())
        throw ParseError(ParseError::Kind::UnknownVariable, start, std::string(name),
                         "unknown variable '" + std::string(name) + "' at offset " +
                             std::to_string(start));
      Node n;
      n.kind = Node::Kind::Variable;
      n.var = static_cast<int>(it - vars.begin());
      return add(n);
    }
    if (c == '(') {
      ++pos;
      int inner = parse_expr();
      skip_ws();
      if (eof() || peek() != ')') syntax_error(pos, "expected ')'");
      ++pos;
      return inner;
    }
    syntax_error(pos, std::string("unexpected character '") + c + "'");
  }

  // '^' binds tighter than unary minus; both are right-associative here.
  int parse_factor() {
    skip_ws();
    if (!eof() && peek() == '-') {
      ++pos;
      return add_unary(UnaryOp::Neg, parse_factor());
    }
    int base = parse_base();
    skip_ws();
    if (!eof() && peek() == '^') {
      ++pos;
      return add_binary(BinaryOp::Pow, base, parse_factor());
    }
    return base;
  }

  int parse_term() {
    int lhs = parse_factor();
    for (;;) {
      skip_ws();
      if (eof() || (peek() != '*' && peek() != '/')) return lhs;
      const BinaryOp op = peek() == '*' ? BinaryOp::Mul : BinaryOp::Div;
      ++pos;
      lhs = add_binary(op, lhs, parse_factor());
    }
  }

  int parse_expr() {
    int lhs = parse_term();
    for (;;) {
      skip_ws();
      if (eof() || (peek() != '+' && peek() != '-')) return lhs;
      const BinaryOp op = peek() == '+' ? BinaryOp::Add : BinaryOp::Sub;
      ++pos;
      lhs = add_binary(op, lhs, parse_term());
    }
  }
};

Expr Expr::parse(std::string_view source, std::span<const std::string> allowed_vars) {
  for (std::size_t i = 0; i < allowed_vars.size(); ++i) {
    const std::string& name = allowed_vars[i];
    if (name.empty() || !ident_start(name[0]) ||
        !std::all_of(name.begin(), name.end(), ident_char))
      throw std::invalid_argument("invalid variable name '" + name + "'");
    if (std::find(allowed_vars.begin() + i + 1, allowed_vars.end(), name) != allowed_vars.end())
      throw std::invalid_argument("duplicate variable name '" + name + "'");
  }
  Expr e;
  e.vars_.assign(allowed_vars.begin(), allowed_vars.end());
  Parser p{source, allowed_vars, e};
  e.root_ = p.parse_expr();
  p.skip_ws();
  if (!p.eof()) syntax_error(p.pos, "unexpected trailing input");
  e.used_.assign(e.vars_.size(), false);
  for (const Node& n : e.nodes_)
    if (n.kind == Node::Kind::Variable) e.used_[n.var] = true;
  return e;
}

Expr Expr::parse(std::string_view source, std::initializer_list<std::string> allowed_vars) {
  std::vector<std::string> vars(allowed_vars);
  return parse(source, vars);
}

Expr Expr::variable(std::string_view name, std::span<const std::string> allowed_vars) {
  return parse(name, allowed_vars);
}

double Expr::eval_node(int idx, std::span<const double> values) const {
  const Node& n = nodes_[idx];
  switch (n.kind) {
    case Node::Kind::Constant:
      return n.value;
    case Node::Kind::Variable:
      return values[n.var];
    case Node::Kind::Unary: {
      const double a = eval_node(n.lhs, values);
      switch (n.uop) {
        case UnaryOp::Neg:
          return -a;
        case UnaryOp::Sin:
          return std::sin(a);
        case UnaryOp::Cos:
          return std::cos(a);
        case UnaryOp::Tan:
          return std::tan(a);
        case UnaryOp::Exp:
          return std::exp(a);
        case UnaryOp::Log:
          if (a <= 0.0) throw EvalError("log of non-positive value");
          return std::log(a);
        case UnaryOp::Sqrt:
          if (a < 0.0) throw EvalError("sqrt of negative value");
          return std::sqrt(a);
        case UnaryOp::Abs:
          return std::fabs(a);
      }
      break;
    }
    case Node::Kind::Binary: {
      const double a = eval_node(n.lhs, values);
      const double b = eval_node(n.rhs, values);
      switch (n.bop) {
        case BinaryOp::Add:
          return a + b;
        case BinaryOp::Sub:
          return a - b;
        case BinaryOp::Mul:
          return a * b;
        case BinaryOp::Div:
          if (b == 0.0) throw EvalError("division by zero");
          return a / b;
        case BinaryOp::Pow:
          if (a < 0.0 && b != std::nearbyint(b))
            throw EvalError("non-integer power of negative base");
          if (a == 0.0 && b < 0.0) throw EvalError("zero raised to a negative power");
          return std::pow(a, b);
      }
      break;
    }
  }
  throw EvalError("corrupt expression node");
}

double Expr::eval(std::span<const double> values) const {
  if (root_ < 0) throw EvalError("evaluating empty expression");
  if (values.size() != vars_.size())
    throw EvalError("expected " + std::to_string(vars_.size()) + " values, got " +
                    std::to_string(values.size()));
  return eval_node(root_, values);
}

double Expr::eval(const Env& env) const {
  std::vector<double> values(vars_.size(), 0.0);
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (!used_[i]) continue;
    auto it = env.find(vars_[i]);
    if (it == env.end()) throw EvalError("missing binding for variable '" + vars_[i] + "'");
    values[i] = it->second;
  }
  return eval(values);
}

Expr Expr::rebind(std::span<const std::string> new_vars) const {
  Expr e;
  e.vars_.assign(new_vars.begin(), new_vars.end());
  e.nodes_ = nodes_;
  e.root_ = root_;
  e.used_.assign(new_vars.size(), false);
  for (Node& n : e.nodes_) {
    if (n.kind != Node::Kind::Variable) continue;
    const std::string& name = vars_[n.var];
    auto it = std::find(new_vars.begin(), new_vars.end(), name);
    if (it == new_vars.end())
      throw std::invalid_argument("rebind: variable '" + name + "' missing from new list");
    n.var = static_cast<int>(it - new_vars.begin());
    e.used_[n.var] = true;
  }
  return e;
}

bool Expr::depends_on(std::string_view name) const {
  for (std::size_t i = 0; i < vars_.size(); ++i)
    if (used_[i] && vars_[i] == name) return true;
  return false;
}

namespace {
// Printing precedence levels; atoms sit above every operator.
int node_level(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add:
    case BinaryOp::Sub:
      return 1;
    case BinaryOp::Mul:
    case BinaryOp::Div:
      return 2;
    case BinaryOp::Pow:
      return 4;
  }
  return 5;
}
}  // namespace

void Expr::print_node(int idx, std::string& out) const {
  const Node& n = nodes_[idx];
  auto level = [&](int i) {
    const Node& c = nodes_[i];
    if (c.kind == Node::Kind::Binary) return node_level(c.bop);
    if (c.kind == Node::Kind::Unary && c.uop == UnaryOp::Neg) return 3;
    return 5;  // constants, variables, function calls
  };
  auto child = [&](int i, bool parens) {
    if (parens) out += '(';
    print_node(i, out);
    if (parens) out += ')';
  };

  switch (n.kind) {
    case Node::Kind::Constant:
      out += format_number(n.value);
      return;
    case Node::Kind::Variable:
      out += vars_[n.var];
      return;
    case Node::Kind::Unary: {
      if (n.uop == UnaryOp::Neg) {
        out += '-';
        child(n.lhs, level(n.lhs) < 2);
        return;
      }
      switch (n.uop) {
        case UnaryOp::Sin: out += "sin"; break;
        case UnaryOp::Cos: out += "cos"; break;
        case UnaryOp::Tan: out += "tan"; break;
        case UnaryOp::Exp: out += "exp"; break;
        case UnaryOp::Log: out += "log"; break;
        case UnaryOp::Sqrt: out += "sqrt"; break;
        case UnaryOp::Abs: out += "abs"; break;
        case UnaryOp::Neg: break;
      }
      out += '(';
      print_node(n.lhs, out);
      out += ')';
      return;
    }
    case Node::Kind::Binary: {
      const int mine = node_level(n.bop);
      switch (n.bop) {
        case BinaryOp::Add:
          child(n.lhs, level(n.lhs) < mine);
          out += " + ";
          child(n.rhs, level(n.rhs) < mine);
          return;
        case BinaryOp::Sub:
          child(n.lhs, level(n.lhs) < mine);
          out += " - ";
          child(n.rhs, level(n.rhs) <= mine);
          return;
        case BinaryOp::Mul:
          child(n.lhs, level(n.lhs) < mine);
          out += '*';
          child(n.rhs, level(n.rhs) < mine);
          return;
        case BinaryOp::Div:
          child(n.lhs, level(n.lhs) < mine);
          out += '/';
          child(n.rhs, level(n.rhs) <= mine);
          return;
        case BinaryOp::Pow:
          child(n.lhs, level(n.lhs) <= mine);
          out += '^';
          child(n.rhs, level(n.rhs) < mine);
          return;
      }
    }
  }
}

std::string Expr::pretty() const {
  if (root_ < 0) return {};
  std::string out;
  print_node(root_, out);
  return out;
}

Expr Expr::combine(BinaryOp op, const Expr& a, const Expr& b) {
  if (a.root_ < 0 || b.root_ < 0) throw std::invalid_argument("combining empty expression");
  if (a.vars_ != b.vars_)
    throw std::invalid_argument("combined expressions must share one variable list");
  Expr e;
  e.vars_ = a.vars_;
  e.nodes_ = a.nodes_;
  const int offset = static_cast<int>(e.nodes_.size());
  for (Node n : b.nodes_) {
    if (n.lhs >= 0) n.lhs += offset;
    if (n.rhs >= 0) n.rhs += offset;
    e.nodes_.push_back(n);
  }
  Node root;
  root.kind = Node::Kind::Binary;
  root.bop = op;
  root.lhs = a.root_;
  root.rhs = b.root_ + offset;
  e.nodes_.push_back(root);
  e.root_ = static_cast<int>(e.nodes_.size()) - 1;
  e.used_.assign(e.vars_.size(), false);
  for (const Node& n : e.nodes_)
    if (n.kind == Node::Kind::Variable) e.used_[n.var] = true;
  return e;
}

Expr operator+(const Expr& a, const Expr& b) { return Expr::combine(BinaryOp::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::combine(BinaryOp::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::combine(BinaryOp::Mul, a, b); }

}  // namespace herglotz
