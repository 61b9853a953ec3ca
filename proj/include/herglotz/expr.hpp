#pragma once

#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace herglotz {

/// Name -> value bindings for evaluation. Caller-owned, one per evaluation.
using Env = std::map<std::string, double>;

enum class UnaryOp { Neg, Sin, Cos, Tan, Exp, Log, Sqrt, Abs };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

/// Parsed arithmetic expression over a fixed, ordered list of named scalar
/// variables. Immutable after construction; evaluation does not mutate the
/// tree, so a single Expr may be evaluated from many threads concurrently.
///
/// Grammar (whitespace-insensitive):
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := '-' factor | base ('^' factor)?
///   base   := number | ident | ident '(' expr ')' | '(' expr ')'
/// Precedence: '^' (right-associative) binds tighter than unary '-', which
/// binds tighter than '*','/', which bind tighter than '+','-'.
/// Functions: sin cos tan exp log sqrt abs. Identifiers: [a-zA-Z_][a-zA-Z0-9_]*.
class Expr {
 public:
  Expr() = default;

  /// Parses `source`, rejecting any identifier not in `allowed_vars`.
  /// Throws ParseError (syntax / unknown-variable / unknown-function).
  static Expr parse(std::string_view source, std::span<const std::string> allowed_vars);
  static Expr parse(std::string_view source, std::initializer_list<std::string> allowed_vars);

  /// A bare variable reference. `name` must appear in `allowed_vars`.
  static Expr variable(std::string_view name, std::span<const std::string> allowed_vars);

  /// Evaluates with `values` aligned to the variable order given at parse
  /// time (values.size() == variables().size()).
  double eval(std::span<const double> values) const;

  /// Evaluates against name->value bindings; every variable that occurs in
  /// the expression must be bound. Throws EvalError on a missing binding.
  double eval(const Env& env) const;

  /// Rebuilds this expression over a new variable list (matching by name).
  /// Evaluation is unchanged; only variable indices are remapped.
  Expr rebind(std::span<const std::string> new_vars) const;

  /// Canonical printed form; parse(pretty()) prints identically.
  std::string pretty() const;

  const std::vector<std::string>& variables() const { return vars_; }

  /// True when the named variable occurs in the tree.
  bool depends_on(std::string_view name) const;

  bool empty() const { return nodes_.empty(); }

  // Programmatic construction; both operands must share one variable list.
  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);

 private:
  struct Node {
    enum class Kind { Constant, Variable, Unary, Binary };
    Kind kind = Kind::Constant;
    double value = 0.0;  // Constant
    int var = -1;        // Variable: index into vars_
    UnaryOp uop = UnaryOp::Neg;
    BinaryOp bop = BinaryOp::Add;
    int lhs = -1, rhs = -1;  // child node indices
  };

  struct Parser;

  double eval_node(int idx, std::span<const double> values) const;
  void print_node(int idx, std::string& out) const;
  static Expr combine(BinaryOp op, const Expr& a, const Expr& b);

  std::vector<Node> nodes_;
  int root_ = -1;
  std::vector<std::string> vars_;
  std::vector<bool> used_;  // per variable: occurs in the tree
};

}  // namespace herglotz
