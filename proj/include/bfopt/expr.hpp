#pragma once

#include <memory>
#include <string>
#include <vector>

namespace bfopt::expr {

/// Variable classes available to expressions: state x1..xn, delayed state
/// xd1..xdn, input u1..un, and the scalar time t.
enum class VarClass { State, DelayedState, Input, Time };

enum class Func { Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Tanh };

/// Dimensions an expression is allowed to reference. Guards use n_u = 0.
struct Dims {
  int n_x = 0;
  int n_u = 0;
  bool allow_delayed = false;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { Number, Var, Neg, Binary, Call };

  Kind kind = Kind::Number;
  double number = 0.0;
  VarClass var_class = VarClass::Time;
  int var_index = 0;  // 0-based; unused for Time
  char op = '+';      // for Binary: + - * / ^
  Func func = Func::Sin;
  ExprPtr lhs, rhs;   // Neg and Call use lhs only
};

/// Values an expression is evaluated against. Pointers may be null when the
/// corresponding variable class cannot occur (enforced at parse time).
struct Bindings {
  const double* x = nullptr;
  const double* xd = nullptr;
  const double* u = nullptr;
  double t = 0.0;
};

/// Parses the arithmetic grammar:
///   expr  := term (("+"|"-") term)*
///   term  := unary (("*"|"/") unary)*
///   unary := "-" unary | power
///   power := atom ("^" unary)?
///   atom  := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"
/// '^' is right-associative and binds tighter than unary minus. Unknown or
/// out-of-range identifiers are rejected against `dims`.
ExprPtr parse_expression(const std::string& text, const Dims& dims);

/// Canonical rendering; reparsing the result yields a structurally identical tree.
std::string to_string(const Expr& e);

/// Checked tree-walk evaluation; throws DomainError naming the offending
/// subexpression for log of a non-positive value or sqrt of a negative one.
double eval_expression(const Expr& e, const Bindings& b);

/// Structural equality of two trees.
bool equal(const Expr& a, const Expr& b);

/// Flat postfix program for fast repeated evaluation inside rollouts. No
/// domain checks: IEEE NaN/inf propagate and are caught by the rollout
/// divergence guard.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  explicit CompiledExpr(const Expr& e);

  double eval(const Bindings& b) const;
  bool empty() const { return code_.empty(); }

 private:
  enum class Op : unsigned char {
    PushNumber, PushVar, Neg, Add, Sub, Mul, Div, Pow, Square, Call
  };
  struct Instr {
    Op op;
    int arg = 0;       // var slot / function id
    double value = 0;  // literal
  };

  std::vector<Instr> code_;
  int max_stack_ = 0;
};

// ---------------------------------------------------------------------------
// Boolean guard expressions over comparisons of arithmetic expressions.

enum class CmpOp { Lt, Le, Gt, Ge };

struct Guard;
using GuardPtr = std::shared_ptr<const Guard>;

struct Guard {
  enum class Kind { True, Cmp, And, Or };

  Kind kind = Kind::True;
  CmpOp cmp = CmpOp::Lt;
  ExprPtr lhs, rhs;       // for Cmp
  GuardPtr a, b;          // for And / Or
};

/// Parses the guard grammar:
///   orexpr  := andexpr ("||" andexpr)*
///   andexpr := cmp ("&&" cmp)*
///   cmp     := expr ("<="|">="|"<"|">") expr | "true" | "(" orexpr ")"
/// Comparison operands may reference state variables and t only.
GuardPtr parse_guard(const std::string& text, int n_x);

std::string to_string(const Guard& g);

bool eval_guard(const Guard& g, const Bindings& b);

/// Returns true if the guard is the literal catch-all "true".
bool is_true_literal(const Guard& g);

class CompiledGuard {
 public:
  CompiledGuard() = default;
  explicit CompiledGuard(const Guard& g);

  bool eval(const Bindings& b) const;

 private:
  struct Node {
    Guard::Kind kind;
    CmpOp cmp;
    CompiledExpr lhs, rhs;
    int a = -1, b = -1;
  };

  bool eval_node(int idx, const Bindings& b) const;
  int build(const Guard& g);

  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace bfopt::expr
