#include "bfopt/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

#include "bfopt/errors.hpp"

namespace bfopt::expr {

namespace {

const std::map<std::string, Func, std::less<>> kFunctions = {
    {"sin", Func::Sin}, {"cos", Func::Cos},   {"tan", Func::Tan},
    {"exp", Func::Exp}, {"log", Func::Log},   {"sqrt", Func::Sqrt},
    {"abs", Func::Abs}, {"tanh", Func::Tanh},
};

const char* func_name(Func f) {
  switch (f) {
    case Func::Sin: return "sin";
    case Func::Cos: return "cos";
    case Func::Tan: return "tan";
    case Func::Exp: return "exp";
    case Func::Log: return "log";
    case Func::Sqrt: return "sqrt";
    case Func::Abs: return "abs";
    case Func::Tanh: return "tanh";
  }
  return "?";
}

double apply_func(Func f, double v) {
  switch (f) {
    case Func::Sin: return std::sin(v);
    case Func::Cos: return std::cos(v);
    case Func::Tan: return std::tan(v);
    case Func::Exp: return std::exp(v);
    case Func::Log: return std::log(v);
    case Func::Sqrt: return std::sqrt(v);
    case Func::Abs: return std::abs(v);
    case Func::Tanh: return std::tanh(v);
  }
  return 0.0;
}

ExprPtr make_number(double v) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Number;
  e->number = v;
  return e;
}

ExprPtr make_var(VarClass c, int index) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Var;
  e->var_class = c;
  e->var_index = index;
  return e;
}

ExprPtr make_neg(ExprPtr a) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Neg;
  e->lhs = std::move(a);
  return e;
}

ExprPtr make_binary(char op, ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Binary;
  e->op = op;
  e->lhs = std::move(a);
  e->rhs = std::move(b);
  return e;
}

ExprPtr make_call(Func f, ExprPtr a) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Call;
  e->func = f;
  e->lhs = std::move(a);
  return e;
}

// Shared lexer/cursor for the expression and guard grammars.
class Cursor {
 public:
  explicit Cursor(const std::string& text) : text_(text) {}

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      advance();
  }

  bool done() {
    skip_ws();
    return pos_ >= text_.size();
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      advance();
      return true;
    }
    return false;
  }

  bool consume(const char* two) {
    skip_ws();
    if (pos_ + 1 < text_.size() && text_[pos_] == two[0] && text_[pos_ + 1] == two[1]) {
      advance();
      advance();
      return true;
    }
    return false;
  }

  double read_number() {
    skip_ws();
    const char* start = text_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(start, &end);
    if (end == start) fail("expected a number");
    for (const char* p = start; p != end; ++p) advance();
    return v;
  }

  std::string read_ident() {
    skip_ws();
    std::string out;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      out.push_back(text_[pos_]);
      advance();
    }
    if (out.empty()) fail("expected an identifier");
    return out;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(message, line_, column_);
  }

  struct State {
    std::size_t pos;
    int line, column;
  };
  State save() const { return {pos_, line_, column_}; }
  void restore(const State& s) {
    pos_ = s.pos;
    line_ = s.line;
    column_ = s.column;
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

class Parser {
 public:
  Parser(Cursor& cur, const Dims& dims) : cur_(cur), dims_(dims) {}

  ExprPtr parse_expr() {
    ExprPtr e = parse_term();
    while (true) {
      if (cur_.consume('+'))
        e = make_binary('+', e, parse_term());
      else if (cur_.consume('-'))
        e = make_binary('-', e, parse_term());
      else
        return e;
    }
  }

 private:
  ExprPtr parse_term() {
    ExprPtr e = parse_unary();
    while (true) {
      if (cur_.consume('*'))
        e = make_binary('*', e, parse_unary());
      else if (cur_.consume('/'))
        e = make_binary('/', e, parse_unary());
      else
        return e;
    }
  }

  ExprPtr parse_unary() {
    if (cur_.consume('-')) return make_neg(parse_unary());
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_atom();
    if (cur_.consume('^')) return make_binary('^', base, parse_unary());
    return base;
  }

  ExprPtr parse_atom() {
    const char c = cur_.peek();
    if (c == '(') {
      cur_.consume('(');
      ExprPtr e = parse_expr();
      if (!cur_.consume(')')) cur_.fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return make_number(cur_.read_number());
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    cur_.fail(std::string("unexpected character '") + c + "'");
  }

  ExprPtr parse_ident() {
    const std::string name = cur_.read_ident();
    if (auto it = kFunctions.find(name); it != kFunctions.end()) {
      if (!cur_.consume('('))
        cur_.fail("function '" + name + "' requires one parenthesized argument");
      ExprPtr arg = parse_expr();
      if (!cur_.consume(')')) cur_.fail("expected ')' after argument of '" + name + "'");
      return make_call(it->second, arg);
    }
    return resolve_var(name);
  }

  ExprPtr resolve_var(const std::string& name) {
    if (name == "t") return make_var(VarClass::Time, 0);
    VarClass cls;
    std::size_t digits;
    if (name.size() > 2 && name.compare(0, 2, "xd") == 0) {
      cls = VarClass::DelayedState;
      digits = 2;
    } else if (name.size() > 1 && name[0] == 'x') {
      cls = VarClass::State;
      digits = 1;
    } else if (name.size() > 1 && name[0] == 'u') {
      cls = VarClass::Input;
      digits = 1;
    } else {
      cur_.fail("unknown identifier '" + name + "'");
    }
    // 1-based index, no leading zeros.
    int index = 0;
    if (name[digits] == '0') cur_.fail("unknown identifier '" + name + "'");
    for (std::size_t i = digits; i < name.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(name[i])))
        cur_.fail("unknown identifier '" + name + "'");
      index = index * 10 + (name[i] - '0');
    }
    const int limit = cls == VarClass::Input ? dims_.n_u : dims_.n_x;
    if (index < 1 || index > limit)
      cur_.fail("variable '" + name + "' is out of range for the declared dimensions");
    if (cls == VarClass::DelayedState && !dims_.allow_delayed)
      cur_.fail("delayed state '" + name + "' is not allowed here");
    return make_var(cls, index - 1);
  }

  Cursor& cur_;
  const Dims& dims_;
};

int precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Number:
      return e.number < 0 ? 1 : 4;  // negative literals print like unary minus
    case Expr::Kind::Var:
    case Expr::Kind::Call:
      return 4;
    case Expr::Kind::Neg:
      return 1;
    case Expr::Kind::Binary:
      if (e.op == '^') return 3;
      if (e.op == '*' || e.op == '/') return 2;
      return 0;
  }
  return 0;
}

void render(const Expr& e, std::ostream& os) {
  const auto child = [&os](const Expr& c, bool parens) {
    if (parens) os << '(';
    render(c, os);
    if (parens) os << ')';
  };
  switch (e.kind) {
    case Expr::Kind::Number: {
      std::ostringstream tmp;
      tmp.precision(17);
      tmp << e.number;
      os << tmp.str();
      return;
    }
    case Expr::Kind::Var:
      switch (e.var_class) {
        case VarClass::Time: os << 't'; return;
        case VarClass::State: os << 'x' << e.var_index + 1; return;
        case VarClass::DelayedState: os << "xd" << e.var_index + 1; return;
        case VarClass::Input: os << 'u' << e.var_index + 1; return;
      }
      return;
    case Expr::Kind::Neg:
      os << '-';
      child(*e.lhs, precedence(*e.lhs) < 2);
      return;
    case Expr::Kind::Call:
      os << func_name(e.func) << '(';
      render(*e.lhs, os);
      os << ')';
      return;
    case Expr::Kind::Binary: {
      const int mine = precedence(e);
      // Right operands need parentheses at equal precedence for the
      // left-associative operators; '^' is the mirror case.
      const bool lp = precedence(*e.lhs) < mine + (e.op == '^' ? 1 : 0);
      const bool rp = precedence(*e.rhs) < mine + (e.op == '^' ? 0 : 1);
      child(*e.lhs, lp);
      os << ' ' << e.op << ' ';
      child(*e.rhs, rp);
      return;
    }
  }
}

}  // namespace

ExprPtr parse_expression(const std::string& text, const Dims& dims) {
  Cursor cur(text);
  Parser parser(cur, dims);
  ExprPtr e = parser.parse_expr();
  if (!cur.done()) cur.fail("unexpected trailing input");
  return e;
}

std::string to_string(const Expr& e) {
  std::ostringstream os;
  render(e, os);
  return os.str();
}

double eval_expression(const Expr& e, const Bindings& b) {
  switch (e.kind) {
    case Expr::Kind::Number:
      return e.number;
    case Expr::Kind::Var:
      switch (e.var_class) {
        case VarClass::Time: return b.t;
        case VarClass::State: return b.x[e.var_index];
        case VarClass::DelayedState: return b.xd[e.var_index];
        case VarClass::Input: return b.u[e.var_index];
      }
      return 0.0;
    case Expr::Kind::Neg:
      return -eval_expression(*e.lhs, b);
    case Expr::Kind::Call: {
      const double v = eval_expression(*e.lhs, b);
      if (e.func == Func::Log && v <= 0.0)
        throw DomainError("log of a non-positive value in '" + to_string(e) + "'");
      if (e.func == Func::Sqrt && v < 0.0)
        throw DomainError("sqrt of a negative value in '" + to_string(e) + "'");
      return apply_func(e.func, v);
    }
    case Expr::Kind::Binary: {
      const double a = eval_expression(*e.lhs, b);
      const double c = eval_expression(*e.rhs, b);
      switch (e.op) {
        case '+': return a + c;
        case '-': return a - c;
        case '*': return a * c;
        case '/': return a / c;
        case '^': return std::pow(a, c);
      }
      return 0.0;
    }
  }
  return 0.0;
}

bool equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::Number: return a.number == b.number;
    case Expr::Kind::Var: return a.var_class == b.var_class && a.var_index == b.var_index;
    case Expr::Kind::Neg: return equal(*a.lhs, *b.lhs);
    case Expr::Kind::Call: return a.func == b.func && equal(*a.lhs, *b.lhs);
    case Expr::Kind::Binary:
      return a.op == b.op && equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
  }
  return false;
}

// ---------------------------------------------------------------------------

CompiledExpr::CompiledExpr(const Expr& e) {
  int depth = 0;
  const auto emit = [this, &depth](Instr instr, int delta) {
    code_.push_back(instr);
    depth += delta;
    max_stack_ = std::max(max_stack_, depth);
  };
  const std::function<void(const Expr&)> walk = [&](const Expr& node) {
    switch (node.kind) {
      case Expr::Kind::Number:
        emit({Op::PushNumber, 0, node.number}, 1);
        return;
      case Expr::Kind::Var: {
        // Slot encoding: 0 = t, then x, xd, u blocks tagged by the class.
        int tag = 0;
        switch (node.var_class) {
          case VarClass::Time: tag = 0; break;
          case VarClass::State: tag = 1; break;
          case VarClass::DelayedState: tag = 2; break;
          case VarClass::Input: tag = 3; break;
        }
        emit({Op::PushVar, tag * (1 << 16) + node.var_index, 0.0}, 1);
        return;
      }
      case Expr::Kind::Neg:
        walk(*node.lhs);
        emit({Op::Neg, 0, 0.0}, 0);
        return;
      case Expr::Kind::Call:
        walk(*node.lhs);
        emit({Op::Call, static_cast<int>(node.func), 0.0}, 0);
        return;
      case Expr::Kind::Binary:
        walk(*node.lhs);
        if (node.op == '^' && node.rhs->kind == Expr::Kind::Number &&
            node.rhs->number == 2.0) {
          emit({Op::Square, 0, 0.0}, 0);
          return;
        }
        walk(*node.rhs);
        switch (node.op) {
          case '+': emit({Op::Add, 0, 0.0}, -1); return;
          case '-': emit({Op::Sub, 0, 0.0}, -1); return;
          case '*': emit({Op::Mul, 0, 0.0}, -1); return;
          case '/': emit({Op::Div, 0, 0.0}, -1); return;
          case '^': emit({Op::Pow, 0, 0.0}, -1); return;
        }
        return;
    }
  };
  walk(e);
  if (max_stack_ > 64) throw SpecError("expression nests too deeply");
}

double CompiledExpr::eval(const Bindings& b) const {
  double stack[64];
  int top = -1;
  for (const Instr& instr : code_) {
    switch (instr.op) {
      case Op::PushNumber:
        stack[++top] = instr.value;
        break;
      case Op::PushVar: {
        const int tag = instr.arg >> 16;
        const int idx = instr.arg & 0xffff;
        double v = b.t;
        if (tag == 1) v = b.x[idx];
        else if (tag == 2) v = b.xd[idx];
        else if (tag == 3) v = b.u[idx];
        stack[++top] = v;
        break;
      }
      case Op::Neg: stack[top] = -stack[top]; break;
      case Op::Square: stack[top] *= stack[top]; break;
      case Op::Add: --top; stack[top] += stack[top + 1]; break;
      case Op::Sub: --top; stack[top] -= stack[top + 1]; break;
      case Op::Mul: --top; stack[top] *= stack[top + 1]; break;
      case Op::Div: --top; stack[top] /= stack[top + 1]; break;
      case Op::Pow: --top; stack[top] = std::pow(stack[top], stack[top + 1]); break;
      case Op::Call: stack[top] = apply_func(static_cast<Func>(instr.arg), stack[top]); break;
    }
  }
  return stack[0];
}

// ---------------------------------------------------------------------------

namespace {

GuardPtr make_true() {
  auto g = std::make_shared<Guard>();
  g->kind = Guard::Kind::True;
  return g;
}

GuardPtr make_cmp(CmpOp op, ExprPtr l, ExprPtr r) {
  auto g = std::make_shared<Guard>();
  g->kind = Guard::Kind::Cmp;
  g->cmp = op;
  g->lhs = std::move(l);
  g->rhs = std::move(r);
  return g;
}

GuardPtr make_logic(Guard::Kind kind, GuardPtr a, GuardPtr b) {
  auto g = std::make_shared<Guard>();
  g->kind = kind;
  g->a = std::move(a);
  g->b = std::move(b);
  return g;
}

class GuardParser {
 public:
  GuardParser(Cursor& cur, const Dims& dims) : cur_(cur), dims_(dims) {}

  GuardPtr parse_or() {
    GuardPtr g = parse_and();
    while (cur_.consume("||")) g = make_logic(Guard::Kind::Or, g, parse_and());
    return g;
  }

 private:
  GuardPtr parse_and() {
    GuardPtr g = parse_cmp();
    while (cur_.consume("&&")) g = make_logic(Guard::Kind::And, g, parse_cmp());
    return g;
  }

  GuardPtr parse_cmp() {
    // "true" literal.
    const Cursor::State mark = cur_.save();
    if (std::isalpha(static_cast<unsigned char>(cur_.peek()))) {
      const std::string word = cur_.read_ident();
      if (word == "true") return make_true();
      cur_.restore(mark);
    }
    if (cur_.peek() == '(') {
      // Could be a parenthesized boolean or the left side of an arithmetic
      // comparison; try the comparison first and backtrack on failure.
      try {
        return parse_comparison();
      } catch (const ParseError&) {
        cur_.restore(mark);
      }
      cur_.consume('(');
      GuardPtr g = parse_or();
      if (!cur_.consume(')')) cur_.fail("expected ')'");
      return g;
    }
    return parse_comparison();
  }

  GuardPtr parse_comparison() {
    Parser arith(cur_, dims_);
    ExprPtr lhs = arith.parse_expr();
    CmpOp op;
    if (cur_.consume("<=")) op = CmpOp::Le;
    else if (cur_.consume(">=")) op = CmpOp::Ge;
    else if (cur_.consume('<')) op = CmpOp::Lt;
    else if (cur_.consume('>')) op = CmpOp::Gt;
    else cur_.fail("expected a comparison operator");
    ExprPtr rhs = arith.parse_expr();
    return make_cmp(op, std::move(lhs), std::move(rhs));
  }

  Cursor& cur_;
  const Dims& dims_;
};

const char* cmp_name(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

bool apply_cmp(CmpOp op, double a, double b) {
  switch (op) {
    case CmpOp::Lt: return a < b;
    case CmpOp::Le: return a <= b;
    case CmpOp::Gt: return a > b;
    case CmpOp::Ge: return a >= b;
  }
  return false;
}

}  // namespace

GuardPtr parse_guard(const std::string& text, int n_x) {
  Cursor cur(text);
  Dims dims{n_x, 0, false};  // guards see the state and t only
  GuardParser parser(cur, dims);
  GuardPtr g = parser.parse_or();
  if (!cur.done()) cur.fail("unexpected trailing input");
  return g;
}

std::string to_string(const Guard& g) {
  switch (g.kind) {
    case Guard::Kind::True:
      return "true";
    case Guard::Kind::Cmp:
      return to_string(*g.lhs) + " " + cmp_name(g.cmp) + " " + to_string(*g.rhs);
    case Guard::Kind::And: {
      const auto wrap = [](const Guard& c) {
        const std::string s = to_string(c);
        return c.kind == Guard::Kind::Or ? "(" + s + ")" : s;
      };
      return wrap(*g.a) + " && " + wrap(*g.b);
    }
    case Guard::Kind::Or:
      return to_string(*g.a) + " || " + to_string(*g.b);
  }
  return "?";
}

bool eval_guard(const Guard& g, const Bindings& b) {
  switch (g.kind) {
    case Guard::Kind::True: return true;
    case Guard::Kind::Cmp:
      return apply_cmp(g.cmp, eval_expression(*g.lhs, b), eval_expression(*g.rhs, b));
    case Guard::Kind::And: return eval_guard(*g.a, b) && eval_guard(*g.b, b);
    case Guard::Kind::Or: return eval_guard(*g.a, b) || eval_guard(*g.b, b);
  }
  return false;
}

bool is_true_literal(const Guard& g) { return g.kind == Guard::Kind::True; }

int CompiledGuard::build(const Guard& g) {
  Node node;
  node.kind = g.kind;
  node.cmp = g.cmp;
  if (g.kind == Guard::Kind::Cmp) {
    node.lhs = CompiledExpr(*g.lhs);
    node.rhs = CompiledExpr(*g.rhs);
  } else if (g.kind != Guard::Kind::True) {
    node.a = build(*g.a);
    node.b = build(*g.b);
  }
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

CompiledGuard::CompiledGuard(const Guard& g) { root_ = build(g); }

bool CompiledGuard::eval_node(int idx, const Bindings& b) const {
  const Node& node = nodes_[idx];
  switch (node.kind) {
    case Guard::Kind::True: return true;
    case Guard::Kind::Cmp: return apply_cmp(node.cmp, node.lhs.eval(b), node.rhs.eval(b));
    case Guard::Kind::And: return eval_node(node.a, b) && eval_node(node.b, b);
    case Guard::Kind::Or: return eval_node(node.a, b) || eval_node(node.b, b);
  }
  return false;
}

bool CompiledGuard::eval(const Bindings& b) const {
  return root_ >= 0 && eval_node(root_, b);
}

}  // namespace bfopt::expr
