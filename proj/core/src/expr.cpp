#include "hcsp/expr.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace hcsp {

namespace {

std::size_t mix(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

ExprPtr make(Expr e) {
  std::size_t h = static_cast<std::size_t>(e.kind) * 31;
  switch (e.kind) {
    case Expr::Kind::Const:
      h = mix(h, std::hash<double>{}(e.value));
      break;
    case Expr::Kind::Var:
      h = mix(h, std::hash<std::string>{}(e.name));
      break;
    default:
      if (e.lhs) h = mix(h, e.lhs->hash);
      if (e.rhs) h = mix(h, e.rhs->hash);
  }
  e.hash = h;
  return std::make_shared<Expr>(std::move(e));
}

}  // namespace

ExprPtr econst(double v) { return make({Expr::Kind::Const, v, "", nullptr, nullptr}); }
ExprPtr evar(const std::string& n) { return make({Expr::Kind::Var, 0, n, nullptr, nullptr}); }
ExprPtr eneg(ExprPtr a) { return make({Expr::Kind::Neg, 0, "", std::move(a), nullptr}); }
ExprPtr esqrt(ExprPtr a) { return make({Expr::Kind::Sqrt, 0, "", std::move(a), nullptr}); }
ExprPtr eadd(ExprPtr a, ExprPtr b) { return make({Expr::Kind::Add, 0, "", std::move(a), std::move(b)}); }
ExprPtr esub(ExprPtr a, ExprPtr b) { return make({Expr::Kind::Sub, 0, "", std::move(a), std::move(b)}); }
ExprPtr emul(ExprPtr a, ExprPtr b) { return make({Expr::Kind::Mul, 0, "", std::move(a), std::move(b)}); }
ExprPtr ediv(ExprPtr a, ExprPtr b) { return make({Expr::Kind::Div, 0, "", std::move(a), std::move(b)}); }
ExprPtr epow(ExprPtr a, ExprPtr b) { return make({Expr::Kind::Pow, 0, "", std::move(a), std::move(b)}); }

double eval(const ExprPtr& e, const Valuation& v) {
  switch (e->kind) {
    case Expr::Kind::Const: return e->value;
    case Expr::Kind::Var: {
      auto it = v.find(e->name);
      if (it == v.end()) throw EvalError("unbound variable: " + e->name);
      return it->second;
    }
    case Expr::Kind::Neg: return -eval(e->lhs, v);
    case Expr::Kind::Sqrt: {
      double x = eval(e->lhs, v);
      if (x < 0) throw EvalError("sqrt of negative value " + std::to_string(x));
      return std::sqrt(x);
    }
    case Expr::Kind::Add: return eval(e->lhs, v) + eval(e->rhs, v);
    case Expr::Kind::Sub: return eval(e->lhs, v) - eval(e->rhs, v);
    case Expr::Kind::Mul: return eval(e->lhs, v) * eval(e->rhs, v);
    case Expr::Kind::Div: {
      double d = eval(e->rhs, v);
      if (d == 0.0) throw EvalError("division by zero");
      return eval(e->lhs, v) / d;
    }
    case Expr::Kind::Pow: return std::pow(eval(e->lhs, v), eval(e->rhs, v));
  }
  throw EvalError("bad expression node");
}

void collect_vars(const ExprPtr& e, std::set<std::string>& out) {
  if (!e) return;
  if (e->kind == Expr::Kind::Var) out.insert(e->name);
  collect_vars(e->lhs, out);
  collect_vars(e->rhs, out);
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->hash != b->hash || a->kind != b->kind) return false;
  switch (a->kind) {
    case Expr::Kind::Const: return a->value == b->value;
    case Expr::Kind::Var: return a->name == b->name;
    default:
      return expr_equal(a->lhs, b->lhs) && expr_equal(a->rhs, b->rhs);
  }
}

namespace {

int prec(Expr::Kind k) {
  switch (k) {
    case Expr::Kind::Add:
    case Expr::Kind::Sub: return 1;
    case Expr::Kind::Mul:
    case Expr::Kind::Div: return 2;
    case Expr::Kind::Pow: return 3;
    case Expr::Kind::Neg: return 4;
    default: return 5;
  }
}

void fmt_double(std::ostream& os, double v) {
  std::ostringstream tmp;
  tmp.precision(17);
  tmp << v;
  os << tmp.str();
}

void print(std::ostream& os, const ExprPtr& e, int parent) {
  int p = prec(e->kind);
  bool paren = p < parent;
  if (paren) os << "(";
  switch (e->kind) {
    case Expr::Kind::Const:
      if (e->value < 0) {
        os << "(";
        fmt_double(os, e->value);
        os << ")";
      } else {
        fmt_double(os, e->value);
      }
      break;
    case Expr::Kind::Var: os << e->name; break;
    case Expr::Kind::Neg:
      os << "-";
      print(os, e->lhs, p + 1);
      break;
    case Expr::Kind::Sqrt:
      os << "sqrt(";
      print(os, e->lhs, 0);
      os << ")";
      break;
    case Expr::Kind::Add:
      print(os, e->lhs, p);
      os << " + ";
      print(os, e->rhs, p + 1);
      break;
    case Expr::Kind::Sub:
      print(os, e->lhs, p);
      os << " - ";
      print(os, e->rhs, p + 1);
      break;
    case Expr::Kind::Mul:
      print(os, e->lhs, p);
      os << " * ";
      print(os, e->rhs, p + 1);
      break;
    case Expr::Kind::Div:
      print(os, e->lhs, p);
      os << " / ";
      print(os, e->rhs, p + 1);
      break;
    case Expr::Kind::Pow:
      print(os, e->lhs, p + 1);
      os << " ^ ";
      print(os, e->rhs, p);
      break;
  }
  if (paren) os << ")";
}

}  // namespace

std::string to_string(const ExprPtr& e) {
  std::ostringstream os;
  print(os, e, 0);
  return os.str();
}

ExprPtr substitute_consts(const ExprPtr& e, const std::map<std::string, double>& consts) {
  if (!e) return e;
  if (e->kind == Expr::Kind::Var) {
    auto it = consts.find(e->name);
    if (it != consts.end()) return econst(it->second);
    return e;
  }
  if (!e->lhs && !e->rhs) return e;
  ExprPtr l = substitute_consts(e->lhs, consts);
  ExprPtr r = substitute_consts(e->rhs, consts);
  if (l == e->lhs && r == e->rhs) return e;
  switch (e->kind) {
    case Expr::Kind::Neg: return eneg(l);
    case Expr::Kind::Sqrt: return esqrt(l);
    case Expr::Kind::Add: return eadd(l, r);
    case Expr::Kind::Sub: return esub(l, r);
    case Expr::Kind::Mul: return emul(l, r);
    case Expr::Kind::Div: return ediv(l, r);
    case Expr::Kind::Pow: return epow(l, r);
    default: return e;
  }
}

namespace {

std::size_t mixb(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

BoolPtr makeb(BoolExpr b) {
  std::size_t h = 1000003 + static_cast<std::size_t>(b.kind) * 131;
  switch (b.kind) {
    case BoolExpr::Kind::Cmp:
      h = mixb(h, static_cast<std::size_t>(b.cmp));
      h = mixb(h, b.lhs->hash);
      h = mixb(h, b.rhs->hash);
      break;
    case BoolExpr::Kind::Flag:
      h = mixb(h, std::hash<std::string>{}(b.flag));
      break;
    default:
      if (b.a) h = mixb(h, b.a->hash);
      if (b.b) h = mixb(h, b.b->hash);
  }
  b.hash = h;
  return std::make_shared<BoolExpr>(std::move(b));
}

}  // namespace

BoolPtr btrue() {
  static BoolPtr t = makeb({BoolExpr::Kind::True});
  return t;
}
BoolPtr bfalse() {
  static BoolPtr f = makeb({BoolExpr::Kind::False});
  return f;
}
BoolPtr bcmp(Cmp c, ExprPtr l, ExprPtr r) {
  BoolExpr b{BoolExpr::Kind::Cmp};
  b.cmp = c;
  b.lhs = std::move(l);
  b.rhs = std::move(r);
  return makeb(std::move(b));
}
BoolPtr bflag(const std::string& name) {
  BoolExpr b{BoolExpr::Kind::Flag};
  b.flag = name;
  return makeb(std::move(b));
}
BoolPtr band(BoolPtr x, BoolPtr y) {
  if (x->kind == BoolExpr::Kind::True) return y;
  if (y->kind == BoolExpr::Kind::True) return x;
  if (x->kind == BoolExpr::Kind::False || y->kind == BoolExpr::Kind::False) return bfalse();
  BoolExpr b{BoolExpr::Kind::And};
  b.a = std::move(x);
  b.b = std::move(y);
  return makeb(std::move(b));
}
BoolPtr bor(BoolPtr x, BoolPtr y) {
  if (x->kind == BoolExpr::Kind::False) return y;
  if (y->kind == BoolExpr::Kind::False) return x;
  if (x->kind == BoolExpr::Kind::True || y->kind == BoolExpr::Kind::True) return btrue();
  BoolExpr b{BoolExpr::Kind::Or};
  b.a = std::move(x);
  b.b = std::move(y);
  return makeb(std::move(b));
}
BoolPtr bnot(BoolPtr x) {
  if (x->kind == BoolExpr::Kind::True) return bfalse();
  if (x->kind == BoolExpr::Kind::False) return btrue();
  BoolExpr b{BoolExpr::Kind::Not};
  b.a = std::move(x);
  return makeb(std::move(b));
}

bool eval(const BoolPtr& b, const Valuation& v) {
  switch (b->kind) {
    case BoolExpr::Kind::True: return true;
    case BoolExpr::Kind::False: return false;
    case BoolExpr::Kind::Cmp: {
      double l = eval(b->lhs, v), r = eval(b->rhs, v);
      switch (b->cmp) {
        case Cmp::Lt: return l < r;
        case Cmp::Le: return l <= r;
        case Cmp::Gt: return l > r;
        case Cmp::Ge: return l >= r;
        case Cmp::Eq: return l == r;
        case Cmp::Ne: return l != r;
      }
      return false;
    }
    case BoolExpr::Kind::Flag: {
      auto it = v.find(b->flag);
      return it != v.end() && it->second != 0.0;
    }
    case BoolExpr::Kind::And: return eval(b->a, v) && eval(b->b, v);
    case BoolExpr::Kind::Or: return eval(b->a, v) || eval(b->b, v);
    case BoolExpr::Kind::Not: return !eval(b->a, v);
  }
  return false;
}

void collect_vars(const BoolPtr& b, std::set<std::string>& out) {
  if (!b) return;
  switch (b->kind) {
    case BoolExpr::Kind::Cmp:
      collect_vars(b->lhs, out);
      collect_vars(b->rhs, out);
      break;
    case BoolExpr::Kind::Flag:
      out.insert(b->flag);
      break;
    default:
      collect_vars(b->a, out);
      collect_vars(b->b, out);
  }
}

bool bool_equal(const BoolPtr& a, const BoolPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->hash != b->hash || a->kind != b->kind) return false;
  switch (a->kind) {
    case BoolExpr::Kind::True:
    case BoolExpr::Kind::False: return true;
    case BoolExpr::Kind::Cmp:
      return a->cmp == b->cmp && expr_equal(a->lhs, b->lhs) && expr_equal(a->rhs, b->rhs);
    case BoolExpr::Kind::Flag: return a->flag == b->flag;
    default:
      return bool_equal(a->a, b->a) && bool_equal(a->b, b->b);
  }
}

namespace {

int bprec(BoolExpr::Kind k) {
  switch (k) {
    case BoolExpr::Kind::Or: return 1;
    case BoolExpr::Kind::And: return 2;
    case BoolExpr::Kind::Not: return 3;
    default: return 4;
  }
}

const char* cmp_str(Cmp c) {
  switch (c) {
    case Cmp::Lt: return "<";
    case Cmp::Le: return "<=";
    case Cmp::Gt: return ">";
    case Cmp::Ge: return ">=";
    case Cmp::Eq: return "=";
    case Cmp::Ne: return "!=";
  }
  return "?";
}

void printb(std::ostream& os, const BoolPtr& b, int parent) {
  int p = bprec(b->kind);
  bool paren = p < parent;
  if (paren) os << "(";
  switch (b->kind) {
    case BoolExpr::Kind::True: os << "true"; break;
    case BoolExpr::Kind::False: os << "false"; break;
    case BoolExpr::Kind::Cmp:
      os << to_string(b->lhs) << " " << cmp_str(b->cmp) << " " << to_string(b->rhs);
      break;
    case BoolExpr::Kind::Flag: os << b->flag; break;
    case BoolExpr::Kind::And:
      printb(os, b->a, p);
      os << " && ";
      printb(os, b->b, p);
      break;
    case BoolExpr::Kind::Or:
      printb(os, b->a, p);
      os << " || ";
      printb(os, b->b, p);
      break;
    case BoolExpr::Kind::Not: {
      os << "!";
      bool atom = b->a->kind == BoolExpr::Kind::Flag ||
                  b->a->kind == BoolExpr::Kind::True ||
                  b->a->kind == BoolExpr::Kind::False;
      if (atom) {
        printb(os, b->a, 0);
      } else {
        os << "(";
        printb(os, b->a, 0);
        os << ")";
      }
      break;
    }
  }
  if (paren) os << ")";
}

}  // namespace

std::string to_string(const BoolPtr& b) {
  std::ostringstream os;
  printb(os, b, 0);
  return os.str();
}

BoolPtr substitute_consts(const BoolPtr& b, const std::map<std::string, double>& consts) {
  if (!b) return b;
  switch (b->kind) {
    case BoolExpr::Kind::Cmp:
      return bcmp(b->cmp, substitute_consts(b->lhs, consts), substitute_consts(b->rhs, consts));
    case BoolExpr::Kind::And:
      return band(substitute_consts(b->a, consts), substitute_consts(b->b, consts));
    case BoolExpr::Kind::Or:
      return bor(substitute_consts(b->a, consts), substitute_consts(b->b, consts));
    case BoolExpr::Kind::Not:
      return bnot(substitute_consts(b->a, consts));
    default:
      return b;
  }
}

}  // namespace hcsp
