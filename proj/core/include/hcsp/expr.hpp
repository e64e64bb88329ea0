#pragma once

#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>

namespace hcsp {

using Valuation = std::map<std::string, double>;

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Arithmetic expression over variables and literals.
struct Expr {
  enum class Kind { Const, Var, Neg, Sqrt, Add, Sub, Mul, Div, Pow };
  Kind kind;
  double value = 0.0;       // Const
  std::string name;         // Var
  ExprPtr lhs, rhs;         // binary ops; unary ops use lhs
  std::size_t hash = 0;
};

ExprPtr econst(double v);
ExprPtr evar(const std::string& name);
ExprPtr eneg(ExprPtr a);
ExprPtr esqrt(ExprPtr a);
ExprPtr eadd(ExprPtr a, ExprPtr b);
ExprPtr esub(ExprPtr a, ExprPtr b);
ExprPtr emul(ExprPtr a, ExprPtr b);
ExprPtr ediv(ExprPtr a, ExprPtr b);
ExprPtr epow(ExprPtr a, ExprPtr b);

double eval(const ExprPtr& e, const Valuation& v);
void collect_vars(const ExprPtr& e, std::set<std::string>& out);
bool expr_equal(const ExprPtr& a, const ExprPtr& b);
std::string to_string(const ExprPtr& e);

/// Substitute constants for variables (used for #const folding).
ExprPtr substitute_consts(const ExprPtr& e, const std::map<std::string, double>& consts);

enum class Cmp { Lt, Le, Gt, Ge, Eq, Ne };

struct BoolExpr;
using BoolPtr = std::shared_ptr<const BoolExpr>;

/// Boolean combination of comparisons; Flag is a readiness variable
/// (a 0/1-valued variable such as "ch?") used as an atom.
struct BoolExpr {
  enum class Kind { True, False, Cmp, Flag, And, Or, Not };
  Kind kind;
  Cmp cmp = Cmp::Lt;
  ExprPtr lhs, rhs;     // Cmp
  std::string flag;     // Flag
  BoolPtr a, b;         // And/Or; Not uses a
  std::size_t hash = 0;
};

BoolPtr btrue();
BoolPtr bfalse();
BoolPtr bcmp(Cmp c, ExprPtr l, ExprPtr r);
BoolPtr bflag(const std::string& name);
BoolPtr band(BoolPtr x, BoolPtr y);  // simplifies with true/false
BoolPtr bor(BoolPtr x, BoolPtr y);
BoolPtr bnot(BoolPtr x);

bool eval(const BoolPtr& b, const Valuation& v);
void collect_vars(const BoolPtr& b, std::set<std::string>& out);
bool bool_equal(const BoolPtr& a, const BoolPtr& b);
std::string to_string(const BoolPtr& b);
BoolPtr substitute_consts(const BoolPtr& b, const std::map<std::string, double>& consts);

}  // namespace hcsp
