#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tslv/errors.hpp"
#include "tslv/timescale.hpp"

namespace tslv {

// Expression AST for the coefficient/delay/impulse grammar:
//
//   expr   := term (('+' | '-') term)*
//   term   := factor (('*' | '/') factor)*
//   factor := number | var | 'pi' | func '(' expr ')'
//           | 'pow' '(' expr ',' expr ')' | '(' expr ')' | '-' factor
//   func   := 'sin' | 'cos' | 'abs' | 'sqrt' | 'exp'
//
// Structural rules enforced at parse time keep evaluation total on the whole
// real line: divisors must be nonzero constants, sqrt arguments nonnegative
// constants, and pow bases positive constants.
enum class ExprKind {
  Const, Var, Pi,
  Add, Sub, Mul, Div,
  Neg, Abs, Sin, Cos, Sqrt, Exp,
  Pow,
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  ExprKind kind = ExprKind::Const;
  double value = 0.0;  // Const payload
  ExprPtr a, b;        // operands: unary nodes use a; binary nodes use a, b
};

ExprPtr make_const(double v);
ExprPtr make_var();

// Parses `text` with `var` as the free-variable name (default "t"; impulse
// magnitude sequences use "k"). Throws ParseError with the character offset
// of the offending token, or ValidationError for structural-rule breaches.
ExprPtr parse_expr(const std::string& text, const std::string& var = "t");

double eval(const Expr& e, double t);
inline double eval(const ExprPtr& e, double t) { return eval(*e, t); }

// Canonical fully parenthesized rendering; parse(render(e)) is structurally
// identical to e.
std::string render(const Expr& e, const std::string& var = "t");
inline std::string render(const ExprPtr& e, const std::string& var = "t") {
  return render(*e, var);
}

bool structurally_equal(const Expr& x, const Expr& y);

// True when the expression contains no Var node (so it folds to a number).
bool is_constant(const Expr& e);

// Symbolic derivative with respect to the free variable. abs differentiates
// to sign(u)*u' (the kink set has measure zero; sampled sups are unaffected).
ExprPtr differentiate(const ExprPtr& e);

// Flat postfix program for fast repeated evaluation (the sampling passes and
// the simulators evaluate the same expressions millions of times).
class CompiledExpr {
 public:
  CompiledExpr() = default;
  explicit CompiledExpr(const Expr& e);
  explicit CompiledExpr(const ExprPtr& e) : CompiledExpr(*e) {}
  double operator()(double t) const;
  bool empty() const noexcept { return ops_.empty(); }

 private:
  struct Op {
    ExprKind kind;
    double value;  // Const payload
  };
  std::vector<Op> ops_;
  mutable std::vector<double> stack_;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Conservative interval enclosure of the range over the whole real line.
Interval enclosure(const Expr& e);

struct SamplingConfig {
  double window = 2000.0;        // extrema sampled over [0, window]
  double points_per_unit = 40.0; // base grid density on the reals
  int refine = 4;                // density multiplier for the pass around each extremum
};

struct Extremes {
  double sup = 0.0;
  double inf = 0.0;
  double arg_sup = 0.0;
  double arg_inf = 0.0;
  Interval outer;  // interval enclosure; always contains [inf, sup]
};

// Deterministic two-pass grid search: a uniform scan of [0, window] (on a
// lattice, its grid points) followed by a refined scan around each extremum.
Extremes extremes(const Expr& e, const TimeScaleSpec& ts,
                  const SamplingConfig& cfg = {});
inline Extremes extremes(const ExprPtr& e, const TimeScaleSpec& ts,
                         const SamplingConfig& cfg = {}) {
  return extremes(*e, ts, cfg);
}

// sup of the delta derivative over the sampling window: the symbolic
// derivative on the reals, the forward difference (f(t+h)-f(t))/h on a
// lattice.
double derivative_sup(const ExprPtr& e, const TimeScaleSpec& ts,
                      const SamplingConfig& cfg = {});

}  // namespace tslv
