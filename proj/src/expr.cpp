#include "tslv/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

namespace tslv {

namespace {

constexpr double kPi = 3.14159265358979323846;
const double kInf = std::numeric_limits<double>::infinity();

ExprPtr node(ExprKind k, ExprPtr a = nullptr, ExprPtr b = nullptr, double v = 0.0) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->value = v;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}

// Internal marker kind used only inside derivative trees (never produced by
// the parser): sign(u) with sign(0) = 0. Reuses the enum slot after Pow.
constexpr ExprKind kSign = static_cast<ExprKind>(static_cast<int>(ExprKind::Pow) + 1);

}  // namespace

ExprPtr make_const(double v) { return node(ExprKind::Const, nullptr, nullptr, v); }
ExprPtr make_var() { return node(ExprKind::Var); }

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Parser {
 public:
  Parser(const std::string& text, const std::string& var) : text_(text), var_(var) {}

  ExprPtr run() {
    ExprPtr e = expr();
    skip_ws();
    if (pos_ != text_.size())
      throw ParseError("unexpected trailing input '" + text_.substr(pos_) + "'", pos_);
    return e;
  }

 private:
  const std::string& text_;
  const std::string& var_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool match(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c, const char* what) {
    if (!match(c)) throw ParseError(std::string("expected '") + c + "' " + what, pos_);
  }

  ExprPtr expr() {
    ExprPtr e = term();
    for (;;) {
      if (match('+')) e = node(ExprKind::Add, e, term());
      else if (match('-')) e = node(ExprKind::Sub, e, term());
      else return e;
    }
  }

  ExprPtr term() {
    ExprPtr e = factor();
    for (;;) {
      if (match('*')) e = node(ExprKind::Mul, e, factor());
      else if (match('/')) e = node(ExprKind::Div, e, factor());
      else return e;
    }
  }

  ExprPtr factor() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = text_[pos_];
    if (c == '-') {
      ++pos_;
      return node(ExprKind::Neg, factor());
    }
    if (c == '(') {
      ++pos_;
      ExprPtr e = expr();
      expect(')', "to close parenthesized expression");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  ExprPtr number() {
    const char* begin = text_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) throw ParseError("malformed number", pos_);
    pos_ += static_cast<std::size_t>(end - begin);
    return make_const(v);
  }

  ExprPtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string name = text_.substr(start, pos_ - start);
    if (name == var_) return make_var();
    if (name == "pi") return node(ExprKind::Pi);
    ExprKind k;
    if (name == "sin") k = ExprKind::Sin;
    else if (name == "cos") k = ExprKind::Cos;
    else if (name == "abs") k = ExprKind::Abs;
    else if (name == "sqrt") k = ExprKind::Sqrt;
    else if (name == "exp") k = ExprKind::Exp;
    else if (name == "pow") {
      expect('(', "after 'pow'");
      ExprPtr base = expr();
      expect(',', "between pow arguments");
      ExprPtr expo = expr();
      expect(')', "to close 'pow'");
      return node(ExprKind::Pow, base, expo);
    } else {
      throw ParseError("unknown identifier '" + name + "' (free variable here is '" + var_ + "')",
                       start);
    }
    expect('(', ("after '" + name + "'").c_str());
    ExprPtr arg = expr();
    expect(')', ("to close '" + name + "'").c_str());
    return node(k, arg);
  }
};

// Structural rules that keep evaluation total everywhere.
void validate(const Expr& e) {
  if (e.a) validate(*e.a);
  if (e.b) validate(*e.b);
  switch (e.kind) {
    case ExprKind::Div:
      if (!is_constant(*e.b))
        throw ValidationError("divisor must be a constant expression, got '" + render(*e.b) + "'");
      if (eval(*e.b, 0.0) == 0.0) throw ValidationError("division by zero constant");
      break;
    case ExprKind::Sqrt:
      if (!is_constant(*e.a))
        throw ValidationError("sqrt argument must be a constant expression, got '" +
                              render(*e.a) + "'");
      if (eval(*e.a, 0.0) < 0.0) throw ValidationError("sqrt of a negative constant");
      break;
    case ExprKind::Pow:
      if (!is_constant(*e.a))
        throw ValidationError("pow base must be a constant expression, got '" + render(*e.a) + "'");
      if (!(eval(*e.a, 0.0) > 0.0)) throw ValidationError("pow base must be a positive constant");
      break;
    default:
      break;
  }
}

}  // namespace

ExprPtr parse_expr(const std::string& text, const std::string& var) {
  Parser p(text, var);
  ExprPtr e = p.run();
  validate(*e);
  return e;
}

// ---------------------------------------------------------------------------
// Evaluation and queries

double eval(const Expr& e, double t) {
  switch (e.kind) {
    case ExprKind::Const: return e.value;
    case ExprKind::Var: return t;
    case ExprKind::Pi: return kPi;
    case ExprKind::Add: return eval(*e.a, t) + eval(*e.b, t);
    case ExprKind::Sub: return eval(*e.a, t) - eval(*e.b, t);
    case ExprKind::Mul: return eval(*e.a, t) * eval(*e.b, t);
    case ExprKind::Div: return eval(*e.a, t) / eval(*e.b, t);
    case ExprKind::Neg: return -eval(*e.a, t);
    case ExprKind::Abs: return std::fabs(eval(*e.a, t));
    case ExprKind::Sin: return std::sin(eval(*e.a, t));
    case ExprKind::Cos: return std::cos(eval(*e.a, t));
    case ExprKind::Sqrt: return std::sqrt(eval(*e.a, t));
    case ExprKind::Exp: return std::exp(eval(*e.a, t));
    case ExprKind::Pow: return std::pow(eval(*e.a, t), eval(*e.b, t));
    default: {
      const double u = eval(*e.a, t);  // kSign
      return u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
    }
  }
}

bool is_constant(const Expr& e) {
  if (e.kind == ExprKind::Var) return false;
  if (e.a && !is_constant(*e.a)) return false;
  if (e.b && !is_constant(*e.b)) return false;
  return true;
}

bool structurally_equal(const Expr& x, const Expr& y) {
  if (x.kind != y.kind) return false;
  if (x.kind == ExprKind::Const && x.value != y.value) return false;
  if (static_cast<bool>(x.a) != static_cast<bool>(y.a)) return false;
  if (static_cast<bool>(x.b) != static_cast<bool>(y.b)) return false;
  if (x.a && !structurally_equal(*x.a, *y.a)) return false;
  if (x.b && !structurally_equal(*x.b, *y.b)) return false;
  return true;
}

namespace {

// Shortest decimal string that round-trips through strtod.
std::string render_number(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

}  // namespace

std::string render(const Expr& e, const std::string& var) {
  switch (e.kind) {
    case ExprKind::Const: return render_number(e.value);
    case ExprKind::Var: return var;
    case ExprKind::Pi: return "pi";
    case ExprKind::Add: return "(" + render(*e.a, var) + " + " + render(*e.b, var) + ")";
    case ExprKind::Sub: return "(" + render(*e.a, var) + " - " + render(*e.b, var) + ")";
    case ExprKind::Mul: return "(" + render(*e.a, var) + " * " + render(*e.b, var) + ")";
    case ExprKind::Div: return "(" + render(*e.a, var) + " / " + render(*e.b, var) + ")";
    case ExprKind::Neg: return "(-" + render(*e.a, var) + ")";
    case ExprKind::Abs: return "abs(" + render(*e.a, var) + ")";
    case ExprKind::Sin: return "sin(" + render(*e.a, var) + ")";
    case ExprKind::Cos: return "cos(" + render(*e.a, var) + ")";
    case ExprKind::Sqrt: return "sqrt(" + render(*e.a, var) + ")";
    case ExprKind::Exp: return "exp(" + render(*e.a, var) + ")";
    case ExprKind::Pow:
      return "pow(" + render(*e.a, var) + ", " + render(*e.b, var) + ")";
    default: return "sign(" + render(*e.a, var) + ")";  // debug only, not parseable
  }
}

// ---------------------------------------------------------------------------
// Differentiation

namespace {

bool is_const_value(const ExprPtr& e, double v) {
  return e->kind == ExprKind::Const && e->value == v;
}

ExprPtr mk_add(ExprPtr x, ExprPtr y) {
  if (is_const_value(x, 0.0)) return y;
  if (is_const_value(y, 0.0)) return x;
  if (x->kind == ExprKind::Const && y->kind == ExprKind::Const)
    return make_const(x->value + y->value);
  return node(ExprKind::Add, std::move(x), std::move(y));
}

ExprPtr mk_sub(ExprPtr x, ExprPtr y) {
  if (is_const_value(y, 0.0)) return x;
  if (x->kind == ExprKind::Const && y->kind == ExprKind::Const)
    return make_const(x->value - y->value);
  return node(ExprKind::Sub, std::move(x), std::move(y));
}

ExprPtr mk_mul(ExprPtr x, ExprPtr y) {
  if (is_const_value(x, 0.0) || is_const_value(y, 0.0)) return make_const(0.0);
  if (is_const_value(x, 1.0)) return y;
  if (is_const_value(y, 1.0)) return x;
  if (x->kind == ExprKind::Const && y->kind == ExprKind::Const)
    return make_const(x->value * y->value);
  return node(ExprKind::Mul, std::move(x), std::move(y));
}

ExprPtr mk_neg(ExprPtr x) {
  if (x->kind == ExprKind::Const) return make_const(-x->value);
  return node(ExprKind::Neg, std::move(x));
}

}  // namespace

ExprPtr differentiate(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::Const:
    case ExprKind::Pi:
    case ExprKind::Sqrt:  // constant subtree by validation
      return make_const(0.0);
    case ExprKind::Var: return make_const(1.0);
    case ExprKind::Add: return mk_add(differentiate(e->a), differentiate(e->b));
    case ExprKind::Sub: return mk_sub(differentiate(e->a), differentiate(e->b));
    case ExprKind::Mul:
      return mk_add(mk_mul(differentiate(e->a), e->b), mk_mul(e->a, differentiate(e->b)));
    case ExprKind::Div:  // divisor is constant by validation
      return node(ExprKind::Div, differentiate(e->a), e->b);
    case ExprKind::Neg: return mk_neg(differentiate(e->a));
    case ExprKind::Abs:  // sign(u) * u'; the kink set has measure zero
      return mk_mul(node(kSign, e->a), differentiate(e->a));
    case ExprKind::Sin: return mk_mul(node(ExprKind::Cos, e->a), differentiate(e->a));
    case ExprKind::Cos: return mk_neg(mk_mul(node(ExprKind::Sin, e->a), differentiate(e->a)));
    case ExprKind::Exp: return mk_mul(node(ExprKind::Exp, e->a), differentiate(e->a));
    case ExprKind::Pow: {  // base is a positive constant: (c^u)' = c^u ln(c) u'
      const double c = eval(*e->a, 0.0);
      return mk_mul(mk_mul(node(ExprKind::Pow, e->a, e->b), make_const(std::log(c))),
                    differentiate(e->b));
    }
    default: return make_const(0.0);  // kSign: zero a.e.
  }
}

// ---------------------------------------------------------------------------
// Compiled evaluation

CompiledExpr::CompiledExpr(const Expr& e) {
  std::size_t depth = 0, max_depth = 0;
  // Iterative postorder flatten.
  struct Frame { const Expr* e; int stage; };
  std::vector<Frame> todo{{&e, 0}};
  while (!todo.empty()) {
    Frame& f = todo.back();
    if (f.stage == 0) {
      f.stage = 1;
      if (f.e->a) todo.push_back({f.e->a.get(), 0});
      continue;
    }
    if (f.stage == 1) {
      f.stage = 2;
      if (f.e->b) todo.push_back({f.e->b.get(), 0});
      continue;
    }
    const Expr* n = f.e;
    todo.pop_back();
    ops_.push_back({n->kind, n->value});
    const std::size_t args = (n->a ? 1u : 0u) + (n->b ? 1u : 0u);
    depth = depth - args + 1;
    if (depth > max_depth) max_depth = depth;
  }
  stack_.resize(max_depth);
}

double CompiledExpr::operator()(double t) const {
  double* sp = stack_.data();
  std::size_t top = 0;
  for (const Op& op : ops_) {
    switch (op.kind) {
      case ExprKind::Const: sp[top++] = op.value; break;
      case ExprKind::Var: sp[top++] = t; break;
      case ExprKind::Pi: sp[top++] = kPi; break;
      case ExprKind::Add: --top; sp[top - 1] += sp[top]; break;
      case ExprKind::Sub: --top; sp[top - 1] -= sp[top]; break;
      case ExprKind::Mul: --top; sp[top - 1] *= sp[top]; break;
      case ExprKind::Div: --top; sp[top - 1] /= sp[top]; break;
      case ExprKind::Neg: sp[top - 1] = -sp[top - 1]; break;
      case ExprKind::Abs: sp[top - 1] = std::fabs(sp[top - 1]); break;
      case ExprKind::Sin: sp[top - 1] = std::sin(sp[top - 1]); break;
      case ExprKind::Cos: sp[top - 1] = std::cos(sp[top - 1]); break;
      case ExprKind::Sqrt: sp[top - 1] = std::sqrt(sp[top - 1]); break;
      case ExprKind::Exp: sp[top - 1] = std::exp(sp[top - 1]); break;
      case ExprKind::Pow: --top; sp[top - 1] = std::pow(sp[top - 1], sp[top]); break;
      default: {
        const double u = sp[top - 1];
        sp[top - 1] = u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
        break;
      }
    }
  }
  return sp[0];
}

// ---------------------------------------------------------------------------
// Interval enclosure

namespace {

Interval iv(double lo, double hi) { return {lo, hi}; }

double safe_mul(double x, double y) {
  // 0 * inf arises only when one factor's interval is the point 0; the
  // correct product bound is then 0.
  if (x == 0.0 || y == 0.0) return 0.0;
  return x * y;
}

Interval iv_mul(const Interval& x, const Interval& y) {
  const double c[4] = {safe_mul(x.lo, y.lo), safe_mul(x.lo, y.hi), safe_mul(x.hi, y.lo),
                       safe_mul(x.hi, y.hi)};
  double lo = c[0], hi = c[0];
  for (double v : c) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  return {lo, hi};
}

}  // namespace

Interval enclosure(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Const: return iv(e.value, e.value);
    case ExprKind::Pi: return iv(kPi, kPi);
    case ExprKind::Var: return iv(-kInf, kInf);
    case ExprKind::Add: {
      Interval a = enclosure(*e.a), b = enclosure(*e.b);
      return iv(a.lo + b.lo, a.hi + b.hi);
    }
    case ExprKind::Sub: {
      Interval a = enclosure(*e.a), b = enclosure(*e.b);
      return iv(a.lo - b.hi, a.hi - b.lo);
    }
    case ExprKind::Mul: return iv_mul(enclosure(*e.a), enclosure(*e.b));
    case ExprKind::Div: {
      Interval a = enclosure(*e.a);
      const double c = eval(*e.b, 0.0);  // constant by validation
      if (c == 0.0) return iv(-kInf, kInf);
      return c > 0.0 ? iv(a.lo / c, a.hi / c) : iv(a.hi / c, a.lo / c);
    }
    case ExprKind::Neg: {
      Interval a = enclosure(*e.a);
      return iv(-a.hi, -a.lo);
    }
    case ExprKind::Abs: {
      Interval a = enclosure(*e.a);
      if (a.lo >= 0.0) return a;
      if (a.hi <= 0.0) return iv(-a.hi, -a.lo);
      return iv(0.0, std::max(-a.lo, a.hi));
    }
    case ExprKind::Sin: {
      Interval a = enclosure(*e.a);
      if (a.lo == a.hi) return iv(std::sin(a.lo), std::sin(a.lo));
      return iv(-1.0, 1.0);
    }
    case ExprKind::Cos: {
      Interval a = enclosure(*e.a);
      if (a.lo == a.hi) return iv(std::cos(a.lo), std::cos(a.lo));
      return iv(-1.0, 1.0);
    }
    case ExprKind::Sqrt: {
      const double v = std::sqrt(eval(*e.a, 0.0));
      return iv(v, v);
    }
    case ExprKind::Exp: {
      Interval a = enclosure(*e.a);
      return iv(std::exp(a.lo), std::exp(a.hi));
    }
    case ExprKind::Pow: {
      const double c = eval(*e.a, 0.0);  // positive constant by validation
      Interval x = enclosure(*e.b);
      const double p = std::pow(c, x.lo), q = std::pow(c, x.hi);
      return c >= 1.0 ? iv(p, q) : iv(q, p);
    }
    default: {  // kSign
      Interval a = enclosure(*e.a);
      if (a.lo > 0.0) return iv(1.0, 1.0);
      if (a.hi < 0.0) return iv(-1.0, -1.0);
      return iv(-1.0, 1.0);
    }
  }
}

// ---------------------------------------------------------------------------
// Sampled extrema

namespace {

struct ScanResult {
  double max = -kInf, arg_max = 0.0;
  double min = kInf, arg_min = 0.0;
  void consider(double t, double v) {
    if (v > max) { max = v; arg_max = t; }
    if (v < min) { min = v; arg_min = t; }
  }
};

// Uniform scan of [a, b] with `count` points (count >= 2 assumed).
void scan_uniform(const CompiledExpr& f, double a, double b, long count, ScanResult& r) {
  for (long i = 0; i < count; ++i) {
    const double t = a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1);
    r.consider(t, f(t));
  }
}

ScanResult scan_reals(const CompiledExpr& f, const SamplingConfig& cfg) {
  const double spacing = 1.0 / cfg.points_per_unit;
  const long count = static_cast<long>(cfg.window * cfg.points_per_unit) + 1;
  ScanResult r;
  scan_uniform(f, 0.0, cfg.window, count, r);
  // One refinement pass at refine-fold density around each extremum.
  const int rf = cfg.refine > 1 ? cfg.refine : 1;
  for (double center : {r.arg_max, r.arg_min}) {
    const double a = std::max(0.0, center - spacing);
    const double b = std::min(cfg.window, center + spacing);
    scan_uniform(f, a, b, 2 * rf + 1, r);
  }
  return r;
}

ScanResult scan_lattice(const CompiledExpr& f, double step, double window) {
  const long long count = static_cast<long long>(std::floor(window / step)) + 1;
  ScanResult r;
  for (long long i = 0; i < count; ++i) {
    const double t = step * static_cast<double>(i);
    r.consider(t, f(t));
  }
  return r;
}

}  // namespace

Extremes extremes(const Expr& e, const TimeScaleSpec& ts, const SamplingConfig& cfg) {
  if (!(cfg.window > 0.0) || !(cfg.points_per_unit > 0.0))
    throw DomainError("extremes: window and points_per_unit must be positive");
  const CompiledExpr f(e);
  const ScanResult r = ts.is_lattice() ? scan_lattice(f, ts.step, cfg.window)
                                       : scan_reals(f, cfg);
  Extremes out;
  out.sup = r.max;
  out.inf = r.min;
  out.arg_sup = r.arg_max;
  out.arg_inf = r.arg_min;
  out.outer = enclosure(e);
  return out;
}

double derivative_sup(const ExprPtr& e, const TimeScaleSpec& ts, const SamplingConfig& cfg) {
  if (ts.is_lattice()) {
    const CompiledExpr f(*e);
    const double h = ts.step;
    const long long count = static_cast<long long>(std::floor(cfg.window / h));
    double best = -kInf;
    for (long long i = 0; i < count; ++i) {
      const double t = h * static_cast<double>(i);
      const double d = (f(t + h) - f(t)) / h;
      if (d > best) best = d;
    }
    return best;
  }
  const CompiledExpr df(*differentiate(e));
  return scan_reals(df, cfg).max;
}

}  // namespace tslv
