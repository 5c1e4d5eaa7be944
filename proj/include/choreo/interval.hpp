#pragma once

#include <map>
#include <string>

#include "choreo/ast.hpp"
#include "choreo/rational.hpp"

namespace choreo {

// Kleene three-valued logic.
enum class TriBool { False, Unknown, True };

inline TriBool tri(bool b) { return b ? TriBool::True : TriBool::False; }
inline TriBool tnot(TriBool a) {
  if (a == TriBool::True) return TriBool::False;
  if (a == TriBool::False) return TriBool::True;
  return TriBool::Unknown;
}
inline TriBool tand(TriBool a, TriBool b) {
  if (a == TriBool::False || b == TriBool::False) return TriBool::False;
  if (a == TriBool::True && b == TriBool::True) return TriBool::True;
  return TriBool::Unknown;
}
inline TriBool tor(TriBool a, TriBool b) {
  if (a == TriBool::True || b == TriBool::True) return TriBool::True;
  if (a == TriBool::False && b == TriBool::False) return TriBool::False;
  return TriBool::Unknown;
}
inline TriBool timp(TriBool a, TriBool b) { return tor(tnot(a), b); }

// A closed rational interval, or Top (no information: unbounded or the result
// of an undefined operation such as division by an interval containing zero).
struct RIval {
  bool top = false;
  Rat lo, hi;

  static RIval make(const Rat& l, const Rat& h) { return RIval{false, l, h}; }
  static RIval point(const Rat& v) { return RIval{false, v, v}; }
  static RIval whole() { return RIval{true, Rat(0), Rat(0)}; }
};

RIval ri_add(const RIval& a, const RIval& b);
RIval ri_sub(const RIval& a, const RIval& b);
RIval ri_mul(const RIval& a, const RIval& b);
RIval ri_div(const RIval& a, const RIval& b);
RIval ri_neg(const RIval& a);
RIval ri_sqrt(const RIval& a, unsigned prec_bits = 64);
RIval ri_min(const RIval& a, const RIval& b);
RIval ri_max(const RIval& a, const RIval& b);
RIval ri_sqr(const RIval& a);  // sharp x*x (no dependency loss)
RIval ri_abs(const RIval& a);  // sharp max(x, -x)

// Environment mapping variables to intervals.
using IEnv = std::map<std::string, RIval>;

// Interval evaluation of an expression; unbound variables yield Top.
RIval eval_expr_interval(const ExprP& e, const IEnv& env);

// Three-valued truth of a predicate over a box.
TriBool eval_pred_interval(const PredP& p, const IEnv& env);

// Exact point evaluation. Returns nullopt when the value is irrational
// (a square root that is not exact). Point evaluation of predicates uses a
// high-precision enclosure in that case and may still return Unknown only
// when a comparison lands inside the enclosure gap.
std::optional<Rat> eval_expr_point(const ExprP& e, const std::map<std::string, Rat>& env);
TriBool eval_pred_point(const PredP& p, const std::map<std::string, Rat>& env);

}  // namespace choreo
