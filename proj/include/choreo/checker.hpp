#pragma once

#include <map>
#include <string>

#include "choreo/ast.hpp"
#include "choreo/interval.hpp"

namespace choreo {

enum class Verdict { Valid, Refuted, Unknown };

inline const char* verdict_str(Verdict v) {
  switch (v) {
    case Verdict::Valid: return "valid";
    case Verdict::Refuted: return "refuted";
    case Verdict::Unknown: return "unknown";
  }
  return "unknown";
}

struct CheckResult {
  Verdict verdict = Verdict::Unknown;
  std::map<std::string, Rat> witness;  // a falsifying assignment when Refuted
  std::string note;
};

struct CheckerOptions {
  int max_depth = 48;        // bisection depth along one search path
  long node_budget = 30000;  // total boxes examined before giving up
  bool use_solver = true;     // consult CHOREOVERIFY_SOLVER when Unknown
  unsigned sqrt_bits = 64;    // enclosure precision for irrational square roots
};

// Decide whether `goal` holds for every assignment of its free variables
// within `bounds`. Sound in both directions: Valid and Refuted verdicts are
// certified (by interval arithmetic over a full cover, and by an exact
// witness re-evaluation, respectively); everything else is Unknown.
CheckResult check_validity(const PredP& goal, const VarBounds& bounds,
                           const CheckerOptions& opts = {});

// Do the two footprints share no point, for all states within bounds and all
// positions within the world box carried in `bounds` (px/py/pz entries)?
CheckResult footprints_disjoint(const Footprint& a, const Footprint& b, const VarBounds& bounds,
                                const CheckerOptions& opts = {});

// Footprint containment: every point of `inner` lies in `outer`.
CheckResult footprint_within(const Footprint& inner, const Footprint& outer,
                             const VarBounds& bounds, const CheckerOptions& opts = {});

// Bounds helpers.
VarBounds bounds_union(const VarBounds& a, const VarBounds& b);

// World box for the position variables px/py/pz, derived from the magnitude
// of the declared state bounds. Footprint predicates are only ever required
// to be separated within this operational envelope.
VarBounds with_world_box(const System& sys);

}  // namespace choreo
