#pragma once

#include <string>
#include <vector>

#include "choreo/ast.hpp"
#include "choreo/checker.hpp"

namespace choreo {

// Motion contracts are compared and composed under a fixed clock horizon:
// time-dependent obligations are checked for all clock values in [0, 1000].
inline Rat contract_clock_horizon() { return Rat(1000); }

struct ContractOptions {
  CheckerOptions checker;
  // Treat Unknown side conditions as satisfied (reported, not silently):
  // useful to push past conservative interval arithmetic during exploration.
  bool assume_unknown_valid = false;
};

struct ClauseResult {
  std::string clause;  // which obligation, e.g. "pre", "guarantee->assume(B)"
  CheckResult check;
};

// One motion contract refines another when it can stand in for it: it
// accepts every start state the other accepts, assumes no more about the
// environment, guarantees and ensures at least as much, stays within the
// other's footprint and duration window, and has the same interruptibility.
struct RefineReport {
  bool holds = false;     // every clause certified
  bool unknown = false;   // nothing refuted, but some clause unresolved
  std::vector<ClauseResult> clauses;
};

RefineReport refines(const MotionInstance& a, const MotionInstance& b, const VarBounds& bounds,
                     const ContractOptions& opts = {});

// Assume-guarantee composition of two contracts executing jointly.
struct CompatError {
  enum class Kind {
    BothNonInterruptible,
    DurationNotNested,
    FootprintOverlap,
    RefinementClauseFailed,
    UnknownVerdict,
  } kind;
  std::string detail;
};

std::string compat_error_str(const CompatError& e);

struct CompatReport {
  bool ok = false;
  std::vector<CompatError> errors;
  std::vector<ClauseResult> obligations;
  MotionInstance composite;  // meaningful when ok
};

// Pairwise composition: discharges each side's assumption against the
// other's guarantee; requires disjoint footprint shares (the cell annotation
// when present, the declared footprint otherwise) under the joint
// guarantees; requires a non-interruptible side's duration window to sit
// within its partner's; and allows at most one non-interruptible
// participant. The composite carries the intersected window and the union
// of the shares.
CompatReport compose_pair(const MotionInstance& a, const MotionInstance& b,
                          const VarBounds& bounds, const ContractOptions& opts = {});

// Compatibility of a joint motion prefix: left-fold of compose_pair over the
// instantiated atoms. A singleton is trivially compatible.
CompatReport check_compatible(const System& sys, const std::vector<MotionAtom>& atoms,
                              const VarBounds& bounds, const ContractOptions& opts = {});

}  // namespace choreo
