#pragma once

#include <optional>
#include <string>

#include "choreo/ast.hpp"
#include "choreo/checker.hpp"

namespace choreo {

// Emit a QF_NRA script that is unsatisfiable exactly when `goal` holds for
// every assignment within `bounds`. Square roots are introduced as auxiliary
// constrained constants, min/max as ite terms.
std::string emit_smt2_validity(const PredP& goal, const VarBounds& bounds);

// Inverse of emit_smt2_validity for scripts this toolchain produced:
// reconstructs the goal (folding the auxiliary square-root constants and the
// ite encodings back into sqrt/min/max) and the bounds.
struct SmtParsed {
  PredP goal;
  VarBounds bounds;
};
SmtParsed parse_smt2_validity(const std::string& text);

// If the environment variable CHOREOVERIFY_SOLVER names an SMT solver
// command, run it (30s timeout) on the emitted script. "unsat" certifies
// Valid. "sat" yields Refuted only when the extracted model exactly
// falsifies the goal on re-evaluation. Returns nullopt when no solver is
// configured or its answer could not be certified.
std::optional<CheckResult> solver_check_validity(const PredP& goal, const VarBounds& bounds);

}  // namespace choreo
