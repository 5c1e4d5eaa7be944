#pragma once

#include <map>
#include <string>
#include <vector>

#include "choreo/ast.hpp"

namespace choreo {

// ---------------------------------------------------------------------------
// Merging motion primitives: a'' = a ⊓ a' with union of preconditions and
// assumptions, intersection of guarantees, postconditions, footprints, and
// duration windows. The result refines both operands; modes must agree.

struct MotionMerge {
  bool ok = false;
  MotionInstance inst;
  std::string why;  // set on failure, e.g. "mode-mismatch: ..."
};

MotionMerge merge_motion(const MotionInstance& a, const MotionInstance& b);

// ---------------------------------------------------------------------------
// Merging local types (partial). Implements: identity on equal types
// (equi-recursive); union of same-peer branchings; union of branchings with
// merged default motions and a shared default continuation; branching
// absorbed into a branching-with-default; a bare motion absorbed as the
// default of a branching; symmetry. Undefined otherwise.

struct LocalMerge {
  bool ok = false;
  LocalP type;
  std::string why;
};

LocalMerge merge_local(const System& sys, const LocalP& a, const LocalP& b);

// ---------------------------------------------------------------------------
// Projection of a global type onto a participant.

struct ProjectionError {
  enum class Kind { MergeUndefined, ParticipantAbsentInRec, NotInSepBranch };
  Kind kind;
  std::string participant;
  std::string location;  // path into the global type, e.g. "G.2.sep.L"
  std::string detail;
};

std::string projection_error_str(const ProjectionError& e);

struct ProjectResult {
  LocalP type;
  std::vector<ProjectionError> errors;
  bool ok() const { return errors.empty(); }
};

ProjectResult project(const System& sys, const GlobalP& g, const std::string& r);

// Projection for every participant of g, keyed by name.
std::map<std::string, ProjectResult> project_all(const System& sys, const GlobalP& g);

}  // namespace choreo
