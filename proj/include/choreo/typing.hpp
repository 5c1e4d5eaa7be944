#pragma once

#include <map>
#include <string>
#include <vector>

#include "choreo/ast.hpp"
#include "choreo/checker.hpp"

namespace choreo {

struct TypingOptions {
  CheckerOptions checker;
  // When non-empty, each failing validity query is dumped to this directory
  // as an .smt2 file (named <owner>-<rule>-<n>.smt2) and the path recorded
  // on the issue.
  std::string dump_smt_dir;
};

// ---------------------------------------------------------------------------
// Subtyping T1 <= T2: a subtype has fewer requirements and stronger
// guarantees. Motions compare by contract refinement; selections are
// covariant in guards and payload predicates (and may offer fewer labels);
// branchings are contravariant in payload predicates (and may handle more
// labels); a defaulted branching is a subtype of its own default motion,
// since a sender blocks until the receiver is ready and the extra receive
// arms can never fire.
//
// `owner` is the participant the types belong to: selection guards and
// payload predicates are written in the sender's variable namespace, so
// guards canonicalize through `owner` and branch payloads through the peer.

struct SubtypeResult {
  Verdict verdict = Verdict::Unknown;
  std::vector<std::string> trace;  // rule failures, one line each
  bool holds() const { return verdict == Verdict::Valid; }
};

SubtypeResult subtype(const System& sys, const std::string& owner, const LocalP& a,
                      const LocalP& b, const VarBounds& bounds, const TypingOptions& opts = {});

// ---------------------------------------------------------------------------
// Process typing against a local type, threading a logical context that
// accumulates motion postconditions and received-payload refinements.

struct TypingIssue {
  std::string rule;    // "t-motion", "t-out", "t-choice1", ..., "subtype",
                       // "participant-without-process", "initial-collision"
  std::string where;   // path into the process / session
  std::string detail;
  Verdict verdict = Verdict::Refuted;  // Refuted or Unknown
  std::string smt_file;                // set when dumped
};

struct ProcTypingResult {
  Verdict verdict = Verdict::Valid;
  std::vector<TypingIssue> issues;
  std::vector<std::string> trace;  // rule applications, skipped arms, etc.
  bool ok() const { return verdict == Verdict::Valid; }
};

// Types `p` against `t` for participant `owner` under initial logical
// context `sigma0` (typically the participant's init predicate).
ProcTypingResult type_process(const System& sys, const std::string& owner, const PredP& sigma0,
                              const ProcP& p, const LocalP& t, const TypingOptions& opts = {});

// ---------------------------------------------------------------------------
// Whole-session typing: every participant of the global type has a process,
// each process follows its projection under the participant's init
// predicate, and the initial states are pairwise collision-free.

struct SessionReport {
  Verdict verdict = Verdict::Valid;
  std::map<std::string, ProcTypingResult> participants;  // name-sorted
  std::vector<TypingIssue> session_issues;
  bool ok() const { return verdict == Verdict::Valid; }
};

SessionReport type_session(const System& sys, const TypingOptions& opts = {});

}  // namespace choreo
