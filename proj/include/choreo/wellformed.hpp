#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "choreo/ast.hpp"
#include "choreo/contracts.hpp"

namespace choreo {

// ---------------------------------------------------------------------------
// Events of the once-unfolded choreography tree. Each recursion body is laid
// out twice: the second copy is marked virtual and supplies the targets of
// cross-iteration orderings without being checked itself.

struct ChoreoEvent {
  enum class Kind { Message, Motion };
  Kind kind = Kind::Message;
  bool virt = false;            // lives in a re-expanded loop body
  std::set<std::string> parts;  // participants taking part
  std::set<std::string> scope;  // scope label at this leaf
  // Message
  std::string from, to, label;
  PredP guard;
  // Motion
  std::vector<MotionAtom> atoms;
  SrcSpan span;
  std::string str() const;  // short description for reports
};

struct ChoreoGraph {
  std::vector<ChoreoEvent> events;
  // hb is the happens-before strict partial order (closed under
  // transitivity); imm is its transitive reduction.
  std::vector<std::vector<bool>> hb, imm;
  int n() const { return static_cast<int>(events.size()); }
};

// ---------------------------------------------------------------------------
// Verdict structure. Every violation belongs to one of the four clauses of
// the well-formedness definition.

enum class WfClause { TotalChoice, WellScoped, Motion, Sync };

enum class WfKind {
  // structure and scope
  UnboundTypeVar,
  SelfMessage,
  ScopeError,    // leaf participants escape the scope label
  NonPartition,  // '*' operand participant sets intersect
  ForeignVariable,  // a guard/refinement/argument reads a variable its
                    // writer does not own
  ChoiceShape,      // an alternative does not open with a shared-endpoint
                    // message (parser enforces this; defensive)
  DuplicateChoiceLabel,
  // fully-separated
  CellsOverlap,
  FootprintEscapesCell,
  AssumeCrossesBoundary,
  // total choice
  ChoiceNotTotal,
  // total and compatible motion
  MotionNotTotal,      // executors differ from the scope label
  MotionIncompatible,  // assume-guarantee composition failed
  EmptyJointWindow,    // the joint duration window is empty
  // synchronisability
  UmcViolation,       // competing (or missing) minimal communications
  MotionAfterMotion,  // a motion's immediate successor is a motion
  SenderNotReady,     // a non-sender holds the non-interruptible motion
  TotalSyncViolation, // a participant is not notified between motions
  // unresolved semantic side conditions
  UnknownObligation,
};

const char* wf_kind_str(WfKind k);
const char* wf_clause_str(WfClause c);

struct WfViolation {
  WfKind kind;
  WfClause clause;
  std::string where;  // source position when known
  std::string detail;
};

struct WfOptions {
  ContractOptions contracts;
};

struct WfReport {
  std::vector<WfViolation> violations;
  // Sender of the unique minimal communication after each motion event
  // (keyed by event index in the graph).
  std::map<int, std::string> minimal_sender;
  std::vector<std::string> notes;

  bool ok() const { return violations.empty(); }
  bool clause_ok(WfClause c) const;
  bool has(WfKind k) const;
  std::string summary() const;  // one line, all four clauses
};

// Builds the event set of the global type (one virtual re-expansion per
// recursion binder), labels scopes top-down, and closes the happens-before
// relation. Scope and shape violations found during the walk are appended
// to `rep` when given.
ChoreoGraph build_choreo_graph(const System& sys, WfReport* rep = nullptr);

// Clause 1: every branching's guard disjunction is valid (a lone message is
// a one-armed branching).
void check_total_choice(const System& sys, const WfOptions& opts, WfReport& rep);

// Clause 2 (second half): every separation's sides occupy disjoint space
// cells and assume nothing about the other side's state.
void check_fully_separated(const System& sys, const WfOptions& opts, WfReport& rep);

// Clause 3: every motion engages exactly the participants in scope and the
// engaged contracts compose.
void check_motion_compat(const System& sys, const ChoreoGraph& g, const WfOptions& opts,
                         WfReport& rep);

// Clause 4: unique minimal communication, sender readiness, and total
// synchronisation over the happens-before order.
void check_synchronisability(const System& sys, const ChoreoGraph& g, WfReport& rep);

// All four clauses over a parsed system.
WfReport check_well_formed(const System& sys, const WfOptions& opts = {});

}  // namespace choreo
