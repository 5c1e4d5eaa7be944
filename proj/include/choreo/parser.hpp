#pragma once

#include <stdexcept>
#include <string>

#include "choreo/ast.hpp"

namespace choreo {

// All parse failures derive from ParseError; `kind` is a stable machine
// readable discriminator and `span` points into the source text.
struct ParseError : std::runtime_error {
  ParseError(std::string kind_, const SrcSpan& span_, const std::string& msg)
      : std::runtime_error(span_.str() + ": " + kind_ + ": " + msg),
        span(span_),
        kind(std::move(kind_)) {}
  SrcSpan span;
  std::string kind;
};

struct LexError : ParseError {
  LexError(const SrcSpan& s, const std::string& m) : ParseError("lex-error", s, m) {}
};
struct SyntaxError : ParseError {
  SyntaxError(const SrcSpan& s, const std::string& m) : ParseError("syntax-error", s, m) {}
};
struct DuplicateLabel : ParseError {
  DuplicateLabel(const SrcSpan& s, const std::string& m) : ParseError("duplicate-label", s, m) {}
};
struct UnguardedRecursion : ParseError {
  UnguardedRecursion(const SrcSpan& s, const std::string& m)
      : ParseError("unguarded-recursion", s, m) {}
};
struct UnknownMotion : ParseError {
  UnknownMotion(const SrcSpan& s, const std::string& m) : ParseError("unknown-motion", s, m) {}
};
struct UnknownParticipant : ParseError {
  UnknownParticipant(const SrcSpan& s, const std::string& m)
      : ParseError("unknown-participant", s, m) {}
};
struct AmbiguousInputVariable : ParseError {
  AmbiguousInputVariable(const SrcSpan& s, const std::string& m)
      : ParseError("ambiguous-input-variable", s, m) {}
};

// Parse a complete .mcc system description (declarations, motion blocks, a
// global type, endpoint processes) and validate name references.
System parse_system(const std::string& source, const std::string& filename = "<input>");

// Standalone entry points used by tests and tools.
GlobalP parse_global(const std::string& source, const std::string& filename = "<global>");
LocalP parse_local(const std::string& source, const std::string& filename = "<local>");
ProcP parse_process(const std::string& source, const std::string& subject,
                    const std::string& filename = "<process>");
PredP parse_pred(const std::string& source, const std::string& filename = "<pred>");
ExprP parse_expr(const std::string& source, const std::string& filename = "<expr>");

}  // namespace choreo
