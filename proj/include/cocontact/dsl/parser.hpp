#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "cocontact/dsl/expr.hpp"
#include "cocontact/dsl/params.hpp"

namespace cocontact::dsl {

class ParseError : public std::runtime_error {
 public:
  enum class Kind { kSyntax, kUnknownIdentifier, kArity, kForbiddenVariable };

  ParseError(Kind kind, std::size_t offset, const std::string& message);

  Kind kind() const { return kind_; }
  /// Byte offset into the source text where the problem was detected.
  std::size_t offset() const { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

const char* to_string(ParseError::Kind kind);

struct ParseOptions {
  int n = 1;
  /// Admit p1..pn (constraint expressions on the Pontryagin space).
  bool allow_p = false;
  /// When set, identifiers that are neither coordinates, functions nor `pi`
  /// must name an entry of this table. When null any such identifier becomes
  /// a free parameter bound at evaluation time.
  const ParamTable* params = nullptr;
};

/// Grammar (whitespace between tokens is ignored):
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := ('-' | '+') unary | power
///   power   := primary ('^' unary)?
///   primary := number | identifier | identifier '(' expr (',' expr)* ')' | '(' expr ')'
Expr parse(std::string_view text, const ParseOptions& options);

inline Expr parse(std::string_view text, int n, bool allow_p = false) {
  ParseOptions options;
  options.n = n;
  options.allow_p = allow_p;
  return parse(text, options);
}

}  // namespace cocontact::dsl
