#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cbi/error.hpp"

namespace cbi::detail {

enum class Tok : std::uint8_t {
  Ident,  // identifiers and keywords; `upper` holds the key
  Int,
  Real,
  Time,
  Assign,     // :=
  Arrow,      // =>
  Colon,      // :
  Semi,       // ;
  Comma,      // ,
  Dot,        // .
  DotDot,     // ..
  LParen,
  RParen,
  Plus,
  Minus,
  Star,
  Slash,
  Amp,  // & (AND)
  Eq,
  Ne,
  Lt,
  Le,
  Gt,
  Ge,
  End,
};

struct Token {
  Tok kind{Tok::End};
  std::string text;
  std::string upper;
  SourceSpan span;
  std::int64_t int_value{0};
  double real_value{0.0};  // Real literal; Time literal in milliseconds
};

std::string describe(const Token& t);

/// Splits ST source into tokens. Comments `(* ... *)` (nestable) and `// ...`
/// are skipped. Throws SyntaxError on malformed literals or stray characters.
std::vector<Token> tokenize(std::string_view source);

}  // namespace cbi::detail
