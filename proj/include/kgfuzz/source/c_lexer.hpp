#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace kgfuzz::c {

enum class TokenKind { Identifier, Number, String, Char, Punct };

struct Token {
  TokenKind kind;
  std::string text;
  int line;            // 1-based
  std::size_t begin;   // byte offset into the lexed text
  std::size_t end;     // one past the last byte

  bool is(std::string_view s) const noexcept { return text == s; }
  bool is_ident() const noexcept { return kind == TokenKind::Identifier; }
};

struct Directive {
  std::string text;  // continuation lines joined, leading '#' kept
  int line;
};

struct LexResult {
  std::vector<Token> tokens;
  std::vector<Directive> directives;
};

/// Tokenizes C source. Comments are dropped, preprocessor lines are returned separately
/// and never produce tokens. Throws Error(ParseFailure) on unterminated comments,
/// strings, or character literals.
LexResult lex(std::string_view source);

/// C keywords plus common compiler extensions that can precede '(' without being calls.
bool is_keyword(std::string_view word) noexcept;

/// Builtin type words (int, char, unsigned, ...).
bool is_type_keyword(std::string_view word) noexcept;

/// Names introduced by `#define NAME(` in the given directives.
std::vector<std::string> function_like_macros(const std::vector<Directive>& directives);

/// Index of the token that closes the bracket opened at `open`, or tokens.size().
std::size_t matching_close(const std::vector<Token>& tokens, std::size_t open) noexcept;

}  // namespace kgfuzz::c
