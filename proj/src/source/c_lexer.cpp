#include "kgfuzz/source/c_lexer.hpp"

#include <algorithm>
#include <array>

#include "kgfuzz/common/error.hpp"
#include "kgfuzz/common/text.hpp"

namespace kgfuzz::c {
namespace {

constexpr std::array<std::string_view, 22> kMultiPunct = {
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==",
    "!=",  "&&",  "||",  "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
};

bool at_line_start(std::string_view src, std::size_t pos) {
  while (pos > 0) {
    char c = src[pos - 1];
    if (c == '\n') return true;
    if (c != ' ' && c != '\t') return false;
    --pos;
  }
  return true;
}

}  // namespace

LexResult lex(std::string_view src) {
  LexResult out;
  std::size_t i = 0;
  int line = 1;
  const std::size_t n = src.size();

  auto advance_over = [&](std::size_t to) {
    for (std::size_t k = i; k < to && k < n; ++k) {
      if (src[k] == '\n') ++line;
    }
    i = to;
  };

  while (i < n) {
    const char c = src[i];
    if (c == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '/') {
      while (i < n && src[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '*') {
      auto close = src.find("*/", i + 2);
      if (close == std::string_view::npos) {
        throw Error(Errc::ParseFailure, "unterminated comment at line " + std::to_string(line));
      }
      advance_over(close + 2);
      continue;
    }
    if (c == '#' && at_line_start(src, i)) {
      const int start_line = line;
      std::string text;
      std::size_t k = i;
      while (k < n) {
        if (src[k] == '\\' && k + 1 < n && src[k + 1] == '\n') {
          text.push_back(' ');
          k += 2;
          ++line;
          continue;
        }
        if (src[k] == '\n') break;
        // Comments inside directives end the directive text but not the line.
        if (src[k] == '/' && k + 1 < n && src[k + 1] == '*') {
          auto close = src.find("*/", k + 2);
          if (close == std::string_view::npos) {
            throw Error(Errc::ParseFailure, "unterminated comment at line " + std::to_string(line));
          }
          for (std::size_t q = k; q < close; ++q) {
            if (src[q] == '\n') ++line;
          }
          k = close + 2;
          text.push_back(' ');
          continue;
        }
        if (src[k] == '/' && k + 1 < n && src[k + 1] == '/') {
          while (k < n && src[k] != '\n') ++k;
          break;
        }
        text.push_back(src[k]);
        ++k;
      }
      out.directives.push_back({std::string(text::trim(text)), start_line});
      i = k;
      continue;
    }
    if (text::is_ident_start(c)) {
      std::size_t k = i + 1;
      while (k < n && text::is_ident_char(src[k])) ++k;
      // Encoding prefixes: L"..", u8"..", u'..' belong to the literal.
      if (k < n && (src[k] == '"' || src[k] == '\'')) {
        std::string_view word = src.substr(i, k - i);
        if (word == "L" || word == "u" || word == "U" || word == "u8") {
          const char quote = src[k];
          std::size_t q = k + 1;
          while (q < n && src[q] != quote) {
            if (src[q] == '\\') ++q;
            else if (src[q] == '\n') break;
            ++q;
          }
          if (q >= n || src[q] != quote) {
            throw Error(Errc::ParseFailure, "unterminated literal at line " + std::to_string(line));
          }
          out.tokens.push_back({quote == '"' ? TokenKind::String : TokenKind::Char,
                                std::string(src.substr(i, q + 1 - i)), line, i, q + 1});
          i = q + 1;
          continue;
        }
      }
      out.tokens.push_back({TokenKind::Identifier, std::string(src.substr(i, k - i)), line, i, k});
      i = k;
      continue;
    }
    if ((c >= '0' && c <= '9') || (c == '.' && i + 1 < n && src[i + 1] >= '0' && src[i + 1] <= '9')) {
      std::size_t k = i + 1;
      while (k < n) {
        const char d = src[k];
        if (text::is_ident_char(d) || d == '.') {
          ++k;
        } else if ((d == '+' || d == '-') &&
                   (src[k - 1] == 'e' || src[k - 1] == 'E' || src[k - 1] == 'p' || src[k - 1] == 'P')) {
          ++k;
        } else {
          break;
        }
      }
      out.tokens.push_back({TokenKind::Number, std::string(src.substr(i, k - i)), line, i, k});
      i = k;
      continue;
    }
    if (c == '"' || c == '\'') {
      std::size_t k = i + 1;
      while (k < n && src[k] != c) {
        if (src[k] == '\\') ++k;
        else if (src[k] == '\n') break;
        ++k;
      }
      if (k >= n || src[k] != c) {
        throw Error(Errc::ParseFailure, "unterminated literal at line " + std::to_string(line));
      }
      out.tokens.push_back({c == '"' ? TokenKind::String : TokenKind::Char,
                            std::string(src.substr(i, k + 1 - i)), line, i, k + 1});
      i = k + 1;
      continue;
    }
    std::size_t len = 1;
    for (auto p : kMultiPunct) {
      if (src.substr(i, p.size()) == p) {
        len = p.size();
        break;
      }
    }
    out.tokens.push_back({TokenKind::Punct, std::string(src.substr(i, len)), line, i, i + len});
    i += len;
  }
  return out;
}

bool is_keyword(std::string_view w) noexcept {
  static constexpr std::array<std::string_view, 52> kWords = {
      "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else",
      "enum", "extern", "float", "for", "goto", "if", "inline", "int", "long", "register",
      "restrict", "return", "short", "signed", "sizeof", "static", "struct", "switch", "typedef",
      "union", "unsigned", "void", "volatile", "while", "_Alignas", "_Alignof", "_Atomic", "_Bool",
      "_Generic", "_Noreturn", "_Static_assert", "_Thread_local", "__attribute__", "__asm__",
      "asm", "typeof", "__typeof__", "alignof", "defined", "__inline", "__inline__",
      "__extension__"};
  return std::find(kWords.begin(), kWords.end(), w) != kWords.end();
}

bool is_type_keyword(std::string_view w) noexcept {
  static constexpr std::array<std::string_view, 12> kTypes = {
      "void", "char", "short", "int", "long", "float", "double", "signed", "unsigned", "_Bool",
      "bool", "_Complex"};
  return std::find(kTypes.begin(), kTypes.end(), w) != kTypes.end();
}

std::vector<std::string> function_like_macros(const std::vector<Directive>& directives) {
  std::vector<std::string> names;
  for (const auto& d : directives) {
    std::string_view t = d.text;
    if (t.empty() || t.front() != '#') continue;
    t.remove_prefix(1);
    t = text::trim(t);
    if (t.substr(0, 6) != "define") continue;
    t.remove_prefix(6);
    t = text::trim(t);
    std::size_t k = 0;
    while (k < t.size() && text::is_ident_char(t[k])) ++k;
    if (k > 0 && k < t.size() && t[k] == '(') names.emplace_back(t.substr(0, k));
  }
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return names;
}

std::size_t matching_close(const std::vector<Token>& tokens, std::size_t open) noexcept {
  if (open >= tokens.size()) return tokens.size();
  const std::string& o = tokens[open].text;
  const std::string_view close = o == "(" ? ")" : o == "{" ? "}" : o == "[" ? "]" : "";
  if (close.empty()) return tokens.size();
  int depth = 0;
  for (std::size_t k = open; k < tokens.size(); ++k) {
    if (tokens[k].kind != TokenKind::Punct) continue;
    if (tokens[k].text == o) ++depth;
    else if (tokens[k].text == close && --depth == 0) return k;
  }
  return tokens.size();
}

}  // namespace kgfuzz::c
