#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace kgfuzz::text {

std::string_view trim(std::string_view s) noexcept;
std::vector<std::string> split_lines(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string replace_all(std::string s, std::string_view from, std::string_view to);

/// Final path component, treating both '/' and '\\' as separators.
std::string_view basename(std::string_view path) noexcept;

inline bool is_ident_start(char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
inline bool is_ident_char(char c) noexcept { return is_ident_start(c) || (c >= '0' && c <= '9'); }

/// All maximal [A-Za-z_][A-Za-z0-9_]* runs, in order of appearance.
std::vector<std::string> identifiers(std::string_view s);

/// True when `word` occurs in `s` delimited by non-identifier characters.
bool contains_word(std::string_view s, std::string_view word) noexcept;

/// Substitutes `{{key}}` placeholders. Unknown placeholders are left as-is.
std::string render(std::string_view tmpl,
                   const std::vector<std::pair<std::string, std::string>>& vars);

/// Same for shell command templates, which use single-brace `{key}` placeholders.
std::string render_command(std::string_view tmpl,
                           const std::vector<std::pair<std::string, std::string>>& vars);

}  // namespace kgfuzz::text
