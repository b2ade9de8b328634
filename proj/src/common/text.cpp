#include "kgfuzz/common/text.hpp"

#include <algorithm>

namespace kgfuzz::text {

std::string_view trim(std::string_view s) noexcept {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto nl = s.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < s.size()) out.emplace_back(s.substr(start));
      break;
    }
    std::string_view line = s.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.emplace_back(line);
    start = nl + 1;
  }
  return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  if (from.empty()) return s;
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

std::string_view basename(std::string_view path) noexcept {
  auto pos = path.find_last_of("/\\");
  return pos == std::string_view::npos ? path : path.substr(pos + 1);
}

std::vector<std::string> identifiers(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (is_ident_start(s[i]) && (i == 0 || !is_ident_char(s[i - 1]))) {
      std::size_t j = i + 1;
      while (j < s.size() && is_ident_char(s[j])) ++j;
      out.emplace_back(s.substr(i, j - i));
      i = j;
    } else {
      ++i;
    }
  }
  return out;
}

bool contains_word(std::string_view s, std::string_view word) noexcept {
  if (word.empty()) return false;
  std::size_t pos = 0;
  while ((pos = s.find(word, pos)) != std::string_view::npos) {
    const bool left = pos == 0 || !is_ident_char(s[pos - 1]);
    const std::size_t end = pos + word.size();
    const bool right = end >= s.size() || !is_ident_char(s[end]);
    if (left && right) return true;
    pos += 1;
  }
  return false;
}

namespace {

std::string substitute(std::string_view tmpl, std::string_view open, std::string_view close_delim,
                       const std::vector<std::pair<std::string, std::string>>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl.compare(i, open.size(), open) == 0) {
      auto close = tmpl.find(close_delim, i + open.size());
      if (close != std::string_view::npos) {
        std::string_view key = tmpl.substr(i + open.size(), close - i - open.size());
        auto it = std::find_if(vars.begin(), vars.end(), [&](const auto& kv) { return kv.first == key; });
        if (it != vars.end()) {
          out += it->second;
          i = close + close_delim.size();
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

}  // namespace

std::string render(std::string_view tmpl, const std::vector<std::pair<std::string, std::string>>& vars) {
  return substitute(tmpl, "{{", "}}", vars);
}

std::string render_command(std::string_view tmpl, const std::vector<std::pair<std::string, std::string>>& vars) {
  return substitute(tmpl, "{", "}", vars);
}

}  // namespace kgfuzz::text
