#include "kgfuzz/common/glob.hpp"

namespace kgfuzz {

bool glob_match(std::string_view pattern, std::string_view path) noexcept {
  std::size_t p = 0;
  std::size_t s = 0;
  while (p < pattern.size()) {
    const char c = pattern[p];
    if (c == '*' && p + 1 < pattern.size() && pattern[p + 1] == '*') {
      std::string_view rest = pattern.substr(p + 2);
      if (!rest.empty() && rest.front() == '/') {
        // "**/" matches zero or more whole segments.
        std::string_view after = rest.substr(1);
        if (glob_match(after, path.substr(s))) return true;
        for (std::size_t i = s; i < path.size(); ++i) {
          if (path[i] == '/' && glob_match(after, path.substr(i + 1))) return true;
        }
        return false;
      }
      for (std::size_t i = s; i <= path.size(); ++i) {
        if (glob_match(rest, path.substr(i))) return true;
      }
      return false;
    }
    if (c == '*') {
      std::string_view rest = pattern.substr(p + 1);
      for (std::size_t i = s; i <= path.size(); ++i) {
        if (glob_match(rest, path.substr(i))) return true;
        if (i < path.size() && path[i] == '/') break;
      }
      return false;
    }
    if (s >= path.size()) return false;
    if (c == '?') {
      if (path[s] == '/') return false;
    } else if (c != path[s]) {
      return false;
    }
    ++p;
    ++s;
  }
  return s == path.size();
}

}  // namespace kgfuzz
