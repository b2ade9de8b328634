#pragma once

#include <string_view>

namespace kgfuzz {

/// Shell-style match of a '/'-separated relative path. `*` and `?` stay within one
/// segment; `**` spans any number of segments (including zero when followed by '/').
bool glob_match(std::string_view pattern, std::string_view path) noexcept;

}  // namespace kgfuzz
