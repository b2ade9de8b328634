#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

namespace kgfuzz {

using json = nlohmann::json;

std::string read_text_file(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename, so readers never observe a torn file.
void write_text_file(const std::filesystem::path& path, std::string_view content);

json read_json_file(const std::filesystem::path& path);

/// Stable rendering: sorted keys (nlohmann's default map), 2-space indent, trailing newline.
std::string dump_stable(const json& value);
void write_json_file(const std::filesystem::path& path, const json& value);

}  // namespace kgfuzz
