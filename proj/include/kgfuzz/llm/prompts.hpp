#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace kgfuzz {

inline constexpr std::string_view kPromptTemplateVersion = "1";

/// Named prompt templates with `{{var}}` placeholders. Built-in defaults can be replaced by
/// `<name>.txt` files from an override directory without rebuilding.
class PromptTemplates {
 public:
  PromptTemplates();

  /// Replaces templates for which `<dir>/<name>.txt` exists. Returns how many were replaced.
  std::size_t load_overrides(const std::filesystem::path& dir);

  const std::string& get(const std::string& name) const;
  std::string render(const std::string& name, const std::vector<std::pair<std::string, std::string>>& vars) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, std::string> templates_;
};

/// The first ```-fenced block's body if present (language tag dropped), else the whole text.
std::string extract_code_block(const std::string& response);

}  // namespace kgfuzz
