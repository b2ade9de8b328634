#pragma once

#include <filesystem>
#include <string>

#include "support.hpp"

namespace kgfuzz::testing {

/// toylib campaign config with absolute fixture paths, writing into `dir`/out.
inline std::filesystem::path write_toylib_config(const std::filesystem::path& dir, const std::string& provider = "mock",
                                                 const std::string& extra = "") {
  const auto fx = kFixtures / "toylib";
  const std::string text = "project_root = \"" + (fx / "src").string() + "\"\n" +
                           "api_list = \"" + (fx / "apis.tsv").string() + "\"\n" +
                           "output_dir = \"" + (dir / "out").string() + "\"\n" +
                           "workers = 1\n" + extra +
                           "\n[fuzz]\ntime_budget_seconds = 5\n"
                           "\n[llm]\ntranscript = \"" + (fx / "transcript.json").string() + "\"\n" +
                           "\n[llm.coder]\nprovider = \"" + provider + "\"\n" +
                           "\n[compiler]\nkind = \"scripted\"\nscript = \"" + (fx / "compiler.json").string() + "\"\n" +
                           "\n[fuzzer]\nkind = \"scripted\"\nscript = \"" + (fx / "fuzzer.json").string() + "\"\n";
  const auto path = dir / "campaign.toml";
  write_file(path, text);
  return path;
}

}  // namespace kgfuzz::testing
