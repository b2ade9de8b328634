#pragma once

#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "kgfuzz/common/io.hpp"

namespace kgfuzz::testing {

/// Ground truth for a generated C repository, tallied while emitting the text.
struct RepoTruth {
  std::size_t functions = 0;
  std::size_t files = 0;
  std::set<std::pair<std::string, std::string>> internal_calls;
  std::set<std::pair<std::string, std::string>> external_calls;
  std::set<std::string> external_callees;
};

/// Writes `n_files` C files plus one header of prototypes under `root`. Bodies mix real
/// calls with decoys the analyzer must ignore: calls inside comments and strings, control
/// keywords, sizeof, casts and a function-like macro.
inline RepoTruth generate_repo(const std::filesystem::path& root, std::uint64_t seed, std::size_t n_files = 3) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  RepoTruth truth;
  std::vector<std::vector<std::string>> names(n_files);
  for (std::size_t f = 0; f < n_files; ++f) {
    const std::size_t n_fns = 1 + pick(5);
    for (std::size_t j = 0; j < n_fns; ++j) names[f].push_back("fn_" + std::to_string(f) + "_" + std::to_string(j));
  }
  std::vector<std::string> all;
  for (const auto& v : names) all.insert(all.end(), v.begin(), v.end());

  std::string header = "#ifndef GEN_H\n#define GEN_H\n#define GEN_MAX(a, b) ((a) > (b) ? (a) : (b))\n";
  for (const auto& n : all) header += "int " + n + "(int x);\n";
  header += "#endif\n";
  std::filesystem::create_directories(root);
  write_text_file(root / "gen.h", header);
  truth.files = 1;

  for (std::size_t f = 0; f < n_files; ++f) {
    std::string src = "#include \"gen.h\"\n\n";
    for (const auto& fn : names[f]) {
      ++truth.functions;
      src += "int " + fn + "(int x) {\n  int acc = (int)sizeof(int);\n";
      const std::size_t n_stmts = pick(6);
      for (std::size_t s = 0; s < n_stmts; ++s) {
        switch (pick(5)) {
          case 0: {
            const auto& callee = all[pick(all.size())];
            if (callee == fn) break;
            src += "  acc += " + callee + "(x);\n";
            truth.internal_calls.insert({fn, callee});
            break;
          }
          case 1: {
            const std::string ext = "ext_" + std::to_string(pick(4));
            src += "  if (x > " + std::to_string(s) + ") acc ^= " + ext + "(acc);\n";
            truth.external_calls.insert({fn, ext});
            truth.external_callees.insert(ext);
            break;
          }
          case 2:
            src += "  /* decoy_call(x); */ acc += GEN_MAX(acc, x);\n";
            break;
          case 3:
            src += "  const char *msg = \"decoy_str(1)\"; (void)msg;\n";
            break;
          default:
            src += "  while (acc > 100) { acc /= 2; }\n";
            break;
        }
      }
      src += "  return (acc);\n}\n\n";
    }
    write_text_file(root / ("file" + std::to_string(f) + ".c"), src);
    ++truth.files;
  }
  return truth;
}

}  // namespace kgfuzz::testing
