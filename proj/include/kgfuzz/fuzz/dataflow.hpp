#pragma once

#include <string>
#include <vector>

namespace kgfuzz {

struct DefUsePair {
  std::string variable;
  int def_line = 0;
  int use_line = 0;
  bool operator==(const DefUsePair&) const = default;
};

struct DataFlowFacts {
  std::vector<DefUsePair> def_use_pairs;
  std::vector<std::string> api_signatures;
  bool parsed = false;  // false when the entry function could not be analyzed
};

/// Intraprocedural def-use pairs over the body of the fuzz entry function. Parameters are
/// defined on the line they are declared; `x = ...`, compound assignments and ++/-- define
/// x. Each use pairs with the textually latest preceding definition, so branches are not
/// distinguished. A source that cannot be lexed or has no entry definition yields empty
/// facts and a warning.
DataFlowFacts extract_dataflow(const std::string& driver_source, std::vector<std::string> api_signatures,
                               std::vector<std::string>* warnings = nullptr);

/// One "var: defined at line D -> used at line U" line per pair.
std::string format_dataflow(const DataFlowFacts& facts);

}  // namespace kgfuzz
