#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "kgfuzz/index/graph_index.hpp"

namespace kgfuzz::testing {

/// Brute-force ranking: long double cosine against every row, rounded to the score grid,
/// filtered by s, stably ordered by (score desc, chunk_id asc), cut to k.
inline std::vector<std::pair<std::string, double>> brute_force_rank(const std::vector<float>& q,
                                                                    const PropertyGraphIndex& index, double s,
                                                                    std::size_t k) {
  std::vector<std::pair<std::string, double>> all;
  for (const auto& e : index.entries()) {
    long double dot = 0, nq = 0, ne = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      dot += static_cast<long double>(q[i]) * e.vector[i];
      nq += static_cast<long double>(q[i]) * q[i];
      ne += static_cast<long double>(e.vector[i]) * e.vector[i];
    }
    const double cos = (nq == 0 || ne == 0) ? 0.0 : static_cast<double>(dot / std::sqrt(nq * ne));
    const double score = std::round(cos / 1e-12) * 1e-12;
    if (score >= s) all.emplace_back(e.chunk.chunk_id, score);
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

/// Index of up to 50 chunks with small-integer vectors (so exact ties occur) and some
/// duplicated rows; chunk ids are shuffled relative to insertion order.
inline PropertyGraphIndex random_index(std::mt19937_64& rng, std::size_t dim) {
  PropertyGraphIndex index(ChunkKind::NL, dim, "oracle");
  const std::size_t n = 1 + rng() % 50;
  std::vector<std::size_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i;
  std::shuffle(ids.begin(), ids.end(), rng);
  std::vector<std::vector<float>> rows;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<float> v(dim);
    if (!rows.empty() && rng() % 5 == 0) {
      v = rows[rng() % rows.size()];
    } else {
      for (auto& x : v) x = static_cast<float>(static_cast<int>(rng() % 5) - 2);
    }
    rows.push_back(v);
    char id[16];
    std::snprintf(id, sizeof id, "c%03zu", ids[i]);
    index.add({id, "n", ChunkKind::NL, "t"}, v);
  }
  return index;
}

}  // namespace kgfuzz::testing
