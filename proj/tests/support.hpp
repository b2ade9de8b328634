#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include <unistd.h>

#include "kgfuzz/common/io.hpp"
#include "kgfuzz/graph/knowledge_graph.hpp"
#include "kgfuzz/graph/summarizer.hpp"
#include "kgfuzz/llm/gateway.hpp"
#include "kgfuzz/llm/providers.hpp"
#include "kgfuzz/source/source_analyzer.hpp"

namespace kgfuzz::testing {

inline const std::filesystem::path kFixtures = KGFUZZ_FIXTURE_DIR;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("kgfuzz_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Gateway whose both roles answer through `fn`, without backoff sleeps.
inline std::unique_ptr<LlmGateway> scripted_gateway(FunctionProvider::Fn fn, GatewayConfig config = {}) {
  auto p = std::make_shared<FunctionProvider>(std::move(fn));
  auto gw = std::make_unique<LlmGateway>(p, p, config, std::make_shared<Transcript>("test"));
  gw->set_sleep([](std::chrono::milliseconds) {});
  return gw;
}

inline std::unique_ptr<LlmGateway> synthetic_gateway() {
  auto p = std::make_shared<SyntheticProvider>();
  auto gw = std::make_unique<LlmGateway>(p, p, GatewayConfig{}, std::make_shared<Transcript>("test"));
  gw->set_sleep([](std::chrono::milliseconds) {});
  return gw;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  write_text_file(p, content);
}

/// Graph of the bundled toy library; summaries come from `summarizer` when given.
inline CodeKnowledgeGraph toylib_graph(Summarizer* summarizer = nullptr) {
  auto model = parse_repository(kFixtures / "toylib/src", {});
  model.api_list = load_api_list(kFixtures / "toylib/apis.tsv");
  NullSummarizer none;
  return build_graph(model, summarizer ? *summarizer : none);
}

}  // namespace kgfuzz::testing
