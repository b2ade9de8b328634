#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <semaphore>

#include "kgfuzz/llm/chat.hpp"
#include "kgfuzz/llm/transcript.hpp"

namespace kgfuzz {

struct GatewayConfig {
  int max_retries = 3;                         // retries after the first attempt
  std::chrono::milliseconds backoff_base{200};  // doubled per retry
  std::chrono::milliseconds backoff_max{5000};
  std::optional<std::size_t> call_cap;         // unset = unlimited
  std::size_t max_concurrent = 4;
};

/// Single entry point for every LLM call. Routes by role, bounds in-flight requests,
/// retries transient provider failures with exponential backoff, enforces the per-campaign
/// call cap and appends each successful response to the transcript.
class LlmGateway {
 public:
  using SleepFn = std::function<void(std::chrono::milliseconds)>;

  LlmGateway(std::shared_ptr<LlmProvider> coder, std::shared_ptr<LlmProvider> chat, GatewayConfig config = {},
             std::shared_ptr<Transcript> transcript = nullptr);

  /// Throws Error(LlmFailure) after retries are exhausted or on a permanent failure,
  /// Error(BudgetExceeded) once the call cap is reached.
  std::string complete(const ChatRequest& request);

  std::size_t calls() const noexcept { return calls_.load(); }
  std::size_t attempts() const noexcept { return attempts_.load(); }
  Transcript& transcript() noexcept { return *transcript_; }
  const GatewayConfig& config() const noexcept { return config_; }

  void set_sleep(SleepFn fn) { sleep_ = std::move(fn); }

 private:
  std::shared_ptr<LlmProvider> coder_;
  std::shared_ptr<LlmProvider> chat_;
  GatewayConfig config_;
  std::shared_ptr<Transcript> transcript_;
  std::counting_semaphore<1024> in_flight_;
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> attempts_{0};
  SleepFn sleep_;
};

}  // namespace kgfuzz
