#include "kgfuzz/llm/gateway.hpp"

#include <algorithm>
#include <thread>

#include "kgfuzz/common/error.hpp"

namespace kgfuzz {

LlmGateway::LlmGateway(std::shared_ptr<LlmProvider> coder, std::shared_ptr<LlmProvider> chat, GatewayConfig config,
                       std::shared_ptr<Transcript> transcript)
    : coder_(std::move(coder)),
      chat_(chat ? std::move(chat) : coder_),
      config_(config),
      transcript_(transcript ? std::move(transcript) : std::make_shared<Transcript>()),
      in_flight_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config.max_concurrent, 1, 1024))),
      sleep_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {}

std::string LlmGateway::complete(const ChatRequest& request) {
  if (request.messages.empty()) throw Error(Errc::LlmFailure, "request has no messages");
  LlmProvider* provider = request.role == LlmRole::Coder ? coder_.get() : chat_.get();
  if (!provider) throw Error(Errc::LlmFailure, "no provider configured for role " + std::string(to_string(request.role)));

  // Reserve a slot against the cap atomically so concurrent callers cannot overshoot it.
  std::size_t used = calls_.load();
  do {
    if (config_.call_cap && used >= *config_.call_cap) {
      throw Error(Errc::BudgetExceeded, "call cap " + std::to_string(*config_.call_cap) + " reached");
    }
  } while (!calls_.compare_exchange_weak(used, used + 1));

  const std::string digest = request_digest(request);
  const int retries = std::max(0, config_.max_retries);
  std::string last_error;
  for (int attempt = 0; attempt <= retries; ++attempt) {
    if (attempt > 0) {
      auto delay = config_.backoff_base * (1LL << std::min(attempt - 1, 20));
      sleep_(std::min<std::chrono::milliseconds>(delay, config_.backoff_max));
    }
    ++attempts_;
    in_flight_.acquire();
    try {
      std::string response = provider->complete(request);
      in_flight_.release();
      transcript_->append(digest, response);
      return response;
    } catch (const ProviderError& e) {
      in_flight_.release();
      last_error = e.what();
      if (!e.transient()) break;
    } catch (const std::exception& e) {
      in_flight_.release();
      last_error = e.what();
    }
  }
  throw Error(Errc::LlmFailure, provider->name() + ": " + last_error);
}

}  // namespace kgfuzz
