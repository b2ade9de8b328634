#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace kgfuzz {

/// Coder handles driver generation and repair; Chat handles every other agent.
enum class LlmRole { Coder, Chat };

std::string_view to_string(LlmRole role) noexcept;
double default_temperature(LlmRole role) noexcept;

struct ChatMessage {
  std::string speaker;  // "system" | "user" | "assistant"
  std::string text;
  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  LlmRole role = LlmRole::Chat;
  std::vector<ChatMessage> messages;
  double temperature = default_temperature(LlmRole::Chat);
  int max_tokens = 4096;

  static ChatRequest make(LlmRole role, std::vector<ChatMessage> messages);
};

/// sha256 over (role, messages, temperature). Stable across runs and platforms.
std::string request_digest(const ChatRequest& request);

/// Thrown by providers. Transient failures are retried by the gateway.
class ProviderError : public std::runtime_error {
 public:
  ProviderError(std::string what, bool transient) : std::runtime_error(std::move(what)), transient_(transient) {}
  bool transient() const noexcept { return transient_; }

 private:
  bool transient_;
};

class LlmProvider {
 public:
  virtual ~LlmProvider() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual std::string name() const = 0;
};

}  // namespace kgfuzz
