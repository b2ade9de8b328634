#include "kgfuzz/llm/chat.hpp"

#include <cstdio>

#include "kgfuzz/common/hash.hpp"
#include "kgfuzz/common/io.hpp"

namespace kgfuzz {

std::string_view to_string(LlmRole role) noexcept { return role == LlmRole::Coder ? "coder" : "chat"; }

double default_temperature(LlmRole role) noexcept { return role == LlmRole::Coder ? 0.7 : 1.0; }

ChatRequest ChatRequest::make(LlmRole role, std::vector<ChatMessage> messages) {
  ChatRequest r;
  r.role = role;
  r.messages = std::move(messages);
  r.temperature = default_temperature(role);
  return r;
}

std::string request_digest(const ChatRequest& request) {
  char temp[32];
  std::snprintf(temp, sizeof temp, "%.4f", request.temperature);
  json msgs = json::array();
  for (const auto& m : request.messages) msgs.push_back({m.speaker, m.text});
  const json key = {{"role", to_string(request.role)}, {"temperature", temp}, {"messages", msgs}};
  return sha256_hex(key.dump());
}

}  // namespace kgfuzz
