#include "httplib.h"

#include <cstdlib>

#include "kgfuzz/common/io.hpp"
#include "kgfuzz/llm/providers.hpp"

namespace kgfuzz {

ReplayProvider::ReplayProvider(const Transcript& transcript) {
  for (const auto& e : transcript.entries()) responses_[e.digest].push_back(e.response);
}

std::string ReplayProvider::complete(const ChatRequest& request) {
  const std::string digest = request_digest(request);
  std::lock_guard lock(mu_);
  auto it = responses_.find(digest);
  if (it == responses_.end()) throw ProviderError("no recorded response for request " + digest, false);
  std::size_t& pos = cursor_[digest];
  const std::string& out = it->second[std::min(pos, it->second.size() - 1)];
  ++pos;
  return out;
}

UrlParts split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string HttpChatProvider::complete(const ChatRequest& request) {
  const auto [base, path] = split_url(config_.endpoint);
  httplib::Client client(base);
  client.set_connection_timeout(config_.timeout_seconds);
  client.set_read_timeout(config_.timeout_seconds);
  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key) throw ProviderError("environment variable " + config_.api_key_env + " is not set", false);
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  json messages = json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.speaker}, {"content", m.text}});
  const json body = {{"model", config_.model},
                     {"messages", messages},
                     {"temperature", request.temperature},
                     {"max_tokens", request.max_tokens},
                     {"seed", config_.seed}};
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) throw ProviderError("transport error: " + httplib::to_string(res.error()), true);
  if (res->status == 429 || res->status >= 500) {
    throw ProviderError("HTTP " + std::to_string(res->status), true);
  }
  if (res->status != 200) throw ProviderError("HTTP " + std::to_string(res->status) + ": " + res->body, false);
  try {
    const json reply = json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed completion: ") + e.what(), true);
  }
}

}  // namespace kgfuzz
