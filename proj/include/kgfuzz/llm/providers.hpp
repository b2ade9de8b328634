#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <string>

#include "kgfuzz/llm/chat.hpp"
#include "kgfuzz/llm/transcript.hpp"

namespace kgfuzz {

/// Delegates to a callable; the building block for scripted test doubles.
class FunctionProvider final : public LlmProvider {
 public:
  using Fn = std::function<std::string(const ChatRequest&)>;
  explicit FunctionProvider(Fn fn, std::string name = "function") : fn_(std::move(fn)), name_(std::move(name)) {}
  std::string complete(const ChatRequest& request) override { return fn_(request); }
  std::string name() const override { return name_; }

 private:
  Fn fn_;
  std::string name_;
};

/// Replays a recorded transcript keyed by request digest. Repeated digests consume their
/// recorded responses in order and then keep returning the last one. Unknown digests are a
/// permanent failure.
class ReplayProvider final : public LlmProvider {
 public:
  explicit ReplayProvider(const Transcript& transcript);
  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return "mock"; }

 private:
  std::mutex mu_;
  std::map<std::string, std::vector<std::string>> responses_;
  std::map<std::string, std::size_t> cursor_;
};

struct HttpProviderConfig {
  std::string endpoint;     // full URL of an OpenAI-compatible chat completions route
  std::string model;
  std::string api_key_env;  // environment variable holding the key; the value is never stored
  std::uint64_t seed = 0;
  int timeout_seconds = 120;
};

/// OpenAI-compatible chat completions over HTTP(S).
class HttpChatProvider final : public LlmProvider {
 public:
  explicit HttpChatProvider(HttpProviderConfig config) : config_(std::move(config)) {}
  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return "http:" + config_.model; }

 private:
  HttpProviderConfig config_;
};

/// Deterministic offline responder that understands the built-in prompt templates.
/// Produces plausible answers for every agent so a whole campaign can run without a model;
/// used to record demo and golden transcripts.
class SyntheticProvider final : public LlmProvider {
 public:
  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return "synthetic"; }
};

struct UrlParts {
  std::string scheme_host_port;  // "https://host:443"
  std::string path;              // "/v1/chat/completions"
};
UrlParts split_url(const std::string& url);

}  // namespace kgfuzz
