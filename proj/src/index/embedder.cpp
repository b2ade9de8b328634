#include "httplib.h"

#include <cctype>
#include <cmath>
#include <cstdlib>

#include "kgfuzz/common/error.hpp"
#include "kgfuzz/common/hash.hpp"
#include "kgfuzz/common/io.hpp"
#include "kgfuzz/index/embedder.hpp"
#include "kgfuzz/llm/providers.hpp"

namespace kgfuzz {

HashEmbedder::HashEmbedder(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw Error(Errc::ConfigError, "embedding dim must be positive");
}

std::string HashEmbedder::fingerprint() const { return "hash-bow-v1:" + std::to_string(dim_); }

std::vector<float> HashEmbedder::embed(std::string_view text) {
  std::vector<double> acc(dim_, 0.0);
  auto add = [&](std::string_view tok) {
    const std::uint64_t h = fnv1a64(tok);
    acc[h % dim_] += ((h >> 40) & 1U) ? 1.0 : -1.0;
  };
  std::string tok;
  auto flush = [&] {
    if (tok.empty()) return;
    add(tok);
    if (tok.find('_') != std::string::npos) {
      std::size_t start = 0;
      for (;;) {
        auto us = tok.find('_', start);
        std::string_view part = std::string_view(tok).substr(start, us == std::string::npos ? std::string::npos : us - start);
        if (!part.empty() && part.size() != tok.size()) add(part);
        if (us == std::string::npos) break;
        start = us + 1;
      }
    }
    tok.clear();
  };
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc) || c == '_') tok.push_back(static_cast<char>(std::tolower(uc)));
    else flush();
  }
  flush();
  double norm = 0.0;
  for (double v : acc) norm += v * v;
  std::vector<float> out(dim_, 0.0F);
  if (norm > 0.0) {
    const double inv = 1.0 / std::sqrt(norm);
    for (std::size_t i = 0; i < dim_; ++i) out[i] = static_cast<float>(acc[i] * inv);
  }
  return out;
}

HttpEmbedder::HttpEmbedder(std::string endpoint, std::string model, std::string api_key_env, std::size_t dim)
    : endpoint_(std::move(endpoint)), model_(std::move(model)), api_key_env_(std::move(api_key_env)), dim_(dim) {
  if (dim_ == 0) throw Error(Errc::ConfigError, "embedding dim must be positive");
}

std::string HttpEmbedder::fingerprint() const { return "http:" + model_ + ":" + std::to_string(dim_); }

std::vector<float> HttpEmbedder::embed(std::string_view text) {
  const auto [base, path] = split_url(endpoint_);
  httplib::Client client(base);
  httplib::Headers headers;
  if (!api_key_env_.empty()) {
    const char* key = std::getenv(api_key_env_.c_str());
    if (!key || !*key) throw Error(Errc::EmbedderFailure, "environment variable " + api_key_env_ + " is not set");
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const json body = {{"model", model_}, {"input", std::string(text)}};
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res || res->status != 200) {
    throw Error(Errc::EmbedderFailure, res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error()));
  }
  try {
    auto vec = json::parse(res->body).at("data").at(0).at("embedding").get<std::vector<float>>();
    if (vec.size() != dim_) {
      throw Error(Errc::EmbedderFailure, "expected dim " + std::to_string(dim_) + ", got " + std::to_string(vec.size()));
    }
    return vec;
  } catch (const json::exception& e) {
    throw Error(Errc::EmbedderFailure, std::string("malformed embedding response: ") + e.what());
  }
}

}  // namespace kgfuzz
