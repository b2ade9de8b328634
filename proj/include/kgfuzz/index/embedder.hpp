#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace kgfuzz {

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<float> embed(std::string_view text) = 0;
  virtual std::size_t dim() const = 0;
  /// Identifies the model and configuration; indexes refuse to load under a different one.
  virtual std::string fingerprint() const = 0;
};

/// Signed feature hashing over lowercase word tokens (identifiers are also split on '_'),
/// unit-normalized. Text without tokens embeds to the zero vector.
class HashEmbedder final : public Embedder {
 public:
  explicit HashEmbedder(std::size_t dim = 64);
  std::vector<float> embed(std::string_view text) override;
  std::size_t dim() const override { return dim_; }
  std::string fingerprint() const override;

 private:
  std::size_t dim_;
};

/// OpenAI-compatible /embeddings endpoint.
class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(std::string endpoint, std::string model, std::string api_key_env, std::size_t dim);
  std::vector<float> embed(std::string_view text) override;
  std::size_t dim() const override { return dim_; }
  std::string fingerprint() const override;

 private:
  std::string endpoint_;
  std::string model_;
  std::string api_key_env_;
  std::size_t dim_;
};

}  // namespace kgfuzz
