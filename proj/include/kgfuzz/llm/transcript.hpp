#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

namespace kgfuzz {

struct TranscriptEntry {
  std::string digest;
  std::string response;
  bool operator==(const TranscriptEntry&) const = default;
};

/// Append-only record of (request digest, response) pairs for one campaign.
class Transcript {
 public:
  explicit Transcript(std::string campaign_id = {}) : campaign_id_(std::move(campaign_id)) {}
  Transcript(const Transcript& other);
  Transcript& operator=(const Transcript& other);

  void append(std::string digest, std::string response);
  std::vector<TranscriptEntry> entries() const;
  std::size_t size() const;
  const std::string& campaign_id() const noexcept { return campaign_id_; }

  void save(const std::filesystem::path& path) const;
  static Transcript load(const std::filesystem::path& path);

 private:
  std::string campaign_id_;
  mutable std::mutex mu_;
  std::vector<TranscriptEntry> entries_;
};

}  // namespace kgfuzz
