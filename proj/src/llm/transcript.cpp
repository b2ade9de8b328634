#include "kgfuzz/llm/transcript.hpp"

#include "kgfuzz/common/error.hpp"
#include "kgfuzz/common/io.hpp"

namespace kgfuzz {

Transcript::Transcript(const Transcript& other) : campaign_id_(other.campaign_id_), entries_(other.entries()) {}

Transcript& Transcript::operator=(const Transcript& other) {
  if (this != &other) {
    auto copy = other.entries();
    std::lock_guard lock(mu_);
    campaign_id_ = other.campaign_id_;
    entries_ = std::move(copy);
  }
  return *this;
}

void Transcript::append(std::string digest, std::string response) {
  std::lock_guard lock(mu_);
  entries_.push_back({std::move(digest), std::move(response)});
}

std::vector<TranscriptEntry> Transcript::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::size_t Transcript::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

void Transcript::save(const std::filesystem::path& path) const {
  json entries = json::array();
  for (const auto& e : this->entries()) entries.push_back({{"digest", e.digest}, {"response", e.response}});
  write_json_file(path, {{"campaign_id", campaign_id_}, {"entries", entries}});
}

Transcript Transcript::load(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  try {
    Transcript t(j.value("campaign_id", std::string{}));
    for (const auto& e : j.at("entries")) t.append(e.at("digest"), e.at("response"));
    return t;
  } catch (const json::exception& e) {
    throw Error(Errc::IoError, path.string() + ": malformed transcript: " + e.what());
  }
}

}  // namespace kgfuzz
