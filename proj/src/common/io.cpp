#include "kgfuzz/common/io.hpp"

#include <fstream>
#include <sstream>

#include "kgfuzz/common/error.hpp"

namespace kgfuzz {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(Errc::IoError, "short write to " + path.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::IoError, "cannot move " + tmp.string() + ": " + ec.message());
}

json read_json_file(const std::filesystem::path& path) {
  const std::string content = read_text_file(path);
  try {
    return json::parse(content);
  } catch (const json::exception& e) {
    throw Error(Errc::IoError, path.string() + ": " + e.what());
  }
}

std::string dump_stable(const json& value) { return value.dump(2) + "\n"; }

void write_json_file(const std::filesystem::path& path, const json& value) {
  write_text_file(path, dump_stable(value));
}

}  // namespace kgfuzz
