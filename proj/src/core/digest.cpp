#include "ihi/digest.hpp"

#include <algorithm>
#include <cstdio>
#include <vector>

#include "ihi/error.hpp"
#include "ihi/io.hpp"

namespace ihi {

namespace fs = std::filesystem;

void Fnv1a::update(std::span<const std::byte> bytes) {
  for (std::byte b : bytes) {
    state_ ^= std::to_integer<std::uint64_t>(b);
    state_ *= 0x100000001b3ull;
  }
}

void Fnv1a::update(std::string_view text) { update(std::as_bytes(std::span(text.data(), text.size()))); }

void Fnv1a::update_u64(std::uint64_t v) {
  std::byte buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<std::byte>((v >> (8 * i)) & 0xFF);
  update(buf);
}

std::string Fnv1a::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
  return buf;
}

std::string digest_hex(std::string_view text) {
  Fnv1a h;
  h.update(text);
  return h.hex();
}

std::string directory_digest(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(Errc::io, "not a directory", dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  Fnv1a h;
  for (const auto& f : files) {
    h.update(fs::relative(f, dir).generic_string());
    h.update(read_file_bytes(f));
  }
  return h.hex();
}

std::string path_digest(const fs::path& path) {
  if (fs::is_directory(path)) return directory_digest(path);
  if (!fs::is_regular_file(path)) fail(Errc::io, "no such file or directory", path.string());
  Fnv1a h;
  h.update(read_file_bytes(path));
  return h.hex();
}

}  // namespace ihi
