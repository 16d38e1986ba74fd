#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace ihi {

/// 64-bit FNV-1a. Used for config and file digests, not for security.
class Fnv1a {
 public:
  void update(std::span<const std::byte> bytes);
  void update(std::string_view text);
  void update_u64(std::uint64_t v);
  std::uint64_t value() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

std::string digest_hex(std::string_view text);

/// Digest over relative path names and contents of every regular file below
/// `dir`, visited in sorted order.
std::string directory_digest(const std::filesystem::path& dir);

/// File contents digest, or directory_digest for directories.
std::string path_digest(const std::filesystem::path& path);

}  // namespace ihi
