#ifndef RASGG_HASH_HPP_
#define RASGG_HASH_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace rasgg {

using Digest = std::array<std::uint8_t, 32>;

/// Incremental SHA-256.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::span<const std::uint8_t> bytes);
  Sha256& update(std::string_view text);
  Digest finish();

 private:
  void* ctx_;
};

Digest sha256(std::string_view text);
std::string to_hex(const Digest& d);
/// Throws rasgg::Error on malformed input.
Digest from_hex(std::string_view hex);

}  // namespace rasgg

#endif  // RASGG_HASH_HPP_
