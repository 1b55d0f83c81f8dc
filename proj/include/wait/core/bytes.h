#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace waitsec {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

using Hash32 = std::array<std::uint8_t, 32>;
using PublicKey = std::array<std::uint8_t, 32>;
using PrivateSeed = std::array<std::uint8_t, 32>;
using Signature = std::array<std::uint8_t, 64>;

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline Bytes to_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

inline std::string to_string(ByteView b) {
  return std::string(b.begin(), b.end());
}

std::string to_hex(ByteView data);
std::optional<Bytes> from_hex(std::string_view hex);

// Standard alphabet with padding (SRI tokens).
std::string base64_encode(ByteView data);
std::optional<Bytes> base64_decode(std::string_view text);

// URL-safe alphabet, no padding. Decoding rejects padding and non-canonical
// trailing bits, so every byte string has exactly one accepted encoding.
std::string base64url_encode(ByteView data);
std::optional<Bytes> base64url_decode(std::string_view text);

template <std::size_t N>
std::optional<std::array<std::uint8_t, N>> to_fixed(ByteView data) {
  if (data.size() != N) return std::nullopt;
  std::array<std::uint8_t, N> out{};
  std::copy(data.begin(), data.end(), out.begin());
  return out;
}

}  // namespace waitsec
