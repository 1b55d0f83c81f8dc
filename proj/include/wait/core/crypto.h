#pragma once

#include <array>
#include <string>
#include <string_view>

#include "wait/core/bytes.h"

namespace waitsec {

Hash32 sha256(ByteView data);
std::array<std::uint8_t, 48> sha384(ByteView data);

// SHA-256 of the exact served bytes of a main document. Textual form is
// "sha256:" followed by 64 lowercase hex characters.
struct Digest {
  Hash32 value{};

  std::string to_string() const;
  // Throws Error(kEncoding) on anything but the canonical textual form.
  static Digest parse(std::string_view text);

  friend bool operator==(const Digest&, const Digest&) = default;
};

Digest digest_bytes(ByteView data);

// Ed25519 key pair held by developers and log operators.
class KeyPair {
 public:
  static KeyPair generate();
  // Throws Error(kBadKey) if the seed cannot be loaded.
  static KeyPair from_seed(const PrivateSeed& seed);

  const PublicKey& public_key() const { return public_key_; }
  const PrivateSeed& seed() const { return seed_; }

  Signature sign(ByteView message) const;

 private:
  KeyPair(const PrivateSeed& seed, const PublicKey& pub)
      : seed_(seed), public_key_(pub) {}

  PrivateSeed seed_;
  PublicKey public_key_;
};

// Returns false for any non-verifying signature. Throws Error(kBadKey) when
// the public key is not a valid Ed25519 point encoding.
bool verify_signature(const PublicKey& public_key, ByteView message,
                      const Signature& signature);

// True iff the 32 bytes decode to a point on the curve.
bool is_valid_public_key(const PublicKey& public_key);

}  // namespace waitsec
