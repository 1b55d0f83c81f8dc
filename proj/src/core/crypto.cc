#include "wait/core/crypto.h"

#include <openssl/bn.h>
#include <openssl/evp.h>
#include <openssl/rand.h>

#include <memory>

#include "wait/core/error.h"

namespace waitsec {
namespace {

struct PkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
struct BnDeleter {
  void operator()(BIGNUM* p) const { BN_free(p); }
};
struct BnCtxDeleter {
  void operator()(BN_CTX* p) const { BN_CTX_free(p); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;
using BnPtr = std::unique_ptr<BIGNUM, BnDeleter>;

template <std::size_t N>
std::array<std::uint8_t, N> evp_digest(const EVP_MD* md, ByteView data) {
  std::array<std::uint8_t, N> out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, md, nullptr) != 1 ||
      len != N) {
    throw std::runtime_error("EVP_Digest failed");
  }
  return out;
}

BnPtr bn(const char* dec) {
  BIGNUM* b = nullptr;
  BN_dec2bn(&b, dec);
  return BnPtr(b);
}

}  // namespace

Hash32 sha256(ByteView data) { return evp_digest<32>(EVP_sha256(), data); }

std::array<std::uint8_t, 48> sha384(ByteView data) {
  return evp_digest<48>(EVP_sha384(), data);
}

std::string Digest::to_string() const { return "sha256:" + to_hex(value); }

Digest Digest::parse(std::string_view text) {
  constexpr std::string_view kPrefix = "sha256:";
  if (text.size() != kPrefix.size() + 64 || text.substr(0, kPrefix.size()) != kPrefix) {
    throw Error(ErrorCode::kEncoding, "malformed digest");
  }
  auto hex = text.substr(kPrefix.size());
  for (char c : hex) {
    bool lower_hex = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
    if (!lower_hex) throw Error(ErrorCode::kEncoding, "digest must be lowercase hex");
  }
  Digest d;
  auto raw = from_hex(hex);
  std::copy(raw->begin(), raw->end(), d.value.begin());
  return d;
}

Digest digest_bytes(ByteView data) { return Digest{sha256(data)}; }

KeyPair KeyPair::generate() {
  PrivateSeed seed{};
  if (RAND_bytes(seed.data(), static_cast<int>(seed.size())) != 1) {
    throw Error(ErrorCode::kBadKey, "RNG failure");
  }
  return from_seed(seed);
}

KeyPair KeyPair::from_seed(const PrivateSeed& seed) {
  PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr,
                                           seed.data(), seed.size()));
  if (!key) throw Error(ErrorCode::kBadKey, "cannot load Ed25519 seed");
  PublicKey pub{};
  std::size_t len = pub.size();
  if (EVP_PKEY_get_raw_public_key(key.get(), pub.data(), &len) != 1 ||
      len != pub.size()) {
    throw Error(ErrorCode::kBadKey, "cannot derive Ed25519 public key");
  }
  return KeyPair(seed, pub);
}

Signature KeyPair::sign(ByteView message) const {
  PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr,
                                           seed_.data(), seed_.size()));
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!key || !ctx ||
      EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1) {
    throw Error(ErrorCode::kBadKey, "cannot initialise signer");
  }
  Signature sig{};
  std::size_t len = sig.size();
  if (EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(),
                     message.size()) != 1 ||
      len != sig.size()) {
    throw Error(ErrorCode::kBadKey, "signing failed");
  }
  return sig;
}

bool is_valid_public_key(const PublicKey& public_key) {
  // Decompress the point: y is little-endian with the x sign in the top bit.
  // Valid iff y < p and (y^2 - 1) / (d*y^2 + 1) is a square mod p, with the
  // x = 0 / sign = 1 combination excluded.
  std::array<std::uint8_t, 32> le = public_key;
  const bool sign = (le[31] & 0x80) != 0;
  le[31] &= 0x7f;
  std::array<std::uint8_t, 32> be{};
  std::reverse_copy(le.begin(), le.end(), be.begin());

  std::unique_ptr<BN_CTX, BnCtxDeleter> ctx(BN_CTX_new());
  BnPtr p = bn("57896044618658097711785492504343953926634992332820282019728792003956564819949");
  BnPtr y(BN_bin2bn(be.data(), static_cast<int>(be.size()), nullptr));
  if (BN_cmp(y.get(), p.get()) >= 0) return false;

  BnPtr num(BN_new()), den(BN_new()), d(BN_new()), inv(BN_new()), x2(BN_new());
  BnPtr y2(BN_new()), one(BN_new()), tmp(BN_new());
  BN_one(one.get());
  // d = -121665 / 121666 mod p
  BnPtr a = bn("121665"), b = bn("121666");
  BN_mod_inverse(inv.get(), b.get(), p.get(), ctx.get());
  BN_mod_mul(d.get(), a.get(), inv.get(), p.get(), ctx.get());
  BN_mod_sub(d.get(), p.get(), d.get(), p.get(), ctx.get());

  BN_mod_sqr(y2.get(), y.get(), p.get(), ctx.get());
  BN_mod_sub(num.get(), y2.get(), one.get(), p.get(), ctx.get());
  BN_mod_mul(tmp.get(), d.get(), y2.get(), p.get(), ctx.get());
  BN_mod_add(den.get(), tmp.get(), one.get(), p.get(), ctx.get());
  if (BN_mod_inverse(inv.get(), den.get(), p.get(), ctx.get()) == nullptr) {
    return false;
  }
  BN_mod_mul(x2.get(), num.get(), inv.get(), p.get(), ctx.get());
  if (BN_is_zero(x2.get())) return !sign;
  BnPtr root(BN_mod_sqrt(nullptr, x2.get(), p.get(), ctx.get()));
  if (!root) return false;
  BN_mod_sqr(tmp.get(), root.get(), p.get(), ctx.get());
  return BN_cmp(tmp.get(), x2.get()) == 0;
}

bool verify_signature(const PublicKey& public_key, ByteView message,
                      const Signature& signature) {
  if (!is_valid_public_key(public_key)) {
    throw Error(ErrorCode::kBadKey, "public key is not a valid Ed25519 point");
  }
  PkeyPtr key(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr,
                                          public_key.data(), public_key.size()));
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!key || !ctx ||
      EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1) {
    throw Error(ErrorCode::kBadKey, "cannot load Ed25519 public key");
  }
  return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(),
                          message.data(), message.size()) == 1;
}

}  // namespace waitsec
