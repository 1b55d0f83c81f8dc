#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "wait/core/bytes.h"
#include "wait/core/crypto.h"

namespace waitsec {

// Canonical encoding: UTF-8 JSON, keys sorted, no insignificant whitespace,
// integers in decimal, byte fields base64url without padding. Signatures are
// computed over the encoding with the signature key removed entirely.
//
// Every decode_* rejects unknown or missing keys, wrong types, negative
// integers and non-canonical byte fields with Error(kEncoding).

struct DeveloperKey {
  std::string algorithm = "ed25519";
  PublicKey public_key{};
  std::optional<PrivateSeed> private_seed;

  static DeveloperKey from_key_pair(const KeyPair& pair);
  // Throws Error(kBadKey) when the private component is absent.
  KeyPair key_pair() const;
  DeveloperKey public_only() const { return {algorithm, public_key, std::nullopt}; }

  friend bool operator==(const DeveloperKey&, const DeveloperKey&) = default;
};

struct LogIdentity {
  Hash32 log_id{};
  PublicKey public_key{};
  std::string base_url;

  static LogIdentity for_key(const PublicKey& public_key, std::string base_url);

  friend bool operator==(const LogIdentity&, const LogIdentity&) = default;
};

struct ReleaseLeaf {
  std::string app_url;
  PublicKey developer_key{};
  Digest digest;
  std::int64_t submitted_at = 0;
  std::optional<Signature> developer_signature;

  friend bool operator==(const ReleaseLeaf&, const ReleaseLeaf&) = default;
};

struct InclusionPromise {
  static constexpr std::int64_t kCurrentVersion = 1;

  std::int64_t version = kCurrentVersion;
  Hash32 log_id{};
  Hash32 leaf_hash{};
  std::string app_url;
  Digest digest;
  PublicKey developer_key{};
  std::int64_t issued_at = 0;
  std::int64_t expires_at = 0;
  std::optional<Signature> log_signature;

  friend bool operator==(const InclusionPromise&, const InclusionPromise&) = default;
};

struct SignedTreeHead {
  Hash32 log_id{};
  std::uint64_t tree_size = 0;
  Hash32 root_hash{};
  std::int64_t timestamp = 0;
  std::optional<Signature> log_signature;

  friend bool operator==(const SignedTreeHead&, const SignedTreeHead&) = default;
};

struct RenewalRequest {
  Hash32 leaf_hash{};
  PublicKey developer_key{};
  std::int64_t renewed_at = 0;
  std::optional<Signature> developer_signature;

  friend bool operator==(const RenewalRequest&, const RenewalRequest&) = default;
};

// JSON value forms (used when records are nested in larger documents).
nlohmann::json to_json(const DeveloperKey& key);
nlohmann::json to_json(const LogIdentity& identity);
nlohmann::json to_json(const ReleaseLeaf& leaf);
nlohmann::json to_json(const InclusionPromise& promise);
nlohmann::json to_json(const SignedTreeHead& sth);
nlohmann::json to_json(const RenewalRequest& request);

DeveloperKey developer_key_from_json(const nlohmann::json& j);
LogIdentity log_identity_from_json(const nlohmann::json& j);
ReleaseLeaf release_leaf_from_json(const nlohmann::json& j);
InclusionPromise inclusion_promise_from_json(const nlohmann::json& j);
SignedTreeHead signed_tree_head_from_json(const nlohmann::json& j);
RenewalRequest renewal_request_from_json(const nlohmann::json& j);

// Compact sorted-key serialization of any JSON value.
Bytes canonical_bytes(const nlohmann::json& j);
// Parses bytes as JSON; Error(kEncoding) on syntax errors.
nlohmann::json parse_json(ByteView bytes);

template <typename Record>
Bytes canonical_encode(const Record& record) {
  return canonical_bytes(to_json(record));
}

ReleaseLeaf decode_release_leaf(ByteView bytes);
InclusionPromise decode_inclusion_promise(ByteView bytes);
SignedTreeHead decode_signed_tree_head(ByteView bytes);
RenewalRequest decode_renewal_request(ByteView bytes);

// Bytes covered by each record's signature.
Bytes signing_bytes(const ReleaseLeaf& leaf);
Bytes signing_bytes(const InclusionPromise& promise);
Bytes signing_bytes(const SignedTreeHead& sth);
// Renewal signatures cover only {leaf_hash, renewed_at}.
Bytes signing_bytes(const RenewalRequest& request);

void sign_record(ReleaseLeaf& leaf, const KeyPair& developer);
void sign_record(InclusionPromise& promise, const KeyPair& log_key);
void sign_record(SignedTreeHead& sth, const KeyPair& log_key);
void sign_record(RenewalRequest& request, const KeyPair& developer);

// False when the signature is absent, does not verify, or the key is not a
// valid point.
bool verify_record(const ReleaseLeaf& leaf);
bool verify_record(const RenewalRequest& request);
bool verify_record(const InclusionPromise& promise, const PublicKey& log_key);
bool verify_record(const SignedTreeHead& sth, const PublicKey& log_key);

}  // namespace waitsec
