#include "wait/core/records.h"

#include <initializer_list>
#include <limits>
#include <set>

#include "wait/core/error.h"
#include "wait/core/url.h"

namespace waitsec {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) {
  throw Error(ErrorCode::kEncoding, what);
}

void require_keys(const json& j, std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional = {}) {
  if (!j.is_object()) fail("expected JSON object");
  std::set<std::string> allowed;
  for (const char* k : required) {
    if (!j.contains(k)) fail(std::string("missing field '") + k + "'");
    allowed.insert(k);
  }
  for (const char* k : optional) allowed.insert(k);
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) fail("unknown field '" + item.key() + "'");
  }
}

std::int64_t get_time(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number_integer()) fail(std::string("field '") + key + "' must be an integer");
  if (v.is_number_unsigned()) {
    auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      fail(std::string("field '") + key + "' out of range");
    }
    return static_cast<std::int64_t>(u);
  }
  auto s = v.get<std::int64_t>();
  if (s < 0) fail(std::string("field '") + key + "' must be non-negative");
  return s;
}

void check_time(std::int64_t t, const char* key) {
  if (t < 0) fail(std::string("field '") + key + "' must be non-negative");
}

std::string get_string(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_string()) fail(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

template <std::size_t N>
std::array<std::uint8_t, N> get_fixed(const json& j, const char* key) {
  auto raw = base64url_decode(get_string(j, key));
  if (!raw) fail(std::string("field '") + key + "' is not canonical base64url");
  auto fixed = to_fixed<N>(*raw);
  if (!fixed) fail(std::string("field '") + key + "' has wrong length");
  return *fixed;
}

std::string get_app_url(const json& j) {
  std::string url = get_string(j, "app_url");
  if (!is_valid_app_url(url)) fail("app_url is not a normalized https URL");
  return url;
}

void check_app_url(const std::string& url) {
  if (!is_valid_app_url(url)) fail("app_url is not a normalized https URL");
}

Digest get_digest(const json& j) {
  return Digest::parse(get_string(j, "digest"));
}

std::string b64(ByteView b) { return base64url_encode(b); }

json without(json j, const char* key) {
  j.erase(key);
  return j;
}

}  // namespace

DeveloperKey DeveloperKey::from_key_pair(const KeyPair& pair) {
  return {"ed25519", pair.public_key(), pair.seed()};
}

KeyPair DeveloperKey::key_pair() const {
  if (!private_seed) throw Error(ErrorCode::kBadKey, "key file has no private component");
  KeyPair pair = KeyPair::from_seed(*private_seed);
  if (pair.public_key() != public_key) {
    throw Error(ErrorCode::kBadKey, "private seed does not match public key");
  }
  return pair;
}

LogIdentity LogIdentity::for_key(const PublicKey& public_key, std::string base_url) {
  return {sha256(public_key), public_key, std::move(base_url)};
}

json to_json(const DeveloperKey& key) {
  json j = {{"algorithm", key.algorithm}, {"public", b64(key.public_key)}};
  if (key.private_seed) j["private"] = b64(*key.private_seed);
  return j;
}

json to_json(const LogIdentity& identity) {
  return {{"base_url", identity.base_url},
          {"log_id", b64(identity.log_id)},
          {"public", b64(identity.public_key)}};
}

json to_json(const ReleaseLeaf& leaf) {
  check_app_url(leaf.app_url);
  check_time(leaf.submitted_at, "submitted_at");
  json j = {{"app_url", leaf.app_url},
            {"developer_key", b64(leaf.developer_key)},
            {"digest", leaf.digest.to_string()},
            {"submitted_at", leaf.submitted_at}};
  if (leaf.developer_signature) j["developer_signature"] = b64(*leaf.developer_signature);
  return j;
}

json to_json(const InclusionPromise& p) {
  check_app_url(p.app_url);
  check_time(p.issued_at, "issued_at");
  check_time(p.expires_at, "expires_at");
  check_time(p.version, "version");
  if (p.issued_at >= p.expires_at) fail("issued_at must precede expires_at");
  json j = {{"app_url", p.app_url},
            {"developer_key", b64(p.developer_key)},
            {"digest", p.digest.to_string()},
            {"expires_at", p.expires_at},
            {"issued_at", p.issued_at},
            {"leaf_hash", b64(p.leaf_hash)},
            {"log_id", b64(p.log_id)},
            {"version", p.version}};
  if (p.log_signature) j["log_signature"] = b64(*p.log_signature);
  return j;
}

json to_json(const SignedTreeHead& sth) {
  check_time(sth.timestamp, "timestamp");
  json j = {{"log_id", b64(sth.log_id)},
            {"root_hash", b64(sth.root_hash)},
            {"timestamp", sth.timestamp},
            {"tree_size", sth.tree_size}};
  if (sth.log_signature) j["log_signature"] = b64(*sth.log_signature);
  return j;
}

json to_json(const RenewalRequest& r) {
  check_time(r.renewed_at, "renewed_at");
  json j = {{"developer_key", b64(r.developer_key)},
            {"leaf_hash", b64(r.leaf_hash)},
            {"renewed_at", r.renewed_at}};
  if (r.developer_signature) j["developer_signature"] = b64(*r.developer_signature);
  return j;
}

DeveloperKey developer_key_from_json(const json& j) {
  require_keys(j, {"algorithm", "public"}, {"private"});
  DeveloperKey key;
  key.algorithm = get_string(j, "algorithm");
  if (key.algorithm != "ed25519") fail("unsupported key algorithm");
  key.public_key = get_fixed<32>(j, "public");
  if (j.contains("private")) key.private_seed = get_fixed<32>(j, "private");
  return key;
}

LogIdentity log_identity_from_json(const json& j) {
  require_keys(j, {"base_url", "log_id", "public"});
  LogIdentity id;
  id.base_url = get_string(j, "base_url");
  id.log_id = get_fixed<32>(j, "log_id");
  id.public_key = get_fixed<32>(j, "public");
  if (sha256(id.public_key) != id.log_id) fail("log_id does not match public key");
  return id;
}

ReleaseLeaf release_leaf_from_json(const json& j) {
  require_keys(j, {"app_url", "developer_key", "digest", "submitted_at"},
               {"developer_signature"});
  ReleaseLeaf leaf;
  leaf.app_url = get_app_url(j);
  leaf.developer_key = get_fixed<32>(j, "developer_key");
  leaf.digest = get_digest(j);
  leaf.submitted_at = get_time(j, "submitted_at");
  if (j.contains("developer_signature")) {
    leaf.developer_signature = get_fixed<64>(j, "developer_signature");
  }
  return leaf;
}

InclusionPromise inclusion_promise_from_json(const json& j) {
  require_keys(j, {"app_url", "developer_key", "digest", "expires_at", "issued_at",
                   "leaf_hash", "log_id", "version"},
               {"log_signature"});
  InclusionPromise p;
  p.version = get_time(j, "version");
  p.app_url = get_app_url(j);
  p.developer_key = get_fixed<32>(j, "developer_key");
  p.digest = get_digest(j);
  p.issued_at = get_time(j, "issued_at");
  p.expires_at = get_time(j, "expires_at");
  if (p.issued_at >= p.expires_at) fail("issued_at must precede expires_at");
  p.leaf_hash = get_fixed<32>(j, "leaf_hash");
  p.log_id = get_fixed<32>(j, "log_id");
  if (j.contains("log_signature")) p.log_signature = get_fixed<64>(j, "log_signature");
  return p;
}

SignedTreeHead signed_tree_head_from_json(const json& j) {
  require_keys(j, {"log_id", "root_hash", "timestamp", "tree_size"}, {"log_signature"});
  SignedTreeHead sth;
  sth.log_id = get_fixed<32>(j, "log_id");
  sth.root_hash = get_fixed<32>(j, "root_hash");
  sth.timestamp = get_time(j, "timestamp");
  sth.tree_size = static_cast<std::uint64_t>(get_time(j, "tree_size"));
  if (j.contains("log_signature")) sth.log_signature = get_fixed<64>(j, "log_signature");
  return sth;
}

RenewalRequest renewal_request_from_json(const json& j) {
  require_keys(j, {"developer_key", "leaf_hash", "renewed_at"}, {"developer_signature"});
  RenewalRequest r;
  r.developer_key = get_fixed<32>(j, "developer_key");
  r.leaf_hash = get_fixed<32>(j, "leaf_hash");
  r.renewed_at = get_time(j, "renewed_at");
  if (j.contains("developer_signature")) {
    r.developer_signature = get_fixed<64>(j, "developer_signature");
  }
  return r;
}

Bytes canonical_bytes(const json& j) { return to_bytes(j.dump()); }

json parse_json(ByteView bytes) {
  json j = json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (j.is_discarded()) fail("invalid JSON");
  return j;
}

ReleaseLeaf decode_release_leaf(ByteView bytes) {
  return release_leaf_from_json(parse_json(bytes));
}

InclusionPromise decode_inclusion_promise(ByteView bytes) {
  return inclusion_promise_from_json(parse_json(bytes));
}

SignedTreeHead decode_signed_tree_head(ByteView bytes) {
  return signed_tree_head_from_json(parse_json(bytes));
}

RenewalRequest decode_renewal_request(ByteView bytes) {
  return renewal_request_from_json(parse_json(bytes));
}

Bytes signing_bytes(const ReleaseLeaf& leaf) {
  return canonical_bytes(without(to_json(leaf), "developer_signature"));
}

Bytes signing_bytes(const InclusionPromise& promise) {
  return canonical_bytes(without(to_json(promise), "log_signature"));
}

Bytes signing_bytes(const SignedTreeHead& sth) {
  return canonical_bytes(without(to_json(sth), "log_signature"));
}

Bytes signing_bytes(const RenewalRequest& r) {
  check_time(r.renewed_at, "renewed_at");
  return canonical_bytes(json{{"leaf_hash", b64(r.leaf_hash)}, {"renewed_at", r.renewed_at}});
}

void sign_record(ReleaseLeaf& leaf, const KeyPair& developer) {
  leaf.developer_key = developer.public_key();
  leaf.developer_signature = developer.sign(signing_bytes(leaf));
}

void sign_record(InclusionPromise& promise, const KeyPair& log_key) {
  promise.log_id = sha256(log_key.public_key());
  promise.log_signature = log_key.sign(signing_bytes(promise));
}

void sign_record(SignedTreeHead& sth, const KeyPair& log_key) {
  sth.log_id = sha256(log_key.public_key());
  sth.log_signature = log_key.sign(signing_bytes(sth));
}

void sign_record(RenewalRequest& request, const KeyPair& developer) {
  request.developer_key = developer.public_key();
  request.developer_signature = developer.sign(signing_bytes(request));
}

namespace {

template <typename Record>
bool verify_with(const Record& record, const PublicKey& key,
                 const std::optional<Signature>& sig) {
  if (!sig || !is_valid_public_key(key)) return false;
  try {
    return verify_signature(key, signing_bytes(record), *sig);
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

bool verify_record(const ReleaseLeaf& leaf) {
  return verify_with(leaf, leaf.developer_key, leaf.developer_signature);
}

bool verify_record(const RenewalRequest& request) {
  return verify_with(request, request.developer_key, request.developer_signature);
}

bool verify_record(const InclusionPromise& promise, const PublicKey& log_key) {
  if (sha256(log_key) != promise.log_id) return false;
  return verify_with(promise, log_key, promise.log_signature);
}

bool verify_record(const SignedTreeHead& sth, const PublicKey& log_key) {
  if (sha256(log_key) != sth.log_id) return false;
  return verify_with(sth, log_key, sth.log_signature);
}

}  // namespace waitsec
