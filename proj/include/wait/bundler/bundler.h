#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wait/core/error.h"
#include "wait/core/records.h"
#include "wait/logd/client.h"
#include "wait/verifier/decide.h"
#include "wait/verifier/document.h"
#include "wait/verifier/verdict.h"

namespace waitsec {

inline constexpr std::string_view kDeveloperKeyMeta = "wait-developer-key";
inline constexpr std::string_view kBaseCsp =
    "default-src 'self'; script-src 'self'; style-src 'self'; object-src 'none'; base-uri 'none'";

struct ResourceEntry {
  std::string path;  // bundle-relative; the absolute URL for cross-origin entries
  ResourceKind kind = ResourceKind::kScript;
  std::uint64_t size = 0;
  std::string sri;
  bool cross_origin = false;
  friend bool operator==(const ResourceEntry&, const ResourceEntry&) = default;
};

struct BundleManifest {
  std::filesystem::path root;
  std::string main_document;  // bundle-relative path
  std::string document;       // current main document bytes
  std::vector<ResourceEntry> resources;
  std::vector<Finding> violations;
  std::string csp;
  std::optional<PublicKey> developer_key;
  std::optional<Digest> release_digest;
};

// Lists every script with src and every stylesheet link, each target once.
// Inline code, event handlers, javascript: URLs and cross-origin references
// without integrity are reported as violations. Throws Error(kParse) when
// the document does not parse, Error(kExternalDynamic) for a reference that
// is neither in the bundle nor an absolute https URL, Error(kIo) when the
// main document cannot be read.
BundleManifest scan_bundle(const std::filesystem::path& directory, const std::string& main_document);

// Main document with integrity and crossorigin="anonymous" on every
// reference. Attributes that are already correct keep their bytes.
std::string inject_integrity(const BundleManifest& manifest);

// Base policy plus the https origins of cross-origin resources.
std::string emit_csp(const BundleManifest& manifest);

// Inserts or replaces <meta name="wait-developer-key">. Error(kParse) when
// the document has no head element.
std::string embed_developer_key(std::string_view document, const PublicKey& key);

// Inserts or replaces <meta http-equiv="Content-Security-Policy"> as the
// first element of head, so the digest covers the policy.
std::string embed_csp(std::string_view document, std::string_view policy);

// Signs a leaf over digest_bytes(document). Records the digest, key and
// document in the manifest. Error(kUrl) for an invalid app URL.
ReleaseLeaf finalize_release(BundleManifest& manifest, std::string document,
                             const std::string& app_url, const KeyPair& key, std::int64_t now);

struct SealedRelease {
  BundleManifest manifest;
  ReleaseLeaf leaf;
};

// scan + inject + csp + meta tags + finalize. Refuses with Error(kParse)
// when the scan reports violations.
SealedRelease seal_bundle(const std::filesystem::path& directory, const std::string& main_document,
                          const std::string& app_url, const KeyPair& key, std::int64_t now);

nlohmann::json manifest_to_json(const BundleManifest& manifest);

// Writes out/site (bundle copy with the sealed main document) and
// out/release.json, out/csp.txt, out/manifest.json.
void write_sealed_bundle(const SealedRelease& sealed, const std::filesystem::path& out);

struct LogOutcome {
  LogIdentity log;
  std::optional<InclusionPromise> promise;
  std::optional<ErrorCode> error;     // kLogRejected or kNetwork
  std::optional<ErrorCode> log_code;  // the log's own code for rejections
  std::string message;
  bool ok() const { return promise.has_value(); }
};

using logd::LogClientFactory;
using logd::http_log_clients;

// One outcome per log, in input order. Logs are contacted concurrently. A
// promise is accepted only if it verifies under the log key and matches the
// leaf.
std::vector<LogOutcome> submit_release(const ReleaseLeaf& leaf, const std::vector<LogIdentity>& logs,
                                       const LogClientFactory& clients = http_log_clients());

std::vector<LogOutcome> renew_promise(const Hash32& leaf_hash, const KeyPair& key,
                                      const std::vector<LogIdentity>& logs, std::int64_t now,
                                      const LogClientFactory& clients = http_log_clients());

// Static server snippet: one add_header line for the promise header and one
// for the CSP when given. Error(kEncoding) for an empty promise list.
std::string emit_server_config(const std::vector<InclusionPromise>& promises,
                               const std::optional<std::string>& csp = std::nullopt);

// Reads the add_header lines of a snippet. Error(kConfig) on other content.
HttpHeaders parse_server_config(std::string_view text);

}  // namespace waitsec
