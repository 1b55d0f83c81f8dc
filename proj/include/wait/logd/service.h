#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "wait/core/clock.h"
#include "wait/core/records.h"
#include "wait/merklelog/log.h"

namespace waitsec::logd {

struct LogPolicy {
  std::int64_t promise_validity = 604800;  // 7 days
  std::int64_t clock_tolerance = 600;
  std::int64_t freshness_window = 300;
  bool enforce_single_active = true;

  // Error(kConfig) unless 0 <= clock_tolerance < promise_validity and
  // freshness_window > 0.
  void validate() const;
};

struct SubmissionRequest {
  ReleaseLeaf leaf;
};

nlohmann::json to_json(const SubmissionRequest& request);
SubmissionRequest submission_request_from_json(const nlohmann::json& j);

// Maximum number of records returned by one entries() call.
inline constexpr std::uint64_t kMaxEntriesPerRequest = 1024;

// The transparency log operator: enforces submission policy on top of a
// MerkleLog and signs promises and tree heads.
//
// Submissions and renewals are serialized through one policy critical
// section; read operations go straight to the MerkleLog snapshot.
class LogService {
 public:
  // journal_path: append-only file of issued promises, or empty for none.
  LogService(KeyPair log_key, std::string base_url, LogPolicy policy, Clock clock,
             std::unique_ptr<merklelog::MerkleLog> log,
             std::filesystem::path journal_path = {});

  // Convenience: MerkleLog and issuance journal under data_dir.
  static std::unique_ptr<LogService> open(KeyPair log_key, std::string base_url,
                                          LogPolicy policy, Clock clock,
                                          const std::filesystem::path& data_dir);

  LogIdentity identity() const;
  const LogPolicy& policy() const { return policy_; }

  // Errors: kBadSignature, kStaleTimestamp, kActivePromise, kStorage.
  InclusionPromise handle_submit(const SubmissionRequest& request);
  // Errors: kUnknownLeaf, kBadSignature, kStaleTimestamp, kActivePromise.
  InclusionPromise handle_renew(const RenewalRequest& request);

  SignedTreeHead handle_sth() const;
  // Errors: kUnknownLeaf, kRange (leaf not within tree_size).
  merklelog::InclusionProof handle_inclusion_proof(const Hash32& leaf_hash,
                                                   std::uint64_t tree_size) const;
  merklelog::ConsistencyProof handle_consistency(std::uint64_t old_size,
                                                 std::uint64_t new_size) const;
  // At most kMaxEntriesPerRequest records starting at start.
  std::vector<merklelog::LogRecord> handle_entries(std::uint64_t start,
                                                   std::uint64_t end) const;

  std::uint64_t tree_size() const { return log_->size(); }
  const merklelog::MerkleLog& log() const { return *log_; }
  std::vector<InclusionPromise> issuance_journal() const;

 private:
  struct ActiveRelease {
    Digest digest;
    std::int64_t expires_at = 0;
  };

  void check_fresh(std::int64_t stamped, std::int64_t now) const;
  void check_single_active(const PublicKey& developer, const std::string& app_url,
                           const Digest& digest, std::int64_t now) const;
  InclusionPromise issue(const ReleaseLeaf& leaf, const Hash32& leaf_hash,
                         std::int64_t now);
  void load_journal();

  KeyPair key_;
  std::string base_url_;
  LogPolicy policy_;
  Clock clock_;
  std::unique_ptr<merklelog::MerkleLog> log_;
  std::filesystem::path journal_path_;

  mutable std::mutex policy_mu_;
  std::map<std::pair<PublicKey, std::string>, ActiveRelease> active_;
  std::vector<InclusionPromise> journal_;
};

}  // namespace waitsec::logd
