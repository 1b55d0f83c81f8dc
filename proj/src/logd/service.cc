#include "wait/logd/service.h"

#include <fcntl.h>
#include <unistd.h>

#include <fstream>
#include <sstream>

#include "wait/core/error.h"

namespace waitsec::logd {

namespace fs = std::filesystem;
using merklelog::LogRecord;

void LogPolicy::validate() const {
  if (promise_validity <= 0) throw Error(ErrorCode::kConfig, "promise_validity must be positive");
  if (clock_tolerance < 0 || clock_tolerance >= promise_validity) {
    throw Error(ErrorCode::kConfig, "clock_tolerance must be in [0, promise_validity)");
  }
  if (freshness_window <= 0) throw Error(ErrorCode::kConfig, "freshness_window must be positive");
}

nlohmann::json to_json(const SubmissionRequest& request) {
  return {{"leaf", waitsec::to_json(request.leaf)}};
}

SubmissionRequest submission_request_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.size() != 1 || !j.contains("leaf")) {
    throw Error(ErrorCode::kEncoding, "submission must be {\"leaf\": ...}");
  }
  return {release_leaf_from_json(j["leaf"])};
}

LogService::LogService(KeyPair log_key, std::string base_url, LogPolicy policy,
                       Clock clock, std::unique_ptr<merklelog::MerkleLog> log,
                       fs::path journal_path)
    : key_(std::move(log_key)),
      base_url_(std::move(base_url)),
      policy_(policy),
      clock_(std::move(clock)),
      log_(std::move(log)),
      journal_path_(std::move(journal_path)) {
  policy_.validate();
  load_journal();
}

std::unique_ptr<LogService> LogService::open(KeyPair log_key, std::string base_url,
                                             LogPolicy policy, Clock clock,
                                             const fs::path& data_dir) {
  auto log = merklelog::MerkleLog::open(data_dir / "log");
  return std::make_unique<LogService>(std::move(log_key), std::move(base_url), policy,
                                      std::move(clock), std::move(log),
                                      data_dir / "issuance.jsonl");
}

void LogService::load_journal() {
  if (journal_path_.empty() || !fs::exists(journal_path_)) return;
  std::ifstream in(journal_path_, std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    if (in.eof()) break;  // torn final line without '\n'
    InclusionPromise p = decode_inclusion_promise(as_bytes(line));
    active_[{p.developer_key, p.app_url}] = {p.digest, p.expires_at};
    journal_.push_back(std::move(p));
  }
}

LogIdentity LogService::identity() const {
  return LogIdentity::for_key(key_.public_key(), base_url_);
}

void LogService::check_fresh(std::int64_t stamped, std::int64_t now) const {
  std::int64_t skew = now > stamped ? now - stamped : stamped - now;
  if (skew > policy_.freshness_window) {
    throw Error(ErrorCode::kStaleTimestamp,
                "timestamp is " + std::to_string(skew) + " s away from server time");
  }
}

void LogService::check_single_active(const PublicKey& developer, const std::string& app_url,
                                     const Digest& digest, std::int64_t now) const {
  if (!policy_.enforce_single_active) return;
  auto it = active_.find({developer, app_url});
  if (it == active_.end() || it->second.digest == digest) return;
  if (now < it->second.expires_at - policy_.clock_tolerance) {
    throw Error(ErrorCode::kActivePromise,
                "a different release for " + app_url + " is valid until " +
                    std::to_string(it->second.expires_at));
  }
}

InclusionPromise LogService::issue(const ReleaseLeaf& leaf, const Hash32& leaf_hash,
                                   std::int64_t now) {
  InclusionPromise p;
  p.leaf_hash = leaf_hash;
  p.app_url = leaf.app_url;
  p.digest = leaf.digest;
  p.developer_key = leaf.developer_key;
  p.issued_at = now;
  p.expires_at = now + policy_.promise_validity;
  sign_record(p, key_);

  if (!journal_path_.empty()) {
    std::string line = to_string(canonical_encode(p)) + "\n";
    int fd = ::open(journal_path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    bool ok = fd >= 0 && ::write(fd, line.data(), line.size()) ==
                             static_cast<ssize_t>(line.size());
    if (fd >= 0) {
      ok = ::fsync(fd) == 0 && ok;
      ::close(fd);
    }
    if (!ok) throw Error(ErrorCode::kStorage, "cannot append to issuance journal");
  }
  active_[{p.developer_key, p.app_url}] = {p.digest, p.expires_at};
  journal_.push_back(p);
  return p;
}

InclusionPromise LogService::handle_submit(const SubmissionRequest& request) {
  const ReleaseLeaf& leaf = request.leaf;
  std::lock_guard lock(policy_mu_);
  const std::int64_t now = clock_();
  if (!verify_record(leaf)) {
    throw Error(ErrorCode::kBadSignature, "developer signature does not verify");
  }
  check_fresh(leaf.submitted_at, now);
  check_single_active(leaf.developer_key, leaf.app_url, leaf.digest, now);

  const Hash32 hash = merklelog::release_leaf_hash(leaf);
  if (!log_->find_leaf(hash)) log_->append(leaf, now);
  return issue(leaf, hash, now);
}

InclusionPromise LogService::handle_renew(const RenewalRequest& request) {
  std::lock_guard lock(policy_mu_);
  const std::int64_t now = clock_();
  if (!verify_record(request)) {
    throw Error(ErrorCode::kBadSignature, "renewal signature does not verify");
  }
  check_fresh(request.renewed_at, now);
  auto record = log_->find_leaf(request.leaf_hash);
  if (!record) throw Error(ErrorCode::kUnknownLeaf, "leaf is not in the log");
  if (record->leaf.developer_key != request.developer_key) {
    throw Error(ErrorCode::kBadSignature, "renewal key does not match the logged release");
  }
  check_single_active(record->leaf.developer_key, record->leaf.app_url,
                      record->leaf.digest, now);
  return issue(record->leaf, record->leaf_hash, now);
}

SignedTreeHead LogService::handle_sth() const {
  merklelog::TreeHead head = log_->head();
  SignedTreeHead sth;
  sth.tree_size = head.size;
  sth.root_hash = head.root;
  sth.timestamp = clock_();
  sign_record(sth, key_);
  return sth;
}

merklelog::InclusionProof LogService::handle_inclusion_proof(const Hash32& leaf_hash,
                                                             std::uint64_t tree_size) const {
  auto record = log_->find_leaf(leaf_hash);
  if (!record) throw Error(ErrorCode::kUnknownLeaf, "leaf is not in the log");
  return log_->prove_inclusion(record->index, tree_size);
}

merklelog::ConsistencyProof LogService::handle_consistency(std::uint64_t old_size,
                                                           std::uint64_t new_size) const {
  return log_->prove_consistency(old_size, new_size);
}

std::vector<LogRecord> LogService::handle_entries(std::uint64_t start,
                                                  std::uint64_t end) const {
  if (end > start && end - start > kMaxEntriesPerRequest) end = start + kMaxEntriesPerRequest;
  return log_->entries(start, end);
}

std::vector<InclusionPromise> LogService::issuance_journal() const {
  std::lock_guard lock(policy_mu_);
  return journal_;
}

}  // namespace waitsec::logd
