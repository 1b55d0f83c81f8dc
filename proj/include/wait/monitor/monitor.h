#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wait/core/clock.h"
#include "wait/core/records.h"
#include "wait/logd/client.h"
#include "wait/merklelog/merkle.h"

namespace waitsec {

struct SthRecord {
  SignedTreeHead sth;
  std::int64_t fetched_at = 0;
  bool verified_against_prev = false;
  friend bool operator==(const SthRecord&, const SthRecord&) = default;
};

nlohmann::json to_json(const SthRecord& record);
SthRecord sth_record_from_json(const nlohmann::json& j);

enum class WatchKind { kDeveloperKey, kAppUrl };

// developer_key rules hold "ed25519:<base64url>" or bare base64url.
// app_url rules match exactly, or as a prefix when the value ends in '/'.
struct WatchRule {
  WatchKind kind = WatchKind::kAppUrl;
  std::string value;
  std::string label;

  bool matches(const ReleaseLeaf& leaf) const;
};

// JSON array of {"kind","value","label"}. Error(kConfig) on bad rules.
std::vector<WatchRule> watch_rules_from_json(std::string_view text);
std::vector<WatchRule> load_watch_rules(const std::filesystem::path& path);

struct Alert {
  std::string type;   // "release" or "equivocation"
  std::string label;  // rule label, empty for equivocation
  Hash32 log_id{};
  std::optional<std::uint64_t> leaf_index;
  std::optional<Hash32> leaf_hash;
  std::optional<ReleaseLeaf> leaf;
  std::vector<SignedTreeHead> evidence;
  std::string detail;
  std::int64_t raised_at = 0;
};

nlohmann::json to_json(const Alert& alert);

struct LogState {
  LogIdentity log;
  std::vector<SthRecord> history;  // fetch order
  bool suspect = false;
  std::vector<SignedTreeHead> evidence;
  std::set<std::pair<std::string, Hash32>> alerted;  // (rule label, leaf hash)
  merklelog::MerkleTree leaves;                       // hashes seen so far
};

struct AuditReport {
  merklelog::LogRecord record;
  SignedTreeHead sth;
  bool leaf_hash_matches = false;
  bool inclusion_verified = false;
  bool developer_signature_valid = false;
  bool ok() const { return leaf_hash_matches && inclusion_verified && developer_signature_valid; }
};

nlohmann::json to_json(const AuditReport& report);

// Tracks logs by polling. One mutator per log at a time; alerts go to the
// sink one at a time in emission order.
class Monitor {
 public:
  using AlertSink = std::function<void(const Alert&)>;

  // An empty state_dir keeps state in memory only.
  Monitor(std::filesystem::path state_dir, std::vector<WatchRule> rules, Clock clock,
          logd::LogClientFactory clients, AlertSink sink = {});

  // Fetches and checks the newest head, verifies it extends the previous one,
  // scans new entries and raises one alert per (rule, leaf).
  //   kNetwork / kBadSignature: nothing recorded.
  //   kLogEquivocation: the log is marked suspect, both heads are kept as
  //   evidence and an equivocation alert is raised before throwing.
  std::vector<Alert> poll(const LogIdentity& log);

  // Error(kUnknownLeaf) when the log does not know leaf_hash.
  AuditReport audit_release(const LogIdentity& log, const Hash32& leaf_hash);

  // Snapshot of a log's state after loading it from disk if needed.
  std::optional<LogState> state(const LogIdentity& log);

 private:
  LogState& load(const LogIdentity& log);
  void persist(const LogState& state, const std::optional<SthRecord>& appended);
  [[noreturn]] void equivocate(LogState& state, std::vector<SignedTreeHead> evidence,
                               const std::string& why);
  void emit(const Alert& alert);

  std::filesystem::path dir_;
  std::vector<WatchRule> rules_;
  Clock clock_;
  logd::LogClientFactory clients_;
  AlertSink sink_;
  std::mutex states_mu_;
  std::map<Hash32, std::unique_ptr<LogState>> states_;
  std::map<Hash32, std::unique_ptr<std::mutex>> log_mu_;
  std::mutex sink_mu_;
};

}  // namespace waitsec
