#include "wait/monitor/monitor.h"

#include <fstream>

#include "wait/core/error.h"
#include "wait/core/files.h"
#include "wait/core/url.h"
#include "wait/merklelog/log.h"

namespace waitsec {
namespace fs = std::filesystem;
namespace {

constexpr std::uint64_t kPage = 1024;

std::optional<PublicKey> parse_key_value(std::string_view value) {
  if (value.starts_with("ed25519:")) value.remove_prefix(8);
  auto raw = base64url_decode(value);
  return raw ? to_fixed<32>(*raw) : std::nullopt;
}

nlohmann::json leaf_summary(const ReleaseLeaf& leaf) {
  return {{"app_url", leaf.app_url},
          {"developer_key", "ed25519:" + base64url_encode(leaf.developer_key)},
          {"digest", leaf.digest.to_string()},
          {"submitted_at", leaf.submitted_at}};
}

std::string hex_id(const Hash32& id) { return to_hex(id); }

}  // namespace

nlohmann::json to_json(const SthRecord& record) {
  return {{"sth", to_json(record.sth)},
          {"fetched_at", record.fetched_at},
          {"verified_against_prev", record.verified_against_prev}};
}

SthRecord sth_record_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.size() != 3 || !j.at("fetched_at").is_number_integer() ||
      !j.at("verified_against_prev").is_boolean()) {
    throw Error(ErrorCode::kEncoding, "bad STH record");
  }
  return {signed_tree_head_from_json(j.at("sth")), j.at("fetched_at").get<std::int64_t>(),
          j.at("verified_against_prev").get<bool>()};
}

bool WatchRule::matches(const ReleaseLeaf& leaf) const {
  if (kind == WatchKind::kDeveloperKey) {
    auto key = parse_key_value(value);
    return key && *key == leaf.developer_key;
  }
  if (!value.empty() && value.back() == '/') return leaf.app_url.starts_with(value);
  return leaf.app_url == value;
}

std::vector<WatchRule> watch_rules_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = parse_json(as_bytes(text));
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  if (!j.is_array()) throw Error(ErrorCode::kConfig, "watch file must be a JSON array");
  std::vector<WatchRule> rules;
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("kind") || !item.contains("value") || !item.contains("label") ||
        !item["kind"].is_string() || !item["value"].is_string() || !item["label"].is_string()) {
      throw Error(ErrorCode::kConfig, "watch rule needs string kind, value and label");
    }
    WatchRule rule;
    std::string kind = item["kind"];
    rule.value = item["value"];
    rule.label = item["label"];
    if (kind == "developer_key") {
      rule.kind = WatchKind::kDeveloperKey;
      if (!parse_key_value(rule.value)) throw Error(ErrorCode::kConfig, "bad developer key in rule " + rule.label);
    } else if (kind == "app_url") {
      rule.kind = WatchKind::kAppUrl;
      if (!Url::parse(rule.value)) throw Error(ErrorCode::kConfig, "bad URL in rule " + rule.label);
    } else {
      throw Error(ErrorCode::kConfig, "unknown rule kind " + kind);
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<WatchRule> load_watch_rules(const fs::path& path) { return watch_rules_from_json(read_file(path)); }

nlohmann::json to_json(const Alert& alert) {
  nlohmann::json j = {{"type", alert.type},
                      {"log_id", base64url_encode(alert.log_id)},
                      {"raised_at", alert.raised_at}};
  if (!alert.label.empty()) j["label"] = alert.label;
  if (alert.leaf_index) j["leaf_index"] = *alert.leaf_index;
  if (alert.leaf_hash) j["leaf_hash"] = base64url_encode(*alert.leaf_hash);
  if (alert.leaf) j["leaf"] = leaf_summary(*alert.leaf);
  if (!alert.evidence.empty()) {
    j["evidence"] = nlohmann::json::array();
    for (const auto& sth : alert.evidence) j["evidence"].push_back(to_json(sth));
  }
  if (!alert.detail.empty()) j["detail"] = alert.detail;
  return j;
}

nlohmann::json to_json(const AuditReport& r) {
  return {{"leaf_index", r.record.index},
          {"leaf_hash", base64url_encode(r.record.leaf_hash)},
          {"leaf", leaf_summary(r.record.leaf)},
          {"sth", to_json(r.sth)},
          {"leaf_hash_matches", r.leaf_hash_matches},
          {"inclusion_verified", r.inclusion_verified},
          {"developer_signature_valid", r.developer_signature_valid}};
}

Monitor::Monitor(fs::path state_dir, std::vector<WatchRule> rules, Clock clock,
                 logd::LogClientFactory clients, AlertSink sink)
    : dir_(std::move(state_dir)),
      rules_(std::move(rules)),
      clock_(std::move(clock)),
      clients_(std::move(clients)),
      sink_(std::move(sink)) {
  if (!dir_.empty()) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir_.string() + ": " + ec.message());
  }
}

LogState& Monitor::load(const LogIdentity& log) {
  std::lock_guard lock(states_mu_);
  auto it = states_.find(log.log_id);
  if (it != states_.end()) return *it->second;
  auto state = std::make_unique<LogState>();
  state->log = log;
  log_mu_.emplace(log.log_id, std::make_unique<std::mutex>());
  if (!dir_.empty()) {
    std::string base = hex_id(log.log_id);
    fs::path state_file = dir_ / (base + ".state.json");
    std::error_code ec;
    if (fs::exists(state_file, ec)) {
      try {
        auto j = parse_json(as_bytes(read_file(state_file)));
        state->suspect = j.at("suspect").get<bool>();
        for (const auto& e : j.at("evidence")) state->evidence.push_back(signed_tree_head_from_json(e));
        for (const auto& a : j.at("alerted")) {
          auto raw = base64url_decode(a.at("leaf_hash").get<std::string>());
          auto hash = raw ? to_fixed<32>(*raw) : std::nullopt;
          if (!hash) throw Error(ErrorCode::kEncoding, "bad leaf hash");
          state->alerted.emplace(a.at("label").get<std::string>(), *hash);
        }
        auto count = j.at("leaf_count").get<std::uint64_t>();
        std::string leaves = read_file(dir_ / (base + ".leaves"));
        if (leaves.size() < count * 32) throw Error(ErrorCode::kStorage, "leaf file shorter than state");
        for (std::uint64_t i = 0; i < count; ++i) {
          Hash32 h;
          std::copy_n(leaves.begin() + static_cast<std::ptrdiff_t>(i * 32), 32, h.begin());
          state->leaves.append(h);
        }
      } catch (const Error&) {
        throw;
      } catch (const std::exception& e) {
        throw Error(ErrorCode::kStorage, "monitor state " + state_file.string() + ": " + e.what());
      }
    }
    std::ifstream journal(dir_ / (base + ".sth.jsonl"));
    std::string line;
    while (std::getline(journal, line)) {
      try {
        state->history.push_back(sth_record_from_json(parse_json(as_bytes(line))));
      } catch (const Error&) {
        break;  // torn tail
      }
    }
  }
  auto& ref = *state;
  states_.emplace(log.log_id, std::move(state));
  return ref;
}

void Monitor::persist(const LogState& state, const std::optional<SthRecord>& appended) {
  if (dir_.empty()) return;
  std::string base = hex_id(state.log.log_id);
  std::string leaves;
  leaves.reserve(state.leaves.size() * 32);
  for (std::uint64_t i = 0; i < state.leaves.size(); ++i) {
    const Hash32& h = state.leaves.leaf(i);
    leaves.append(reinterpret_cast<const char*>(h.data()), h.size());
  }
  write_file_atomic(dir_ / (base + ".leaves"), leaves);
  if (appended) {
    std::ofstream journal(dir_ / (base + ".sth.jsonl"), std::ios::app | std::ios::binary);
    journal << to_string(canonical_bytes(to_json(*appended))) << '\n';
    journal.flush();
    if (!journal) throw Error(ErrorCode::kIo, "cannot append STH journal for " + base);
  }
  nlohmann::json alerted = nlohmann::json::array();
  for (const auto& [label, hash] : state.alerted) {
    alerted.push_back({{"label", label}, {"leaf_hash", base64url_encode(hash)}});
  }
  nlohmann::json evidence = nlohmann::json::array();
  for (const auto& sth : state.evidence) evidence.push_back(to_json(sth));
  nlohmann::json j = {{"log", to_json(state.log)},
                      {"suspect", state.suspect},
                      {"evidence", evidence},
                      {"alerted", alerted},
                      {"leaf_count", state.leaves.size()}};
  write_file_atomic(dir_ / (base + ".state.json"), to_string(canonical_bytes(j)));
}

void Monitor::emit(const Alert& alert) {
  std::lock_guard lock(sink_mu_);
  if (sink_) sink_(alert);
}

void Monitor::equivocate(LogState& state, std::vector<SignedTreeHead> evidence, const std::string& why) {
  state.suspect = true;
  state.evidence = evidence;
  Alert alert;
  alert.type = "equivocation";
  alert.log_id = state.log.log_id;
  alert.evidence = std::move(evidence);
  alert.detail = why;
  alert.raised_at = clock_();
  persist(state, std::nullopt);
  emit(alert);
  throw Error(ErrorCode::kLogEquivocation, why);
}

std::vector<Alert> Monitor::poll(const LogIdentity& log) {
  LogState& state = load(log);
  std::mutex* mu;
  {
    std::lock_guard lock(states_mu_);
    mu = log_mu_.at(log.log_id).get();
  }
  std::lock_guard lock(*mu);
  if (state.suspect) throw Error(ErrorCode::kLogEquivocation, "log is marked suspect");

  auto client = clients_(log);
  SignedTreeHead sth = client->sth();
  if (sth.log_id != log.log_id || !verify_record(sth, log.public_key)) {
    throw Error(ErrorCode::kBadSignature, "tree head does not verify under the log key");
  }

  const SthRecord* prev = state.history.empty() ? nullptr : &state.history.back();
  bool verified = false;
  if (prev) {
    const SignedTreeHead& old = prev->sth;
    if (sth.tree_size < old.tree_size) {
      equivocate(state, {old, sth}, "tree size decreased");
    } else if (sth.tree_size == old.tree_size) {
      if (sth.root_hash != old.root_hash) equivocate(state, {old, sth}, "different roots at the same size");
    } else {
      auto proof = client->consistency(old.tree_size, sth.tree_size);
      if (!merklelog::verify_consistency({old.tree_size, old.root_hash}, {sth.tree_size, sth.root_hash}, proof)) {
        equivocate(state, {old, sth}, "consistency proof does not verify");
      }
    }
    verified = true;
  }

  // Fetch new entries and replay them into the local tree before
  // committing anything.
  merklelog::MerkleTree tree = state.leaves;
  std::vector<merklelog::LogRecord> fresh;
  std::uint64_t start = tree.size();
  if (start > sth.tree_size) {
    std::vector<SignedTreeHead> ev;
    if (prev) ev.push_back(prev->sth);
    ev.push_back(sth);
    equivocate(state, ev, "tree head smaller than entries already seen");
  }
  while (start < sth.tree_size) {
    auto page = client->entries(start, std::min(sth.tree_size, start + kPage));
    if (page.empty()) throw Error(ErrorCode::kNetwork, "log returned no entries");
    for (auto& record : page) {
      if (record.index != tree.size() || merklelog::release_leaf_hash(record.leaf) != record.leaf_hash) {
        std::vector<SignedTreeHead> ev;
        if (prev) ev.push_back(prev->sth);
        ev.push_back(sth);
        equivocate(state, ev, "entry " + std::to_string(record.index) + " does not match its hash");
      }
      tree.append(record.leaf_hash);
      fresh.push_back(std::move(record));
      if (tree.size() >= sth.tree_size) break;
    }
    start = tree.size();
  }
  if (tree.root_at(sth.tree_size) != sth.root_hash) {
    std::vector<SignedTreeHead> ev;
    if (prev) ev.push_back(prev->sth);
    ev.push_back(sth);
    equivocate(state, ev, "entries do not hash to the tree head");
  }

  std::vector<Alert> alerts;
  std::int64_t now = clock_();
  for (const auto& record : fresh) {
    for (const auto& rule : rules_) {
      if (!rule.matches(record.leaf)) continue;
      if (!state.alerted.emplace(rule.label, record.leaf_hash).second) continue;
      Alert alert;
      alert.type = "release";
      alert.label = rule.label;
      alert.log_id = log.log_id;
      alert.leaf_index = record.index;
      alert.leaf_hash = record.leaf_hash;
      alert.leaf = record.leaf;
      alert.raised_at = now;
      alerts.push_back(std::move(alert));
    }
  }
  state.leaves = std::move(tree);
  SthRecord record{sth, now, verified};
  state.history.push_back(record);
  persist(state, record);
  for (const auto& a : alerts) emit(a);
  return alerts;
}

AuditReport Monitor::audit_release(const LogIdentity& log, const Hash32& leaf_hash) {
  auto client = clients_(log);
  SignedTreeHead sth = client->sth();
  if (sth.log_id != log.log_id || !verify_record(sth, log.public_key)) {
    throw Error(ErrorCode::kBadSignature, "tree head does not verify under the log key");
  }
  if (sth.tree_size == 0) throw Error(ErrorCode::kUnknownLeaf, "log is empty");
  auto proof = client->inclusion_proof(leaf_hash, sth.tree_size);
  auto records = client->entries(proof.leaf_index, proof.leaf_index + 1);
  if (records.size() != 1) throw Error(ErrorCode::kUnknownLeaf, "log returned no record for the leaf");
  AuditReport report;
  report.record = records.front();
  report.sth = sth;
  report.leaf_hash_matches = merklelog::release_leaf_hash(report.record.leaf) == leaf_hash &&
                             report.record.leaf_hash == leaf_hash;
  report.inclusion_verified =
      merklelog::verify_inclusion(leaf_hash, proof, {sth.tree_size, sth.root_hash});
  report.developer_signature_valid = verify_record(report.record.leaf);
  return report;
}

std::optional<LogState> Monitor::state(const LogIdentity& log) {
  LogState& s = load(log);
  std::mutex* mu;
  {
    std::lock_guard lock(states_mu_);
    mu = log_mu_.at(log.log_id).get();
  }
  std::lock_guard lock(*mu);
  return s;
}

}  // namespace waitsec
