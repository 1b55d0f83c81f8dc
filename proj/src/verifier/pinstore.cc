#include "wait/verifier/pinstore.h"

#include <mutex>

#include "wait/core/error.h"
#include "wait/core/files.h"
#include "wait/core/records.h"
#include "wait/core/url.h"

namespace waitsec {
namespace {

nlohmann::json entry_to_json(const PinEntry& e) {
  nlohmann::json ids = nlohmann::json::array();
  for (const auto& id : e.log_ids_seen) ids.push_back(base64url_encode(id));
  return {{"app_url", e.app_url},     {"first_seen", e.first_seen}, {"last_success", e.last_success},
          {"expires", e.expires},     {"log_ids_seen", ids}};
}

std::int64_t non_negative(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw Error(ErrorCode::kEncoding, std::string(key) + " must be a non-negative integer");
  }
  return v.get<std::int64_t>();
}

PinEntry entry_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.size() != 5) throw Error(ErrorCode::kEncoding, "bad pin entry");
  PinEntry e;
  if (!j.at("app_url").is_string()) throw Error(ErrorCode::kEncoding, "app_url must be a string");
  e.app_url = j.at("app_url").get<std::string>();
  e.first_seen = non_negative(j, "first_seen");
  e.last_success = non_negative(j, "last_success");
  e.expires = non_negative(j, "expires");
  for (const auto& id : j.at("log_ids_seen")) {
    auto raw = id.is_string() ? base64url_decode(id.get<std::string>()) : std::nullopt;
    auto fixed = raw ? to_fixed<32>(*raw) : std::nullopt;
    if (!fixed) throw Error(ErrorCode::kEncoding, "bad log id in pin entry");
    e.log_ids_seen.insert(*fixed);
  }
  return e;
}

}  // namespace

std::string pin_key(std::string_view url) {
  auto parsed = Url::parse(url);
  if (!parsed) return std::string(url);
  return parsed->host + parsed->path;
}

PinStore::PinStore(const PinStore& other) {
  std::shared_lock lock(other.mu_);
  entries_ = other.entries_;
}

PinStore& PinStore::operator=(const PinStore& other) {
  if (this == &other) return *this;
  auto copy = other.entries();
  std::unique_lock lock(mu_);
  entries_.clear();
  for (auto& e : copy) entries_[pin_key(e.app_url)] = std::move(e);
  return *this;
}

std::optional<PinEntry> PinStore::active(std::string_view url, std::int64_t now) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(pin_key(url));
  if (it == entries_.end() || it->second.expires < now) return std::nullopt;
  return it->second;
}

void PinStore::record_success(std::string_view url, std::int64_t now,
                              const std::set<Hash32>& log_ids, std::int64_t max_age) {
  std::unique_lock lock(mu_);
  auto key = pin_key(url);
  auto it = entries_.find(key);
  if (it == entries_.end() || it->second.expires < now) {
    PinEntry fresh;
    fresh.app_url = std::string(url);
    fresh.first_seen = now;
    it = entries_.insert_or_assign(key, fresh).first;
  }
  PinEntry& e = it->second;
  e.app_url = std::string(url);
  e.last_success = now;
  e.expires = now + max_age;
  e.log_ids_seen.insert(log_ids.begin(), log_ids.end());
}

void PinStore::insert(PinEntry entry) {
  std::unique_lock lock(mu_);
  auto key = pin_key(entry.app_url);
  entries_.insert_or_assign(key, std::move(entry));
}

void PinStore::purge(std::int64_t now) {
  std::unique_lock lock(mu_);
  std::erase_if(entries_, [&](const auto& kv) { return kv.second.expires < now; });
}

std::vector<PinEntry> PinStore::entries() const {
  std::shared_lock lock(mu_);
  std::vector<PinEntry> out;
  for (const auto& [_, e] : entries_) out.push_back(e);
  return out;
}

std::size_t PinStore::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

std::string pinstore_to_json(const PinStore& store) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : store.entries()) entries.push_back(entry_to_json(e));
  return to_string(canonical_bytes({{"entries", entries}, {"version", 1}}));
}

PinStore pinstore_load(const std::filesystem::path& path, std::int64_t now,
                       std::vector<std::string>* warnings) {
  PinStore store;
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return store;
  std::string text = read_file(path);
  try {
    auto j = parse_json(as_bytes(text));
    if (!j.is_object() || j.size() != 2 || j.at("version") != 1 || !j.at("entries").is_array()) {
      throw Error(ErrorCode::kEncoding, "unexpected pin store layout");
    }
    std::vector<PinEntry> loaded;
    for (const auto& item : j.at("entries")) loaded.push_back(entry_from_json(item));
    for (auto& e : loaded) {
      if (e.expires >= now) store.insert(std::move(e));
    }
  } catch (const std::exception& e) {
    if (warnings) warnings->push_back("pin store " + path.string() + " ignored: " + e.what());
    return PinStore{};
  }
  return store;
}

void pinstore_save(const PinStore& store, const std::filesystem::path& path) {
  write_file_atomic(path, pinstore_to_json(store));
}

}  // namespace waitsec
