#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "wait/core/bytes.h"

namespace waitsec {

struct PinEntry {
  std::string app_url;
  std::int64_t first_seen = 0;
  std::int64_t last_success = 0;
  std::int64_t expires = 0;  // last_success + pin_max_age
  std::set<Hash32> log_ids_seen;
  friend bool operator==(const PinEntry&, const PinEntry&) = default;
};

// Pins are keyed by host and path so that a scheme or port change cannot
// shed the protection. Safe for concurrent use.
class PinStore {
 public:
  PinStore() = default;
  PinStore(const PinStore& other);
  PinStore& operator=(const PinStore& other);

  // Unexpired pin covering url, if any.
  std::optional<PinEntry> active(std::string_view url, std::int64_t now) const;
  void record_success(std::string_view url, std::int64_t now, const std::set<Hash32>& log_ids,
                      std::int64_t max_age);
  void insert(PinEntry entry);
  void purge(std::int64_t now);
  std::vector<PinEntry> entries() const;
  std::size_t size() const;

  friend bool operator==(const PinStore& a, const PinStore& b) { return a.entries() == b.entries(); }

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, PinEntry> entries_;
};

std::string pin_key(std::string_view url);

// Canonical JSON {"entries":[...],"version":1}.
std::string pinstore_to_json(const PinStore& store);

// A missing file yields an empty store. A corrupt file yields an empty store
// and a warning. Entries with expires < now are dropped.
PinStore pinstore_load(const std::filesystem::path& path, std::int64_t now,
                       std::vector<std::string>* warnings = nullptr);
// Atomic write-then-rename. Error(kIo) on failure.
void pinstore_save(const PinStore& store, const std::filesystem::path& path);

}  // namespace waitsec
