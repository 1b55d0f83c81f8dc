#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "wait/core/records.h"

namespace waitsec {

struct ValidationConfig {
  std::vector<LogIdentity> trust_store;
  std::int64_t required_promises = 1;
  std::int64_t clock_tolerance = 600;
  std::int64_t pin_max_age = 2592000;

  // Error(kConfig) unless 1 <= required_promises <= distinct trusted logs
  // and the durations are non-negative (pin_max_age positive).
  void validate() const;
  const LogIdentity* trusted_log(const Hash32& log_id) const;
};

// {"trust_store": [LogIdentity...], "required_promises": n,
//  "clock_tolerance": s, "pin_max_age": s}; all but trust_store optional.
ValidationConfig validation_config_from_json(std::string_view text);
nlohmann::json to_json(const ValidationConfig& config);
ValidationConfig load_validation_config(const std::filesystem::path& path);

}  // namespace waitsec
