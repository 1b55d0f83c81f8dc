#include "wait/verifier/config.h"

#include <set>

#include "wait/core/error.h"
#include "wait/core/files.h"

namespace waitsec {
namespace {

std::int64_t read_int(const nlohmann::json& j, const char* key, std::int64_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw Error(ErrorCode::kConfig, std::string(key) + " must be an integer");
  return v.get<std::int64_t>();
}

}  // namespace

void ValidationConfig::validate() const {
  std::set<Hash32> ids;
  for (const auto& log : trust_store) ids.insert(log.log_id);
  if (required_promises < 1) throw Error(ErrorCode::kConfig, "required_promises must be positive");
  if (static_cast<std::size_t>(required_promises) > ids.size()) {
    throw Error(ErrorCode::kConfig, "required_promises exceeds the number of trusted logs");
  }
  if (clock_tolerance < 0) throw Error(ErrorCode::kConfig, "clock_tolerance must be non-negative");
  if (pin_max_age <= 0) throw Error(ErrorCode::kConfig, "pin_max_age must be positive");
}

const LogIdentity* ValidationConfig::trusted_log(const Hash32& log_id) const {
  for (const auto& log : trust_store) {
    if (log.log_id == log_id) return &log;
  }
  return nullptr;
}

ValidationConfig validation_config_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = parse_json(as_bytes(text));
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kConfig, "config must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "trust_store" && key != "required_promises" && key != "clock_tolerance" &&
        key != "pin_max_age") {
      throw Error(ErrorCode::kConfig, "unknown config key " + key);
    }
  }
  ValidationConfig config;
  if (!j.contains("trust_store") || !j["trust_store"].is_array()) {
    throw Error(ErrorCode::kConfig, "trust_store must be an array");
  }
  try {
    for (const auto& entry : j["trust_store"]) config.trust_store.push_back(log_identity_from_json(entry));
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, std::string("trust_store: ") + e.what());
  }
  config.required_promises = read_int(j, "required_promises", config.required_promises);
  config.clock_tolerance = read_int(j, "clock_tolerance", config.clock_tolerance);
  config.pin_max_age = read_int(j, "pin_max_age", config.pin_max_age);
  config.validate();
  return config;
}

nlohmann::json to_json(const ValidationConfig& config) {
  nlohmann::json logs = nlohmann::json::array();
  for (const auto& log : config.trust_store) logs.push_back(to_json(log));
  return {{"trust_store", logs},
          {"required_promises", config.required_promises},
          {"clock_tolerance", config.clock_tolerance},
          {"pin_max_age", config.pin_max_age}};
}

ValidationConfig load_validation_config(const std::filesystem::path& path) {
  return validation_config_from_json(read_file(path));
}

}  // namespace waitsec
