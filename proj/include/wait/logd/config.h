#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "wait/logd/service.h"

namespace waitsec::logd {

// Service configuration, read from a key-value file:
//
//   # comment
//   listen = 127.0.0.1:8080
//   base_url = http://127.0.0.1:8080
//   key_file = log-key.json          (relative to the config file)
//   data_dir = data                  (relative to the config file)
//   promise_validity = 604800
//   clock_tolerance = 600
//   freshness_window = 300
//   enforce_single_active = true
struct LogdConfig {
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;
  std::string base_url;  // defaults to http://<listen>
  std::filesystem::path key_file = "log-key.json";
  std::filesystem::path data_dir = "data";
  LogPolicy policy;
};

// Error(kConfig) on unknown keys, malformed values or an invalid policy.
LogdConfig parse_logd_config(std::string_view text,
                             const std::filesystem::path& base_dir = {});
LogdConfig load_logd_config(const std::filesystem::path& path);

}  // namespace waitsec::logd
