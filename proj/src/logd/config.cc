#include "wait/logd/config.h"

#include <charconv>
#include <sstream>

#include "wait/core/error.h"
#include "wait/core/files.h"

namespace waitsec::logd {
namespace {

std::string trim(std::string_view s) {
  const char* ws = " \t\r";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || ec != std::errc() || p != value.data() + value.size()) {
    throw Error(ErrorCode::kConfig, key + ": expected an integer, got '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "yes" || value == "1") return true;
  if (value == "false" || value == "no" || value == "0") return false;
  throw Error(ErrorCode::kConfig, key + ": expected true or false");
}

}  // namespace

LogdConfig parse_logd_config(std::string_view text, const std::filesystem::path& base_dir) {
  LogdConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped = trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kConfig, "line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (key == "listen") {
      auto colon = value.rfind(':');
      if (colon == std::string::npos) throw Error(ErrorCode::kConfig, "listen: expected host:port");
      cfg.listen_host = value.substr(0, colon);
      cfg.listen_port = static_cast<int>(parse_int(key, value.substr(colon + 1)));
      if (cfg.listen_port < 0 || cfg.listen_port > 65535) {
        throw Error(ErrorCode::kConfig, "listen: port out of range");
      }
    } else if (key == "base_url") {
      cfg.base_url = value;
    } else if (key == "key_file") {
      cfg.key_file = value;
    } else if (key == "data_dir") {
      cfg.data_dir = value;
    } else if (key == "promise_validity") {
      cfg.policy.promise_validity = parse_int(key, value);
    } else if (key == "clock_tolerance") {
      cfg.policy.clock_tolerance = parse_int(key, value);
    } else if (key == "freshness_window") {
      cfg.policy.freshness_window = parse_int(key, value);
    } else if (key == "enforce_single_active") {
      cfg.policy.enforce_single_active = parse_bool(key, value);
    } else {
      throw Error(ErrorCode::kConfig, "unknown key '" + key + "'");
    }
  }
  if (cfg.key_file.is_relative()) cfg.key_file = base_dir / cfg.key_file;
  if (cfg.data_dir.is_relative()) cfg.data_dir = base_dir / cfg.data_dir;
  if (cfg.base_url.empty()) {
    cfg.base_url = "http://" + cfg.listen_host + ":" + std::to_string(cfg.listen_port);
  }
  cfg.policy.validate();
  return cfg;
}

LogdConfig load_logd_config(const std::filesystem::path& path) {
  return parse_logd_config(read_file(path), path.parent_path());
}

}  // namespace waitsec::logd
