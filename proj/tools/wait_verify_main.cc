#include <httplib.h>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "cli_common.h"
#include "wait/bundler/bundler.h"
#include "wait/core/files.h"
#include "wait/verifier/decide.h"

using namespace waitsec;
namespace fs = std::filesystem;

namespace {

constexpr int kExitBlock = 2;
constexpr const char* kSnapshotHeaders = ".wait-headers";

struct Response {
  Bytes body;
  HttpHeaders headers;
};

std::string target(const Url& url) { return url.query.empty() ? url.path : url.path + "?" + url.query; }

std::optional<Response> http_get(const Url& url) {
  httplib::Client client(url.origin());
  client.set_connection_timeout(5);
  client.set_read_timeout(15);
  auto res = client.Get(target(url));
  if (!res || res->status != 200) return std::nullopt;
  Response out{to_bytes(res->body), {}};
  for (const auto& [name, value] : res->headers) out.headers.emplace_back(name, value);
  return out;
}

// Snapshot layout: files by URL path under dir, response headers as
// add_header lines in dir/.wait-headers.
std::optional<Bytes> snapshot_file(const fs::path& dir, const Url& url) {
  std::string rel = url.path == "/" ? "index.html" : url.path.substr(1);
  if (rel.find("..") != std::string::npos || !fs::is_regular_file(dir / rel)) return std::nullopt;
  return to_bytes(read_file(dir / rel));
}

ValidationConfig load_config(const fs::path& path) {
  std::string text = read_file(path);
  nlohmann::json j = parse_json(as_bytes(text));
  if (!j.is_array()) return validation_config_from_json(text);
  ValidationConfig config;
  config.trust_store = load_log_list(path);
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WAIT verifier: decide whether a web application may run"};
  std::string url, config_path, pinstore_path, offline_dir;
  std::int64_t now = -1;
  bool details = false;
  app.add_option("url", url, "Top-level document URL")->required();
  app.add_option("--config", config_path, "Validation config, or a JSON array of trusted logs")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--pinstore", pinstore_path, "Pin store file, created when missing");
  app.add_option("--offline", offline_dir, "Read the response from a directory snapshot")
      ->check(CLI::ExistingDirectory);
  app.add_option("--now", now, "UNIX time to decide at instead of the system clock");
  app.add_flag("--details", details, "Print the detail of each reason on stderr");
  CLI11_PARSE(app, argc, argv);

  return cli::guarded([&] {
    ValidationConfig config = load_config(config_path);
    std::int64_t at = cli::now_or(now);
    PinStore pins;
    if (!pinstore_path.empty()) {
      std::vector<std::string> warnings;
      pins = pinstore_load(pinstore_path, at, &warnings);
      for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    }
    auto parsed = Url::parse(url);
    if (!parsed) throw Error(ErrorCode::kUrl, "cannot parse " + url);

    Response response;
    SubresourceFetcher fetch;
    if (!offline_dir.empty()) {
      auto body = snapshot_file(offline_dir, *parsed);
      if (!body) throw Error(ErrorCode::kIo, "snapshot has no file for " + url);
      response.body = std::move(*body);
      if (fs::exists(fs::path(offline_dir) / kSnapshotHeaders)) {
        response.headers = parse_server_config(read_file(fs::path(offline_dir) / kSnapshotHeaders));
      }
      std::string origin = parsed->origin();
      fetch = [dir = fs::path(offline_dir), origin](const Url& u) -> std::optional<Bytes> {
        if (u.origin() != origin) return std::nullopt;
        return snapshot_file(dir, u);
      };
    } else {
      auto fetched = http_get(*parsed);
      if (!fetched) throw Error(ErrorCode::kNetwork, "cannot fetch " + url);
      response = std::move(*fetched);
      fetch = [](const Url& u) -> std::optional<Bytes> {
        auto r = http_get(u);
        if (!r) return std::nullopt;
        return std::move(r->body);
      };
    }

    Verdict verdict = decide(response.body, response.headers, url, pins, config, at, fetch);
    if (!pinstore_path.empty()) pinstore_save(pins, pinstore_path);
    for (const auto& code : verdict.codes()) std::cout << code << "\n";
    if (details) {
      for (const auto& f : verdict.reasons) std::cerr << reason_name(f.reason) << ": " << f.detail << "\n";
    }
    std::cerr << (verdict.allowed() ? "ALLOW" : "BLOCK") << "\n";
    return verdict.allowed() ? 0 : kExitBlock;
  });
}
