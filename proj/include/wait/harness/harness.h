#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "wait/core/bytes.h"
#include "wait/core/url.h"
#include "wait/verifier/decide.h"

namespace httplib {
class Server;
}

namespace waitsec::harness {

inline constexpr std::string_view kDemoHost = "wait-demo.example";
inline constexpr std::string_view kDemoUrl = "https://wait-demo.example/index.html";

struct DemoBundleSpec {
  int scripts = 6;
  int stylesheets = 2;
  std::uint64_t subresource_bytes = 1'500'000;
  std::uint64_t seed = 0x57414954;
  std::string version = "1.0.0";
};

struct DemoBundle {
  std::filesystem::path dir;
  std::string main_document = "index.html";
  std::vector<std::string> subresources;  // bundle-relative paths
  std::uint64_t total_bytes = 0;          // all files including the main document
};

// Writes index.html plus the generated scripts and stylesheets. Identical
// specs give identical bytes; only the main document depends on version.
DemoBundle generate_demo_bundle(const std::filesystem::path& dir, const DemoBundleSpec& spec = {});

// Serves a directory over HTTP on 127.0.0.1 and adds the configured
// headers to every response, like a static server with add_header lines.
class StaticSite {
 public:
  StaticSite();
  ~StaticSite();
  StaticSite(const StaticSite&) = delete;
  StaticSite& operator=(const StaticSite&) = delete;

  // Error(kSetup) when no port can be bound.
  void start();
  void stop();
  int port() const { return port_; }

  void set_root(const std::filesystem::path& root);
  void set_headers(HttpHeaders headers);
  // Applies a snippet produced by emit_server_config.
  void apply_server_config(std::string_view snippet);
  // Serves content for path instead of the file on disk.
  void override_file(const std::string& path, Bytes content);
  void clear_overrides();

 private:
  mutable std::mutex mu_;
  std::filesystem::path root_;
  HttpHeaders headers_;
  std::map<std::string, Bytes> overrides_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

struct HttpResponse {
  int status = 0;
  Bytes body;
  HttpHeaders headers;
};

// GET against 127.0.0.1:port, keeping the path and query of url. Stands in
// for DNS plus TLS termination of the demo host. nullopt on transport
// failure.
std::optional<HttpResponse> local_get(int port, const Url& url);

// Subresource fetcher for decide(): the demo host maps to the local site,
// anything else fails.
SubresourceFetcher local_fetcher(int port);

struct StepResult {
  std::string name;
  std::string expected;
  std::string observed;
  bool ok = false;
};

struct ScenarioReport {
  std::string name;
  bool passed = false;
  std::vector<StepResult> steps;
  std::vector<std::string> reasons_seen;  // sorted, distinct
  std::string error;                      // setup failure, if any

  nlohmann::json to_json() const;
};

const std::vector<std::string>& scenario_names();

// Error(kSetup) for an unknown scenario or a broken environment. A failed
// expectation is reported in the result, not thrown.
ScenarioReport run_scenario(const std::string& name, const std::filesystem::path& workdir);

// Names of BLOCK reasons that no report in the list exercised.
std::vector<std::string> uncovered_reasons(const std::vector<ScenarioReport>& reports);

struct BenchSummary {
  std::uint64_t iterations = 0;
  double min_ms = 0;
  double median_ms = 0;
  double p95_ms = 0;
  std::uint64_t fixture_bytes = 0;
  bool all_allowed = true;

  nlohmann::json to_json() const;
};

// Seals the demo bundle once, then times decide() over it with in-memory
// subresources and the wall clock.
BenchSummary bench_verify(std::uint64_t iterations, const std::filesystem::path& workdir);

}  // namespace waitsec::harness
