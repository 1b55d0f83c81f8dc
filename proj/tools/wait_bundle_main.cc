#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "cli_common.h"
#include "wait/bundler/bundler.h"
#include "wait/core/files.h"
#include "wait/merklelog/log.h"

using namespace waitsec;
namespace fs = std::filesystem;

namespace {

std::vector<InclusionPromise> load_promises(const fs::path& path) {
  nlohmann::json j = parse_json(as_bytes(read_file(path)));
  if (!j.is_array()) throw Error(ErrorCode::kEncoding, path.string() + ": expected a JSON array of promises");
  std::vector<InclusionPromise> out;
  for (const auto& p : j) out.push_back(inclusion_promise_from_json(p));
  return out;
}

void save_promises(const fs::path& path, const std::vector<InclusionPromise>& promises) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : promises) j.push_back(to_json(p));
  write_file_atomic(path, to_string(canonical_bytes(j)));
}

// Prints one line per log and keeps the promises that came back.
int report(const std::vector<LogOutcome>& outcomes, const std::string& out) {
  std::vector<InclusionPromise> promises;
  for (const auto& o : outcomes) {
    std::cerr << o.log.base_url << ": ";
    if (o.ok()) {
      std::cerr << "ok, expires_at " << o.promise->expires_at << "\n";
      promises.push_back(*o.promise);
    } else {
      auto code = o.log_code ? o.log_code : o.error;
      std::cerr << (code ? error_code_name(*code) : "failed") << " " << o.message << "\n";
    }
  }
  if (!promises.empty()) save_promises(out, promises);
  return promises.size() == outcomes.size() ? 0 : cli::kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WAIT bundler: seal a static web application and register it with transparency logs"};
  app.require_subcommand(1);

  std::string key_out;
  bool force = false;
  auto* keygen = app.add_subcommand("keygen", "Generate a developer signing key");
  keygen->add_option("--out", key_out, "Key file to write")->required();
  keygen->add_flag("--force", force, "Overwrite an existing file");

  std::string dir, main_document = "index.html";
  auto* scan = app.add_subcommand("scan", "List resources and policy violations");
  scan->add_option("dir", dir, "Bundle directory")->required()->check(CLI::ExistingDirectory);
  scan->add_option("--main", main_document, "Main document, relative to the bundle");

  std::string app_url, key_file, out_dir;
  std::int64_t now = -1;
  auto* seal = app.add_subcommand("seal", "Inject integrity, embed CSP and key, sign the release");
  seal->add_option("dir", dir, "Bundle directory")->required()->check(CLI::ExistingDirectory);
  seal->add_option("--main", main_document, "Main document, relative to the bundle");
  seal->add_option("--url", app_url, "App URL the release is served at")->required();
  seal->add_option("--key", key_file, "Developer key file")->required()->check(CLI::ExistingFile);
  seal->add_option("--out", out_dir, "Output directory")->required();
  seal->add_option("--now", now, "UNIX time to stamp instead of the system clock");

  std::string release_file, logs_file, promises_out = "promises.json";
  auto* submit = app.add_subcommand("submit", "Submit a sealed release to every log");
  submit->add_option("--release", release_file, "release.json written by seal")->required()->check(CLI::ExistingFile);
  submit->add_option("--logs", logs_file, "JSON array of LogIdentity")->required()->check(CLI::ExistingFile);
  submit->add_option("--out", promises_out, "Where to write the promises");

  auto* renew = app.add_subcommand("renew", "Ask every log for a fresh promise");
  renew->add_option("--release", release_file, "release.json written by seal")->required()->check(CLI::ExistingFile);
  renew->add_option("--key", key_file, "Developer key file")->required()->check(CLI::ExistingFile);
  renew->add_option("--logs", logs_file, "JSON array of LogIdentity")->required()->check(CLI::ExistingFile);
  renew->add_option("--out", promises_out, "Where to write the promises");
  renew->add_option("--now", now, "UNIX time to stamp instead of the system clock");

  std::string promises_in, csp_file;
  auto* emit = app.add_subcommand("emit-config", "Print add_header lines for a static server");
  emit->add_option("--promises", promises_in, "Promises file")->required()->check(CLI::ExistingFile);
  emit->add_option("--csp", csp_file, "csp.txt written by seal")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  return cli::guarded([&] {
    if (*keygen) {
      if (fs::exists(key_out) && !force) throw Error(ErrorCode::kIo, key_out + " exists; pass --force to overwrite");
      DeveloperKey key = DeveloperKey::from_key_pair(KeyPair::generate());
      save_key_file(key_out, key);
      std::cout << to_string(canonical_encode(key.public_only())) << "\n";
      return 0;
    }
    if (*scan) {
      BundleManifest m = scan_bundle(dir, main_document);
      std::cout << manifest_to_json(m).dump(2) << "\n";
      for (const auto& v : m.violations) std::cerr << reason_name(v.reason) << ": " << v.detail << "\n";
      return m.violations.empty() ? 0 : 2;
    }
    if (*seal) {
      KeyPair key = load_key_file(key_file).key_pair();
      SealedRelease sealed = seal_bundle(dir, main_document, app_url, key, cli::now_or(now));
      write_sealed_bundle(sealed, out_dir);
      std::cout << sealed.leaf.digest.to_string() << "\n";
      std::cerr << sealed.manifest.resources.size() << " resources sealed into " << out_dir << "\n";
      return 0;
    }
    if (*submit) {
      ReleaseLeaf leaf = decode_release_leaf(as_bytes(read_file(release_file)));
      return report(submit_release(leaf, load_log_list(logs_file)), promises_out);
    }
    if (*renew) {
      ReleaseLeaf leaf = decode_release_leaf(as_bytes(read_file(release_file)));
      KeyPair key = load_key_file(key_file).key_pair();
      auto outcomes =
          renew_promise(merklelog::release_leaf_hash(leaf), key, load_log_list(logs_file), cli::now_or(now));
      return report(outcomes, promises_out);
    }
    std::optional<std::string> csp;
    if (!csp_file.empty()) csp = read_file(csp_file);
    std::cout << emit_server_config(load_promises(promises_in), csp);
    return 0;
  });
}
