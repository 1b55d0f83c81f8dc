#include <filesystem>
#include <iostream>
#include <string>

#include "cli_common.h"
#include "wait/core/files.h"
#include "wait/logd/config.h"
#include "wait/logd/http_server.h"
#include "wait/logd/service.h"

using namespace waitsec;

int main(int argc, char** argv) {
  CLI::App app{"WAIT transparency log service"};
  app.require_subcommand(1);

  std::string key_out;
  bool force = false;
  auto* keygen = app.add_subcommand("keygen", "Generate a log signing key");
  keygen->add_option("--out", key_out, "Key file to write")->required();
  keygen->add_flag("--force", force, "Overwrite an existing file");

  std::string key_in, base_url;
  auto* identity = app.add_subcommand("identity", "Print the LogIdentity clients should trust");
  identity->add_option("--key", key_in, "Log key file")->required()->check(CLI::ExistingFile);
  identity->add_option("--base-url", base_url, "URL the log is reachable at")->required();

  std::string config_path;
  auto* serve = app.add_subcommand("serve", "Run the log over HTTP");
  serve->add_option("--config", config_path, "Service configuration file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  return cli::guarded([&] {
    if (*keygen) {
      if (std::filesystem::exists(key_out) && !force) {
        throw Error(ErrorCode::kIo, key_out + " exists; pass --force to overwrite");
      }
      DeveloperKey key = DeveloperKey::from_key_pair(KeyPair::generate());
      save_key_file(key_out, key);
      std::cout << to_string(canonical_encode(key.public_only())) << "\n";
      return 0;
    }
    if (*identity) {
      DeveloperKey key = load_key_file(key_in);
      std::cout << to_string(canonical_encode(LogIdentity::for_key(key.public_key, base_url))) << "\n";
      return 0;
    }
    logd::LogdConfig config = logd::load_logd_config(config_path);
    KeyPair key = load_key_file(config.key_file).key_pair();
    auto service = logd::LogService::open(key, config.base_url, config.policy, system_clock(), config.data_dir);
    std::cerr << "wait-logd: " << to_string(canonical_encode(service->identity())) << "\n"
              << "wait-logd: listening on " << config.listen_host << ":" << config.listen_port << ", "
              << service->tree_size() << " entries\n";
    logd::LogHttpServer server(*service);
    server.listen_blocking(config.listen_host, config.listen_port);
    return 0;
  });
}
