#include <chrono>
#include <iostream>
#include <string>
#include <thread>

#include "cli_common.h"
#include "wait/core/files.h"
#include "wait/monitor/monitor.h"

using namespace waitsec;

int main(int argc, char** argv) {
  CLI::App app{"WAIT monitor: watch transparency logs for releases and equivocation"};
  std::string logs_file, watch_file, state_dir;
  bool once = false;
  int interval = 60;
  app.add_option("--logs", logs_file, "JSON array of LogIdentity")->required()->check(CLI::ExistingFile);
  app.add_option("--watch", watch_file, "JSON array of watch rules")->required()->check(CLI::ExistingFile);
  app.add_option("--state", state_dir, "State directory")->required();
  app.add_flag("--once", once, "Poll every log once and exit");
  app.add_option("--interval", interval, "Seconds between polls")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  return cli::guarded([&] {
    auto logs = load_log_list(logs_file);
    Monitor monitor(state_dir, load_watch_rules(watch_file), system_clock(), logd::http_log_clients(),
                    [](const Alert& alert) { std::cout << to_string(canonical_bytes(to_json(alert))) << std::endl; });
    for (;;) {
      int failures = 0;
      for (const auto& log : logs) {
        try {
          monitor.poll(log);
        } catch (const Error& e) {
          ++failures;
          std::cerr << log.base_url << ": " << e.code_name() << ": " << e.what() << "\n";
        }
      }
      if (once) return failures == 0 ? 0 : cli::kExitError;
      std::this_thread::sleep_for(std::chrono::seconds(interval));
    }
  });
}
