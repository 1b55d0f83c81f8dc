#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "cli_common.h"
#include "wait/harness/harness.h"

using namespace waitsec;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"WAIT harness: end-to-end threat scenarios and verifier benchmark"};
  app.require_subcommand(1);
  std::string workdir = (fs::temp_directory_path() / "wait-harness").string();
  app.add_option("--workdir", workdir, "Scratch directory");

  std::string scenario, format = "text";
  auto* run = app.add_subcommand("run", "Run one scenario or all of them");
  run->add_option("scenario", scenario, "Scenario name or 'all'")->required();
  run->add_option("--report", format, "Output format")->check(CLI::IsMember({"text", "json"}));

  std::uint64_t iterations = 1000;
  auto* bench = app.add_subcommand("bench", "Time decide() over the demo fixture");
  bench->add_option("--iterations", iterations, "Number of decide() calls");
  bench->add_option("--report", format, "Output format")->check(CLI::IsMember({"text", "json"}));

  CLI11_PARSE(app, argc, argv);

  return cli::guarded([&] {
    if (*bench) {
      harness::BenchSummary s = harness::bench_verify(iterations, workdir);
      if (format == "json") {
        std::cout << s.to_json().dump() << "\n";
      } else {
        std::cout << "iterations " << s.iterations << "\nfixture_bytes " << s.fixture_bytes << "\nmin_ms "
                  << s.min_ms << "\nmedian_ms " << s.median_ms << "\np95_ms " << s.p95_ms << "\nall_allowed "
                  << (s.all_allowed ? "true" : "false") << "\n";
      }
      return s.all_allowed ? 0 : cli::kExitError;
    }

    std::vector<std::string> names = scenario == "all" ? harness::scenario_names() : std::vector{scenario};
    std::vector<harness::ScenarioReport> reports;
    for (const auto& name : names) reports.push_back(harness::run_scenario(name, workdir));
    bool all_passed = true;
    for (const auto& r : reports) all_passed = all_passed && r.passed;
    std::vector<std::string> uncovered = harness::uncovered_reasons(reports);

    if (format == "json") {
      nlohmann::json j = {{"scenarios", nlohmann::json::array()}, {"passed", all_passed}};
      for (const auto& r : reports) j["scenarios"].push_back(r.to_json());
      if (scenario == "all") j["uncovered_reasons"] = uncovered;
      std::cout << j.dump(2) << "\n";
    } else {
      for (const auto& r : reports) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << "\n";
        if (!r.error.empty()) std::cout << "  error: " << r.error << "\n";
        for (const auto& s : r.steps) {
          std::cout << "  [" << (s.ok ? "ok" : "!!") << "] " << s.name << ": " << s.observed;
          if (!s.ok) std::cout << " (expected " << s.expected << ")";
          std::cout << "\n";
        }
      }
      if (scenario == "all") {
        std::cout << "uncovered reasons: " << (uncovered.empty() ? "none" : "") << "\n";
        for (const auto& u : uncovered) std::cout << "  " << u << "\n";
      }
    }
    return all_passed && (scenario != "all" || uncovered.empty()) ? 0 : cli::kExitError;
  });
}
