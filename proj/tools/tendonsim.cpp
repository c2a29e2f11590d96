#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "tendonsim/run.hpp"
#include "tendonsim/scenario.hpp"

namespace {

using tendonsim::ScenarioMode;

struct Command {
  std::string name;
  std::set<ScenarioMode> modes;
};

std::mutex print_mutex;

// 0 pass, 1 monitor or module failure, 2 unusable scenario file.
int run_file(const std::string& file, const Command& command, const std::string& out_root, bool batch, bool strict) {
  tendonsim::Scenario scenario;
  std::vector<std::string> warnings;
  try {
    scenario = tendonsim::load_scenario(file, {strict}, &warnings);
  } catch (const std::exception& e) {
    std::lock_guard lock(print_mutex);
    std::cerr << file << ": " << e.what() << '\n';
    return 2;
  }
  {
    std::lock_guard lock(print_mutex);
    for (const auto& w : warnings) std::cerr << file << ": warning: " << w << '\n';
  }
  if (!command.modes.count(scenario.mode)) {
    std::lock_guard lock(print_mutex);
    std::cerr << file << ": mode " << tendonsim::to_string(scenario.mode) << " is not handled by '" << command.name
              << "'\n";
    return 2;
  }
  tendonsim::RunOptions options;
  if (!out_root.empty()) options.output_dir = batch ? (std::filesystem::path(out_root) / scenario.name).string() : out_root;
  options.base_dir = std::filesystem::path(file).parent_path().string();
  const tendonsim::RunResult result = tendonsim::run(scenario, options);

  std::lock_guard lock(print_mutex);
  std::cout << scenario.name << " -> " << result.output_dir << '\n';
  for (const auto& m : result.monitors)
    std::cout << "  " << (m.passed ? "PASS" : "FAIL") << ' ' << m.name << ": " << m.detail << '\n';
  if (!result.failure_phase.empty())
    std::cout << "  FAIL phase " << result.failure_phase << ": " << result.failure << '\n';
  return result.exit_status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and analysis of tendon-driven continuum robots under energy-shaping control"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string out_root;
  unsigned jobs = 1;
  bool lenient = false;
  app.add_option("--out", out_root, "Output directory (one subdirectory per scenario when several are given)");
  app.add_option("--jobs", jobs, "Scenario files processed concurrently")->check(CLI::PositiveNumber);
  auto* strict_flag = app.add_flag("--strict", "Reject unknown keys (default)");
  app.add_flag("--lenient", lenient, "Warn about unknown keys instead of failing")->excludes(strict_flag);

  const std::vector<Command> commands = {
      {"simulate", {ScenarioMode::simulate, ScenarioMode::probe}},
      {"sweep", {ScenarioMode::sweep_mu, ScenarioMode::sweep_gamma, ScenarioMode::probe}},
      {"identify", {ScenarioMode::identify}},
      {"equilibria", {ScenarioMode::equilibria}},
  };
  const char* help[] = {"Integrate the closed or open loop, or run a single stiffness probe",
                        "Stiffness sweeps over tendon tension or controller gain",
                        "Static parameter identification", "Assignable equilibria and overall stiffness"};
  std::vector<std::string> files;
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    CLI::App* sub = app.add_subcommand(commands[i].name, help[i]);
    sub->add_option("scenario", files, "Scenario files")->required()->check(CLI::ExistingFile);
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  const Command* command = nullptr;
  for (std::size_t i = 0; i < subs.size(); ++i)
    if (subs[i]->parsed()) command = &commands[i];

  const bool batch = files.size() > 1;
  std::atomic<std::size_t> next{0};
  std::atomic<int> worst{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < files.size();) {
      const int code = run_file(files[i], *command, out_root, batch, !lenient);
      int seen = worst.load();
      while (code > seen && !worst.compare_exchange_weak(seen, code)) {
      }
    }
  };
  const unsigned threads = std::min<std::size_t>(jobs, files.size());
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return worst.load();
}
