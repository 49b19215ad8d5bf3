// critpop <task> --config <path> --out <dir> [--jobs n] [--seed s]
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "critpop/cli.hpp"
#include "critpop/error.hpp"

namespace {

constexpr int kExitError = 1;

std::uint64_t parse_seed(const std::string& text, const char* origin) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty() || text.front() == '-')
    throw critpop::Error(critpop::ErrorCode::InvalidArgument, "cli", "seed",
                         std::string(origin) + " must be a non-negative integer, got '" + text + "'");
  return v;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and invasion-rate estimation for switched population models"};
  app.require_subcommand(1, 1);

  std::string config_path, out_dir = ".", seed_text;
  int jobs = 1;
  auto add_common = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    if (needs_out) {
      sub->add_option("--out", out_dir, "output directory")->capture_default_str();
      sub->add_option("--jobs", jobs, "concurrent replicates or sweep points")
          ->check(CLI::PositiveNumber)
          ->capture_default_str();
      sub->add_option("--seed", seed_text, "seed override (else $CRITPOP_SEED, else sim.seed)");
    }
  };
  std::vector<std::pair<CLI::App*, critpop::cli::Task>> tasks;
  for (auto t : {critpop::cli::Task::Simulate, critpop::cli::Task::Threshold,
                 critpop::cli::Task::Tune, critpop::cli::Task::Couple,
                 critpop::cli::Task::Experiment}) {
    auto* sub = app.add_subcommand(std::string(critpop::cli::to_string(t)));
    add_common(sub, true);
    tasks.emplace_back(sub, t);
  }
  auto* validate = app.add_subcommand("validate", "check a config and print it with defaults filled");
  add_common(validate, false);

  CLI11_PARSE(app, argc, argv);

  try {
    critpop::cli::RunConfig rc = critpop::cli::load_config(config_path);
    if (validate->parsed()) {
      std::cout << rc.effective.dump(2) << "\n";
      return 0;
    }
    if (!seed_text.empty()) {
      rc.seed = parse_seed(seed_text, "--seed");
    } else if (const char* env = std::getenv("CRITPOP_SEED"); env && *env) {
      rc.seed = parse_seed(env, "CRITPOP_SEED");
    }
    for (const auto& [sub, task] : tasks) {
      if (!sub->parsed()) continue;
      const auto outcome = critpop::cli::run(std::move(rc), task, out_dir, jobs);
      const auto& s = outcome.summary;
      std::cerr << "critpop " << critpop::cli::to_string(task) << ": " << s["status"].get<std::string>()
                << " (" << out_dir << "/summary.json)\n";
      return outcome.exit_code;
    }
  } catch (const critpop::Error& e) {
    std::cerr << "critpop: error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "critpop: error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
