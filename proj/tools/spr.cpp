#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/spdlog.h>

#include "spr/experiments.hpp"

namespace {

enum Exit { kOk = 0, kIo = 1, kConfig = 2, kNumerical = 3 };

std::vector<std::string> split_formats(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  spdlog::cfg::load_env_levels();  // SPDLOG_LEVEL=debug etc.

  CLI::App app{"Sparse spectrum recovery experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run the experiment described by a YAML config");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out_dir;
  std::string formats;
  bool quiet = false;
  run->add_option("config", config_path, "Experiment config file")->required();
  run->add_option("--seed", seed, "Override the base seed");
  run->add_option("--jobs", jobs, "Worker threads (0: all cores)");
  run->add_option("--out", out_dir, "Override output_dir");
  run->add_option("--format", formats, "Comma-separated subset of csv,json,pgm");
  run->add_flag("-q,--quiet", quiet, "Suppress per-trial summary lines");

  auto* check = app.add_subcommand("check", "Parse and validate a config without running it");
  std::string check_path;
  check->add_option("config", check_path, "Experiment config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*check) {
      const auto cfg = spr::load_config(check_path);
      std::cout << "ok: " << spr::to_string(cfg.experiment) << '\n';
      return kOk;
    }
    auto cfg = spr::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (jobs) cfg.jobs = *jobs;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (!formats.empty()) cfg.formats = split_formats(formats);
    cfg.validate();

    std::ostringstream sink;
    std::ostream& log = quiet ? static_cast<std::ostream&>(sink) : std::cout;
    const auto summary = spr::run_experiment(cfg, log);
    for (const auto& f : summary.files) spdlog::info("wrote {}", f.string());
    std::cout << "done: " << summary.files.size() << " files in " << cfg.output_dir.string()
              << '\n';
    return kOk;
  } catch (const spr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const spr::IllConditionedError& e) {
    std::cerr << "numerical failure: " << e.what() << " (cond " << e.condition() << ")\n";
    return kNumerical;
  } catch (const std::domain_error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
}
