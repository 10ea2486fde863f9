#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "conic_lens/cli/config.hpp"
#include "conic_lens/cli/run.hpp"

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("conic-lens");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("CONIC_LENS_LOG")) {
    auto parsed = spdlog::level::from_str(lvl);
    if (parsed == spdlog::level::off && std::string(lvl) != "off")
      spdlog::warn("unknown CONIC_LENS_LOG level '{}'", lvl);
    else
      spdlog::set_level(parsed);
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Geodesic flow, X-ray transforms and lens data on asymptotically conic manifolds"};
  app.require_subcommand(1);
  std::string config_path, out_dir = ".";
  int jobs = 1;
  for (const auto& task : conic::cli::kTasks) {
    CLI::App* sub = app.add_subcommand(task, "run the " + task + " experiment");
    sub->add_option("--config", config_path, "TOML experiment file")->required();
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1, 256));
    sub->add_option("--out", out_dir, "output directory");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : conic::cli::kConfigError;
  }
  std::string task = app.get_subcommands().front()->get_name();
  conic::cli::ExperimentConfig cfg;
  try {
    cfg = conic::cli::load_config(config_path, task);
  } catch (const conic::Error& e) {
    spdlog::error("config error: {}", e.what());
    return conic::cli::kConfigError;
  }
  return conic::cli::run(cfg, jobs, out_dir);
}
