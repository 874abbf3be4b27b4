#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

#include "homog2d/config.hpp"
#include "homog2d/error.hpp"
#include "homog2d/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"homog2d: periodic homogenization of 2D elliptic systems"};
  std::string command, config, out, cache;
  int threads = 0;
  long long seed = -1;
  bool quiet = false;
  app.add_option("command", command, "cell | effective | solve | green | rates | all")
      ->required()
      ->check(CLI::IsMember({"cell", "effective", "solve", "green", "rates", "all"}));
  app.add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out, "output directory");
  app.add_option("--cache", cache, "corrector cache directory (HOMOG2D_CACHE overrides)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 256));
  app.add_option("--seed", seed, "seed for randomized probes")->check(CLI::NonNegativeNumber);
  app.add_flag("-q,--quiet", quiet, "warnings and errors only");
  CLI11_PARSE(app, argc, argv);
  if (quiet) spdlog::set_level(spdlog::level::warn);

  try {
    homog2d::RunConfig cfg = homog2d::parse_config(config);
    cfg.command = homog2d::command_from_string(command);
    if (!out.empty()) cfg.out = out;
    if (!cache.empty()) cfg.cache = cache;
    if (const char* env = std::getenv("HOMOG2D_CACHE"); env && *env) cfg.cache = env;
    if (threads > 0) cfg.threads = threads;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    homog2d::validate_config(cfg);
    const homog2d::RunResult r = homog2d::run(cfg);
    std::cout << r.files.at("report.txt");
    return r.exit_code;
  } catch (const homog2d::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
