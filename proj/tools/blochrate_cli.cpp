#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "blochrate/harness.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int jobs = 0;
};

int run(const std::string& name, const Options& opt) {
  blochrate::ExperimentConfig cfg = blochrate::load_config(opt.config);
  cfg.study = blochrate::parse_study(name);
  if (opt.seed_given) cfg.seed = opt.seed;
  if (opt.jobs > 0) cfg.jobs = opt.jobs;
  if (!opt.out.empty()) cfg.out_dir = opt.out;

  const blochrate::StudyResult result = blochrate::run_study(cfg);
  blochrate::write_result(result, cfg, cfg.out_dir);
  for (const auto& c : result.checks)
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
  std::cout << name << ": " << (result.passed() ? "all checks passed" : "some checks failed") << " (" << cfg.out_dir
            << ")\n";
  return result.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bloch equations, transition rates and time-layer studies"};
  app.require_subcommand(1);
  Options opt;
  std::string chosen;

  for (const char* name : {"simulate-bloch", "simulate-rate", "rates", "converge", "average-oracle", "timelayer",
                           "equilibrium", "dioph"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", opt.config, "YAML experiment file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory (overrides the config)");
    sub->add_option("--seed", opt.seed, "RNG seed (overrides the config)")->each([&](const std::string&) {
      opt.seed_given = true;
    });
    sub->add_option("--jobs", opt.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->callback([&chosen, name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    return run(chosen, opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
