#include "k41/io.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool strict = false;
  int threads = 0;
};

int env_threads() {
  const char* v = std::getenv("K41_THREADS");
  if (!v || !*v) return 1;
  try {
    return std::stoi(v);
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic Navier-Stokes Galerkin solver, structure-function diagnostics and eddy model"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<const char*, const char*>> commands{
      {"simulate", "integrate the Galerkin system and report the time-averaged measure"},
      {"stokes", "report the exact stationary measure of the linear system"},
      {"diagnose", "report the diagnostics of a checkpointed field"},
      {"sweep", "simulate a list of viscosities and scan the K41 windows"},
      {"conditions", "evaluate the spectral condition sums of a simulated measure"},
      {"scale-verify", "check the pathwise rescaling of a trajectory"},
      {"eddy", "Monte-Carlo moments of the vortex-filament model"}};
  std::string chosen;
  CLI::Option* seed_opt = nullptr;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "output directory (overrides K41_OUT)");
    auto* s = sub->add_option("--seed", flags.seed, "root seed");
    sub->add_flag("--strict", flags.strict, "fail with exit code 3 when a balance check misses its tolerance");
    sub->add_option("--threads", flags.threads, "worker threads (overrides K41_THREADS)");
    sub->callback([&chosen, &seed_opt, s, name = std::string(name)] {
      chosen = name;
      seed_opt = s;
    });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  k41::RunOptions options;
  options.strict = flags.strict;
  options.threads = flags.threads > 0 ? flags.threads : env_threads();
  if (!flags.out.empty()) {
    options.out = flags.out;
  } else if (const char* env = std::getenv("K41_OUT"); env && *env) {
    options.out = std::string(env);
  }
  if (seed_opt && seed_opt->count() > 0) options.seed = flags.seed;
  return k41::run_command(k41::parse_mode(chosen), flags.config, options, std::cerr);
}
