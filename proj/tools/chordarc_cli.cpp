// chordarc: batch driver for the approximation experiments.
//
//   chordarc check-curve --config run.json
//   chordarc direct      --config run.json --out out --levels 2..5
//   chordarc inverse     --config run.json [--dumps out/approximants]
//   chordarc verify      --config run.json
//   chordarc report      --config run.json
//
// Exit codes: 0 ok, 1 verify failure, 2 invalid config, 3 construction or
// I/O error (including missing approximant levels).

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "chordarc/commands.hpp"
#include "chordarc/parallel.hpp"

using namespace chordarc;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::string levels;
  std::optional<std::size_t> budget;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "run configuration (JSON)")->required();
  sub->add_option("--out", c.out, "output directory (overrides config.output)");
  sub->add_option("--levels", c.levels, "level range A..B (overrides config.levels)");
  sub->add_option("--budget", c.budget, "grid cell budget; 0 keeps the fixed exclusion level");
  sub->add_option("--threads", c.threads, "worker threads, 0 = auto (fallback: CHORDARC_THREADS)");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = load_config(c.config);
  if (!c.out.empty()) cfg.output = c.out;
  if (!c.levels.empty()) {
    const auto [lo, hi] = parse_level_range(c.levels);
    cfg.level_lo = lo;
    cfg.level_hi = hi;
  }
  if (c.budget) cfg.extension.budget = *c.budget;
  if (c.threads) {
    cfg.threads = *c.threads;
  } else if (const char* env = std::getenv("CHORDARC_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 0) throw ConfigError("CHORDARC_THREADS: expected a non-negative integer");
    cfg.threads = static_cast<unsigned>(v);
  }
  cfg.validate();
  set_thread_count(cfg.threads);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chord-arc curve approximation harness"};
  app.require_subcommand(1);

  Common c;
  std::string dumps;
  auto* check = app.add_subcommand("check-curve", "chord-arc constant, length and dyadic tables");
  auto* direct = app.add_subcommand("direct", "build approximants and measure rates");
  auto* inverse = app.add_subcommand("inverse", "recover the smoothness bound from approximant dumps");
  auto* verify = app.add_subcommand("verify", "property suite");
  auto* report = app.add_subcommand("report", "summarise the artifacts in the output directory");
  for (auto* s : {check, direct, inverse, verify, report}) add_common(s, c);
  inverse->add_option("--dumps", dumps, "approximant dump directory (default <out>/approximants)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalidConfig;
  }

  return run_guarded(
      [&]() -> int {
        const RunConfig cfg = resolve(c);
        if (check->parsed()) return cmd_check_curve(cfg, std::cout);
        if (direct->parsed()) return cmd_direct(cfg, std::cout);
        if (inverse->parsed()) return cmd_inverse(cfg, dumps, std::cout);
        if (verify->parsed()) return cmd_verify(cfg, std::cout);
        return cmd_report(cfg, std::cout);
      },
      std::cerr);
}
