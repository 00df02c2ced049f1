// Batch CLI: mtsim <subcommand> --config <file> [--seed N] [--out DIR]
//            mtsim --print-schema <subcommand>
// Links against the C API only.

#include <cinttypes>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "mtsim.h"

int main(int argc, char** argv) {
  CLI::App app{"microtubule soliton / open-quantum-system batch simulator"};
  app.set_version_flag("--version", std::string(mtsim_version()));

  std::string subcommand, config_path, out_dir, schema_for;
  std::uint64_t seed = 0;
  bool seed_given = false;

  app.add_option("subcommand", subcommand,
                 "operation to run (see --print-schema list)");
  app.add_option("--config", config_path, "scenario file (key = value lines)");
  auto* seed_opt = app.add_option("--seed", seed, "base RNG seed override");
  app.add_option("--out", out_dir, "output directory (default .)");
  auto* schema_opt = app.add_option(
      "--print-schema", schema_for,
      "print the key schema for a subcommand ('list' for all names)");
  schema_opt->expected(0, 1);

  CLI11_PARSE(app, argc, argv);
  seed_given = seed_opt->count() > 0;

  char buf[8192];
  if (schema_opt->count() > 0) {
    if (schema_for.empty() && !subcommand.empty()) schema_for = subcommand;
    if (schema_for.empty() || schema_for == "list") {
      if (mtsim_subcommand_list(buf, sizeof buf) != MTSIM_OK) {
        std::fprintf(stderr, "error: %s\n", mtsim_last_error());
        return 2;
      }
      std::fputs(buf, stdout);
      return 0;
    }
    if (mtsim_schema_text(schema_for.c_str(), buf, sizeof buf) != MTSIM_OK) {
      std::fprintf(stderr, "error: %s\n", mtsim_last_error());
      return 2;
    }
    std::fputs(buf, stdout);
    return 0;
  }

  if (subcommand.empty() || config_path.empty()) {
    std::fprintf(stderr,
                 "usage: mtsim <subcommand> --config <file> [--seed N] "
                 "[--out DIR]\n       mtsim --print-schema <subcommand>\n");
    return 2;
  }

  mtsim_scenario* scenario = nullptr;
  int rc = mtsim_scenario_load_file(config_path.c_str(), &scenario);
  if (rc != MTSIM_OK) {
    std::fprintf(stderr, "error: %s\n", mtsim_last_error());
    return 2;
  }
  if (subcommand != mtsim_scenario_subcommand(scenario)) {
    std::fprintf(stderr,
                 "error: config declares subcommand '%s' but '%s' was "
                 "requested\n",
                 mtsim_scenario_subcommand(scenario), subcommand.c_str());
    mtsim_scenario_free(scenario);
    return 2;
  }
  if (seed_given) mtsim_scenario_set_seed(scenario, seed);
  if (!out_dir.empty()) mtsim_scenario_set_output_dir(scenario, out_dir.c_str());

  rc = mtsim_scenario_run(scenario);
  if (rc != MTSIM_OK)
    std::fprintf(stderr, "error: %s\n", mtsim_last_error());
  mtsim_scenario_free(scenario);
  return rc;
}
