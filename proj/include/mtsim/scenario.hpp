#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

// Batch scenario layer: strict key = value config parsing, per-subcommand
// schemas, and the run dispatcher that writes CSV/JSON artifacts plus a
// manifest. Exit codes: 0 success, 2 validation error, 3 numerical failure.

namespace mtsim::scn {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Scenario {
  std::string name;
  std::string subcommand;
  std::map<std::string, std::string> params; // typed on access
  std::uint64_t seed = 0;
  std::string output_dir = ".";
};

// Strict parser: `key = value` lines, `#` comments, UTF-8. Unknown keys,
// duplicates (both lines named), type mismatches, and missing required keys
// all raise ParseError with line numbers.
Scenario parse_scenario(const std::string& text);

std::vector<std::string> subcommand_names();

// Human-readable key list for one subcommand (name, type, required, doc).
std::string schema_text(const std::string& subcommand);

struct RunResult {
  int exit_code = 0; // 0 | 2 | 3
  std::string message;
  std::vector<std::string> outputs; // files written (relative to output_dir)
};

// Executes the scenario; writes artifacts atomically (temp then rename) and
// a manifest.json. Never throws; failures are encoded in the exit code.
RunResult run(const Scenario& s);

// Fan-out cap: MTSIM_THREADS if set, else min(hardware, 8), at least 1.
int thread_budget();

} // namespace mtsim::scn
