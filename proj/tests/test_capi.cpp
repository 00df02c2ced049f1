#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "mtsim.h"

namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mtsim_capi_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

} // namespace

TEST_CASE("version and error channel") {
  CHECK(std::string(mtsim_version()) == "1.0.0");
  double a, d, b;
  REQUIRE(mtsim_solve_cubic(0.1, &a, &d, &b) == MTSIM_OK);
  CHECK(std::string(mtsim_last_error()).empty());
}

TEST_CASE("cubic root kernel") {
  double a, d, b;
  REQUIRE(mtsim_solve_cubic(0.1, &a, &d, &b) == MTSIM_OK);
  CHECK(a == doctest::Approx(-0.945649273923592).epsilon(1e-12));
  CHECK(d == doctest::Approx(-0.101031257881011).epsilon(1e-12));
  CHECK(b == doctest::Approx(1.046680531804602).epsilon(1e-12));

  CHECK(mtsim_solve_cubic(1.0, &a, &d, &b) == MTSIM_ERR_VALIDATION);
  CHECK(!std::string(mtsim_last_error()).empty());
  CHECK(mtsim_solve_cubic(0.1, nullptr, &d, &b) == MTSIM_ERR_ARGUMENT);
}

TEST_CASE("profile kernel") {
  double a, d, b, psi;
  REQUIRE(mtsim_solve_cubic(0.0, &a, &d, &b) == MTSIM_OK);
  REQUIRE(mtsim_kink_profile(0.0, a, d, b, &psi) == MTSIM_OK);
  CHECK(psi == doctest::Approx(0.0).scale(1).epsilon(1e-12));
  REQUIRE(mtsim_kink_profile(50.0, a, d, b, &psi) == MTSIM_OK);
  CHECK(psi == doctest::Approx(a).epsilon(1e-12));
  CHECK(mtsim_kink_profile(0.0, a, d, b, nullptr) == MTSIM_ERR_ARGUMENT);
}

TEST_CASE("collapse-time kernel") {
  double s;
  REQUIRE(mtsim_collapse_time_string(1e27, 1.0, 1e12, &s) == MTSIM_OK);
  CHECK(s == doctest::Approx(0.6582119569).epsilon(1e-12));
}

TEST_CASE("central-charge kernel") {
  double ct, cx;
  REQUIRE(mtsim_central_charges(0.5, &ct, &cx) == MTSIM_OK);
  CHECK(ct + cx == doctest::Approx(26.0).epsilon(1e-12));
  CHECK(mtsim_central_charges(1.0, &ct, &cx) == MTSIM_ERR_VALIDATION);
}

TEST_CASE("mass-vs-level kernel") {
  double m;
  REQUIRE(mtsim_adm_mass_vs_k(3.0, 0.0, &m) == MTSIM_OK);
  CHECK(m == doctest::Approx(1.0));
  REQUIRE(mtsim_adm_mass_vs_k(3.0, 1.0, &m) == MTSIM_OK);
  CHECK(m == doctest::Approx(std::exp(1.0)));
  CHECK(mtsim_adm_mass_vs_k(2.0, 0.0, &m) == MTSIM_ERR_VALIDATION);
}

TEST_CASE("schema and subcommand listings") {
  char buf[4096];
  REQUIRE(mtsim_schema_text("kink", buf, sizeof buf) == MTSIM_OK);
  CHECK(std::string(buf).find("sigma") != std::string::npos);
  CHECK(mtsim_schema_text("warp", buf, sizeof buf) == MTSIM_ERR_VALIDATION);
  CHECK(mtsim_schema_text(nullptr, buf, sizeof buf) == MTSIM_ERR_ARGUMENT);
  CHECK(mtsim_schema_text("kink", nullptr, 0) == MTSIM_ERR_ARGUMENT);

  REQUIRE(mtsim_subcommand_list(buf, sizeof buf) == MTSIM_OK);
  const std::string names(buf);
  for (const char* n : {"kink", "evolve", "decohere", "trajectories", "growth",
                        "flow", "blackhole", "collapse-time", "tdva"})
    CHECK(names.find(n) != std::string::npos);
}

TEST_CASE("scenario lifecycle through the handle") {
  SUBCASE("text load, run, artifacts") {
    const auto dir = fresh_dir("run");
    mtsim_scenario* s = nullptr;
    REQUIRE(mtsim_scenario_load_text(
                "subcommand = kink\nsigma = 0.1\nn_points = 11\n", &s) ==
            MTSIM_OK);
    REQUIRE(s != nullptr);
    CHECK(std::string(mtsim_scenario_subcommand(s)) == "kink");
    REQUIRE(mtsim_scenario_set_seed(s, 5) == MTSIM_OK);
    REQUIRE(mtsim_scenario_set_output_dir(s, dir.c_str()) == MTSIM_OK);
    REQUIRE(mtsim_scenario_run(s) == MTSIM_OK);
    mtsim_scenario_free(s);
    CHECK(fs::exists(dir / "kink_profile.csv"));
    CHECK(fs::exists(dir / "result.json"));
    CHECK(fs::exists(dir / "manifest.json"));
  }
  SUBCASE("file load") {
    const auto dir = fresh_dir("file");
    const fs::path cfg = dir / "scenario.cfg";
    std::ofstream(cfg) << "subcommand = collapse-time\nE_eV = 1\nN = 1e12\n";
    mtsim_scenario* s = nullptr;
    REQUIRE(mtsim_scenario_load_file(cfg.c_str(), &s) == MTSIM_OK);
    REQUIRE(mtsim_scenario_set_output_dir(s, dir.c_str()) == MTSIM_OK);
    CHECK(mtsim_scenario_run(s) == MTSIM_OK);
    mtsim_scenario_free(s);
    CHECK(fs::exists(dir / "result.json"));
  }
  SUBCASE("parse failures surface as validation errors") {
    mtsim_scenario* s = nullptr;
    CHECK(mtsim_scenario_load_text("subcommand = kink\nbogus = 1\n", &s) ==
          MTSIM_ERR_VALIDATION);
    CHECK(s == nullptr);
    CHECK(std::string(mtsim_last_error()).find("bogus") != std::string::npos);
    CHECK(mtsim_scenario_load_file("/nonexistent/path.cfg", &s) ==
          MTSIM_ERR_VALIDATION);
  }
  SUBCASE("null handles are bad arguments") {
    CHECK(mtsim_scenario_load_text(nullptr, nullptr) == MTSIM_ERR_ARGUMENT);
    CHECK(mtsim_scenario_set_seed(nullptr, 0) == MTSIM_ERR_ARGUMENT);
    CHECK(mtsim_scenario_set_output_dir(nullptr, ".") == MTSIM_ERR_ARGUMENT);
    CHECK(mtsim_scenario_run(nullptr) == MTSIM_ERR_ARGUMENT);
    CHECK(std::string(mtsim_scenario_subcommand(nullptr)).empty());
    mtsim_scenario_free(nullptr); // must be a safe no-op
  }
}
