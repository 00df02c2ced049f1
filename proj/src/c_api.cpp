#include "mtsim.h"

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "mtsim/blackhole.hpp"
#include "mtsim/kink.hpp"
#include "mtsim/openq.hpp"
#include "mtsim/scenario.hpp"

namespace {

thread_local std::string g_last_error;

int fail(int code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return MTSIM_OK;
  } catch (const mtsim::scn::ParseError& e) {
    return fail(MTSIM_ERR_VALIDATION, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(MTSIM_ERR_VALIDATION, e.what());
  } catch (const std::exception& e) {
    return fail(MTSIM_ERR_NUMERICAL, e.what());
  }
}

int copy_out(const std::string& text, char* buf, size_t buflen) {
  if (!buf || buflen == 0) return fail(MTSIM_ERR_ARGUMENT, "null buffer");
  const size_t n = std::min(buflen - 1, text.size());
  std::memcpy(buf, text.data(), n);
  buf[n] = '\0';
  return MTSIM_OK;
}

} // namespace

struct mtsim_scenario {
  mtsim::scn::Scenario inner;
};

extern "C" {

const char* mtsim_version(void) { return "1.0.0"; }

const char* mtsim_last_error(void) { return g_last_error.c_str(); }

int mtsim_scenario_load_text(const char* text, mtsim_scenario** out) {
  if (!text || !out) return fail(MTSIM_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto* h = new mtsim_scenario{mtsim::scn::parse_scenario(text)};
    *out = h;
  });
}

int mtsim_scenario_load_file(const char* path, mtsim_scenario** out) {
  if (!path || !out) return fail(MTSIM_ERR_ARGUMENT, "null argument");
  std::ifstream in(path, std::ios::binary);
  if (!in) return fail(MTSIM_ERR_VALIDATION, std::string("cannot open ") + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return mtsim_scenario_load_text(buf.str().c_str(), out);
}

int mtsim_scenario_set_seed(mtsim_scenario* s, uint64_t seed) {
  if (!s) return fail(MTSIM_ERR_ARGUMENT, "null scenario");
  s->inner.seed = seed;
  return MTSIM_OK;
}

int mtsim_scenario_set_output_dir(mtsim_scenario* s, const char* dir) {
  if (!s || !dir) return fail(MTSIM_ERR_ARGUMENT, "null argument");
  s->inner.output_dir = dir;
  return MTSIM_OK;
}

const char* mtsim_scenario_subcommand(const mtsim_scenario* s) {
  return s ? s->inner.subcommand.c_str() : "";
}

int mtsim_scenario_run(mtsim_scenario* s) {
  if (!s) return fail(MTSIM_ERR_ARGUMENT, "null scenario");
  const auto res = mtsim::scn::run(s->inner);
  if (res.exit_code != 0) return fail(res.exit_code, res.message);
  g_last_error.clear();
  return MTSIM_OK;
}

void mtsim_scenario_free(mtsim_scenario* s) { delete s; }

int mtsim_schema_text(const char* subcommand, char* buf, size_t buflen) {
  if (!subcommand) return fail(MTSIM_ERR_ARGUMENT, "null subcommand");
  std::string text;
  const int rc = guarded([&] { text = mtsim::scn::schema_text(subcommand); });
  if (rc != MTSIM_OK) return rc;
  return copy_out(text, buf, buflen);
}

int mtsim_subcommand_list(char* buf, size_t buflen) {
  std::string text;
  for (const auto& name : mtsim::scn::subcommand_names()) {
    text += name;
    text += '\n';
  }
  return copy_out(text, buf, buflen);
}

int mtsim_solve_cubic(double sigma, double* a, double* d, double* b) {
  if (!a || !d || !b) return fail(MTSIM_ERR_ARGUMENT, "null output");
  return guarded([&] {
    const auto r = mtsim::kink::solve_cubic(sigma);
    *a = r.a;
    *d = r.d;
    *b = r.b;
  });
}

int mtsim_kink_profile(double xi, double a, double d, double b, double* psi) {
  if (!psi) return fail(MTSIM_ERR_ARGUMENT, "null output");
  return guarded([&] {
    *psi = mtsim::kink::kink_profile(xi, mtsim::kink::KinkRoots{a, d, b});
  });
}

int mtsim_collapse_time_string(double m_gus_ev, double e_ev, double n,
                               double* seconds) {
  if (!seconds) return fail(MTSIM_ERR_ARGUMENT, "null output");
  return guarded([&] {
    mtsim::oqs::CollapseInputs in;
    in.M_gus_eV = m_gus_ev;
    in.E_eV = e_ev;
    in.N = n;
    *seconds = mtsim::oqs::collapse_time_string(in);
  });
}

int mtsim_central_charges(double vs_squared, double* c_t, double* c_x) {
  if (!c_t || !c_x) return fail(MTSIM_ERR_ARGUMENT, "null output");
  return guarded([&] {
    const auto [t, x] = mtsim::kink::central_charges(vs_squared);
    *c_t = t;
    *c_x = x;
  });
}

int mtsim_adm_mass_vs_k(double k, double dilaton_a, double* mass) {
  if (!mass) return fail(MTSIM_ERR_ARGUMENT, "null output");
  return guarded([&] { *mass = mtsim::bh::adm_mass_vs_k(k, dilaton_a); });
}

} // extern "C"
