#include "mtsim/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "mtsim/blackhole.hpp"
#include "mtsim/flow.hpp"
#include "mtsim/kink.hpp"
#include "mtsim/openq.hpp"
#include "mtsim/tdva.hpp"
#include "mtsim/units.hpp"

namespace mtsim::scn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class KeyType { Double, Int, Bool, Str, Json };

struct KeySpec {
  const char* name;
  KeyType type;
  bool required;
  const char* doc;
};

const std::map<std::string, std::vector<KeySpec>>& schemas() {
  static const std::map<std::string, std::vector<KeySpec>> table = {
      {"kink",
       {{"sigma", KeyType::Double, true, "dimensionless forcing, |sigma| < 2/(3 sqrt 3)"},
        {"xi_min", KeyType::Double, false, "profile window start (default -10)"},
        {"xi_max", KeyType::Double, false, "profile window end (default 10)"},
        {"n_points", KeyType::Int, false, "samples (default 401)"}}},
      {"evolve",
       {{"M_kg", KeyType::Double, true, "dimer mass"},
        {"A_J_m2", KeyType::Double, true, "double-well quadratic coefficient"},
        {"B_J_m4", KeyType::Double, true, "double-well quartic coefficient"},
        {"k_J_m2", KeyType::Double, true, "chain stiffness"},
        {"R0_m", KeyType::Double, true, "lattice spacing"},
        {"gamma_kg_s", KeyType::Double, true, "friction"},
        {"E_V_m", KeyType::Double, true, "axial electric field"},
        {"q_C", KeyType::Double, false, "mobile charge (default 36 e)"},
        {"x_min_m", KeyType::Double, true, "grid start"},
        {"x_max_m", KeyType::Double, true, "grid end"},
        {"n_points", KeyType::Int, true, "grid size"},
        {"x0_m", KeyType::Double, true, "initial kink center"},
        {"dt_s", KeyType::Double, true, "time step (must satisfy dt < dx/v0)"},
        {"n_steps", KeyType::Int, true, "step count"},
        {"save_every", KeyType::Int, false, "output cadence in steps (default 100)"}}},
      {"decohere",
       {{"H", KeyType::Json, true, "Hamiltonian, row-major [re,im] pairs"},
        {"B", KeyType::Json, true, "list of environment operators, same layout"},
        {"rho0", KeyType::Json, true, "initial density matrix, same layout"},
        {"dt", KeyType::Double, true, "time step"},
        {"n_steps", KeyType::Int, true, "step count"},
        {"save_every", KeyType::Int, false, "output cadence (default 1)"}}},
      {"trajectories",
       {{"H", KeyType::Json, true, "Hamiltonian, row-major [re,im] pairs"},
        {"B", KeyType::Json, true, "list of environment operators"},
        {"psi0", KeyType::Json, true, "initial state, [re,im] pairs"},
        {"dt", KeyType::Double, true, "time step"},
        {"n_steps", KeyType::Int, true, "step count"},
        {"save_every", KeyType::Int, false, "sample cadence (default 1)"},
        {"n_traj", KeyType::Int, true, "ensemble size"},
        {"channel_dims", KeyType::Json, false,
         "block sizes of channel projectors; enables the entropy series"}}},
      {"growth",
       {{"mode", KeyType::Str, true, "density | sawtooth"},
        {"delta0", KeyType::Double, false, "initial mean density (density mode)"},
        {"a_coef", KeyType::Double, false, "linear depletion coefficient, > 0"},
        {"b_coef", KeyType::Double, false, "cubic growth coefficient, > 0"},
        {"Q0", KeyType::Double, false, "initial deficit"},
        {"Q_decay", KeyType::Double, false, "Q(t) = Q0 exp(-Q_decay t)"},
        {"dt", KeyType::Double, false, "time step (density mode)"},
        {"n_steps", KeyType::Int, false, "step count (density mode)"},
        {"v_plus", KeyType::Double, false, "assembly speed (sawtooth)"},
        {"v_minus", KeyType::Double, false, "disassembly speed (sawtooth)"},
        {"rate_cat", KeyType::Double, false, "catastrophe rate (sawtooth)"},
        {"rate_res", KeyType::Double, false, "rescue rate (sawtooth)"},
        {"t_max", KeyType::Double, false, "horizon (sawtooth)"},
        {"n_samples", KeyType::Int, false, "samples per trajectory (sawtooth)"},
        {"n_traj", KeyType::Int, false, "ensemble size (sawtooth)"},
        {"length0", KeyType::Double, false, "initial length (default 0)"},
        {"reflecting_floor", KeyType::Bool, false, "clamp length at 0 (default true)"}}},
      {"flow",
       {{"mode", KeyType::Str, true, "coupling | fokker_planck"},
        {"g0", KeyType::Double, false, "initial coupling (coupling mode)"},
        {"gdot0", KeyType::Double, false, "initial coupling velocity"},
        {"c_quad", KeyType::Double, false, "C(g) = 25 + c_quad g^2 (default 1)"},
        {"q_norm", KeyType::Str, false, "flow | ctheorem (default ctheorem)"},
        {"dt", KeyType::Double, false, "step (coupling mode)"},
        {"n_steps", KeyType::Int, false, "step count"},
        {"save_every", KeyType::Int, false, "output cadence (default 1)"},
        {"c_tol", KeyType::Double, false, "c-flow inequality slack (default 1e-6)"},
        {"lambda_min", KeyType::Double, false, "grid start (fokker_planck)"},
        {"lambda_max", KeyType::Double, false, "grid end (fokker_planck)"},
        {"n_points", KeyType::Int, false, "grid size (fokker_planck)"},
        {"lambda0", KeyType::Double, false, "initial Gaussian center (default 0)"},
        {"sigma0", KeyType::Double, false, "initial Gaussian width"},
        {"Q0", KeyType::Double, false, "initial deficit (fokker_planck)"},
        {"Q_decay", KeyType::Double, false, "Q(tau) = Q0 exp(-Q_decay tau)"},
        {"beta_coef", KeyType::Double, false, "drift beta(lambda) = beta_coef lambda"},
        {"dtau", KeyType::Double, false, "flow-time step"}}},
      {"blackhole",
       {{"amplitude", KeyType::Double, true, "pulse amplitude a > 0"},
        {"kind", KeyType::Str, true, "infalling | reflected"},
        {"x_min", KeyType::Double, true, "grid start"},
        {"x_max", KeyType::Double, true, "grid end"},
        {"n_points", KeyType::Int, true, "grid size"},
        {"t", KeyType::Double, true, "time slice"}}},
      {"collapse-time",
       {{"E_eV", KeyType::Double, true, "energy scale"},
        {"N", KeyType::Double, true, "environment count"},
        {"M_gus_GeV", KeyType::Double, false, "string scale (default 1e18 GeV)"},
        {"m_eV", KeyType::Double, false, "moving mass m c^2; enables the pointlike estimate"},
        {"delta_x_m", KeyType::Double, false, "displacement scale for the pointlike estimate"},
        {"target_s", KeyType::Double, false, "invert the pointlike formula for N at this time"}}},
      {"tdva",
       {{"n_sites", KeyType::Int, true, "lattice size"},
        {"dx", KeyType::Double, true, "lattice spacing"},
        {"m_eff", KeyType::Double, true, "vacuum-kernel mass, > 0"},
        {"A", KeyType::Double, true, "double-well quadratic coefficient"},
        {"B", KeyType::Double, true, "double-well quartic coefficient"},
        {"dt", KeyType::Double, true, "time step (must be < dx)"},
        {"n_steps", KeyType::Int, true, "step count"},
        {"save_every", KeyType::Int, false, "output cadence (default 10)"},
        {"freeze_G", KeyType::Bool, false, "evolve mean field only (default false)"},
        {"init", KeyType::Str, false, "kink | well (default kink)"}}},
  };
  return table;
}

const std::vector<KeySpec> global_keys = {
    {"subcommand", KeyType::Str, true, "which operation to run"},
    {"name", KeyType::Str, false, "scenario label"},
    {"seed", KeyType::Int, false, "base RNG seed (default 0; --seed overrides)"},
};

bool parse_double(const std::string& v, double& out) {
  char* end = nullptr;
  out = std::strtod(v.c_str(), &end);
  return end && *end == '\0' && end != v.c_str();
}

bool parse_int(const std::string& v, long long& out) {
  char* end = nullptr;
  out = std::strtoll(v.c_str(), &end, 10);
  if (end && *end == '\0' && end != v.c_str()) return true;
  double d;
  if (parse_double(v, d) && d == std::floor(d) && std::abs(d) < 9e15) {
    out = (long long)d;
    return true;
  }
  return false;
}

void type_check(const KeySpec& spec, const std::string& value, int line) {
  const std::string where =
      "line " + std::to_string(line) + ": key '" + spec.name + "'";
  switch (spec.type) {
    case KeyType::Double: {
      double d;
      if (!parse_double(value, d))
        throw ParseError(where + ": expected a number, got '" + value + "'");
      break;
    }
    case KeyType::Int: {
      long long i;
      if (!parse_int(value, i))
        throw ParseError(where + ": expected an integer, got '" + value + "'");
      break;
    }
    case KeyType::Bool:
      if (value != "true" && value != "false" && value != "0" && value != "1")
        throw ParseError(where + ": expected true/false, got '" + value + "'");
      break;
    case KeyType::Json: {
      const auto j = json::parse(value, nullptr, false);
      if (j.is_discarded())
        throw ParseError(where + ": malformed JSON value");
      break;
    }
    case KeyType::Str:
      break;
  }
}

// Typed access over the validated parameter map.
struct Params {
  const std::map<std::string, std::string>& raw;
  double d(const std::string& k) const {
    double out;
    parse_double(require(k), out);
    return out;
  }
  double d(const std::string& k, double def) const {
    auto it = raw.find(k);
    if (it == raw.end()) return def;
    double out;
    parse_double(it->second, out);
    return out;
  }
  long long i(const std::string& k) const {
    long long out;
    parse_int(require(k), out);
    return out;
  }
  long long i(const std::string& k, long long def) const {
    auto it = raw.find(k);
    if (it == raw.end()) return def;
    long long out;
    parse_int(it->second, out);
    return out;
  }
  bool b(const std::string& k, bool def) const {
    auto it = raw.find(k);
    if (it == raw.end()) return def;
    return it->second == "true" || it->second == "1";
  }
  std::string s(const std::string& k) const { return require(k); }
  std::string s(const std::string& k, const std::string& def) const {
    auto it = raw.find(k);
    return it == raw.end() ? def : it->second;
  }
  json j(const std::string& k) const { return json::parse(require(k)); }
  bool has(const std::string& k) const { return raw.count(k) > 0; }
  const std::string& require(const std::string& k) const {
    auto it = raw.find(k);
    if (it == raw.end())
      throw std::invalid_argument("missing required key '" + k + "'");
    return it->second;
  }
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_atomic(const fs::path& dir, const std::string& filename,
                  const std::string& content) {
  fs::create_directories(dir);
  const fs::path tmp = dir / (filename + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, dir / filename);
}

// --- complex-matrix JSON helpers (row-major [re, im] pairs) ---

oqs::Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty())
    throw std::invalid_argument(what + ": expected a non-empty JSON array");
  const auto n2 = j.size();
  const auto dim = (Eigen::Index)std::llround(std::sqrt((double)n2));
  if ((std::size_t)(dim * dim) != n2)
    throw std::invalid_argument(what + ": length is not a perfect square");
  oqs::Matrix m(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r)
    for (Eigen::Index c = 0; c < dim; ++c) {
      const auto& e = j[(std::size_t)(r * dim + c)];
      if (!e.is_array() || e.size() != 2)
        throw std::invalid_argument(what + ": entries must be [re, im] pairs");
      m(r, c) = std::complex<double>(e[0].get<double>(), e[1].get<double>());
    }
  return m;
}

oqs::Vector vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty())
    throw std::invalid_argument(what + ": expected a non-empty JSON array");
  oqs::Vector v((Eigen::Index)j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    if (!e.is_array() || e.size() != 2)
      throw std::invalid_argument(what + ": entries must be [re, im] pairs");
    v((Eigen::Index)i) = std::complex<double>(e[0].get<double>(), e[1].get<double>());
  }
  return v;
}

std::vector<oqs::Matrix> operators_from_json(const json& j) {
  if (!j.is_array() || j.empty())
    throw std::invalid_argument("B: expected a non-empty JSON array of matrices");
  std::vector<oqs::Matrix> out;
  for (std::size_t m = 0; m < j.size(); ++m)
    out.push_back(matrix_from_json(j[m], "B[" + std::to_string(m) + "]"));
  return out;
}

std::string density_header(Eigen::Index dim) {
  std::string h = "t";
  for (Eigen::Index r = 0; r < dim; ++r)
    for (Eigen::Index c = 0; c < dim; ++c) {
      const std::string ij = std::to_string(r) + std::to_string(c);
      h += ",re_" + ij + ",im_" + ij;
    }
  return h + "\n";
}

void density_row(std::string& csv, double t, const oqs::Matrix& rho) {
  csv += fmt(t);
  for (Eigen::Index r = 0; r < rho.rows(); ++r)
    for (Eigen::Index c = 0; c < rho.cols(); ++c)
      csv += "," + fmt(rho(r, c).real()) + "," + fmt(rho(r, c).imag());
  csv += "\n";
}

// --- subcommand runners ---

void run_kink(const Params& p, const fs::path& out, RunResult& res, json& result) {
  const double sigma = p.d("sigma");
  const auto roots = kink::solve_cubic(sigma);
  const double rho = 3.0 * std::abs(roots.d) / std::sqrt(2.0);
  const double xi_min = p.d("xi_min", -10), xi_max = p.d("xi_max", 10);
  const long long n = p.i("n_points", 401);
  if (n < 2) throw std::invalid_argument("n_points must be >= 2");
  std::string csv = "xi,psi\n";
  std::vector<double> xis(n);
  for (long long i = 0; i < n; ++i) {
    xis[i] = xi_min + (xi_max - xi_min) * i / (n - 1);
    csv += fmt(xis[i]) + "," + fmt(kink::kink_profile(xis[i], roots)) + "\n";
  }
  write_atomic(out, "kink_profile.csv", csv);
  res.outputs.push_back("kink_profile.csv");
  result["a"] = roots.a;
  result["d"] = roots.d;
  result["b"] = roots.b;
  result["rho"] = rho;
  result["max_residual"] = kink::residual_ode(roots, rho, sigma, xis);
}

void run_evolve(const Params& p, const fs::path& out, RunResult& res, json& result) {
  kink::MTParams mp;
  mp.M = p.d("M_kg");
  mp.A = p.d("A_J_m2");
  mp.B = p.d("B_J_m4");
  mp.k = p.d("k_J_m2");
  mp.R0 = p.d("R0_m");
  mp.gamma = p.d("gamma_kg_s");
  mp.E = p.d("E_V_m");
  mp.q = p.d("q_C", 36.0 * units::elementary_charge);
  const double sigma = kink::reduce(mp, 0).sigma;
  const auto roots = kink::solve_cubic(sigma);
  const double v = kink::kink_velocity(mp, roots);
  const auto dim = kink::reduce(mp, v);
  const long long n = p.i("n_points");
  auto state = kink::make_kink_state(mp, roots, v, p.d("x_min_m"), p.d("x_max_m"),
                                     (int)n, p.d("x0_m"));
  const double dt = p.d("dt_s");
  const long long n_steps = p.i("n_steps");
  const long long save_every = std::max<long long>(1, p.i("save_every", 100));
  std::string csv = "t_s,x_m,u_m\n";
  auto dump = [&]() {
    for (std::size_t i = 0; i < state.x.size(); ++i)
      csv += fmt(state.t) + "," + fmt(state.x[i]) + "," + fmt(state.u[i]) + "\n";
  };
  dump();
  for (long long done = 0; done < n_steps;) {
    const long long chunk = std::min(save_every, n_steps - done);
    state = kink::evolve_pde(std::move(state), mp, dt, (int)chunk);
    done += chunk;
    dump();
  }
  write_atomic(out, "evolution.csv", csv);
  res.outputs.push_back("evolution.csv");
  result["v0_m_s"] = dim.v0;
  result["v_m_s"] = v;
  result["rho"] = dim.rho;
  result["sigma"] = sigma;
  result["roots"] = {roots.a, roots.d, roots.b};
  result["cfl_bound_s"] = (state.x[1] - state.x[0]) / dim.v0;
  result["final_energy_J"] = kink::field_energy(state, mp);
}

void run_decohere(const Params& p, const fs::path& out, RunResult& res,
                  json& result) {
  oqs::OpenSystem sys;
  sys.H = matrix_from_json(p.j("H"), "H");
  sys.lindblad_ops = operators_from_json(p.j("B"));
  oqs::Matrix rho = matrix_from_json(p.j("rho0"), "rho0");
  oqs::check_density_matrix(rho, 1e-9, 1e-8, -1e-8);
  const double dt = p.d("dt");
  const long long n_steps = p.i("n_steps");
  const long long save_every = std::max<long long>(1, p.i("save_every", 1));
  std::string csv = density_header(rho.rows());
  density_row(csv, 0, rho);
  for (long long done = 0; done < n_steps;) {
    const long long chunk = std::min(save_every, n_steps - done);
    rho = oqs::lindblad_evolve(std::move(rho), sys, dt, (int)chunk);
    done += chunk;
    density_row(csv, done * dt, rho);
  }
  write_atomic(out, "density.csv", csv);
  res.outputs.push_back("density.csv");
  Eigen::SelfAdjointEigenSolver<oqs::Matrix> es(0.5 * (rho + rho.adjoint()));
  result["trace_final"] = rho.trace().real();
  result["min_eigenvalue_final"] = es.eigenvalues().minCoeff();
  result["energy_mean_final"] = (rho * sys.H).trace().real();
}

oqs::ChannelProjectors projectors_from_dims(const json& dims, Eigen::Index dim) {
  oqs::ChannelProjectors ch;
  Eigen::Index at = 0;
  for (const auto& d : dims) {
    const auto b = (Eigen::Index)d.get<long long>();
    if (b < 1 || at + b > dim)
      throw std::invalid_argument("channel_dims: blocks must tile the dimension");
    oqs::Matrix P = oqs::Matrix::Zero(dim, dim);
    for (Eigen::Index i = 0; i < b; ++i) P(at + i, at + i) = 1.0;
    ch.P.push_back(P);
    at += b;
  }
  if (at != dim)
    throw std::invalid_argument("channel_dims: blocks must tile the dimension");
  return ch;
}

void run_trajectories(const Params& p, const fs::path& out, RunResult& res,
                      json& result, std::uint64_t seed) {
  oqs::OpenSystem sys;
  sys.H = matrix_from_json(p.j("H"), "H");
  sys.lindblad_ops = operators_from_json(p.j("B"));
  const oqs::Vector psi0 = vector_from_json(p.j("psi0"), "psi0");
  const double dt = p.d("dt");
  const long long n_steps = p.i("n_steps");
  const long long save_every = std::max<long long>(1, p.i("save_every", 1));
  const long long n_traj = p.i("n_traj");
  if (n_traj < 1) throw std::invalid_argument("n_traj must be >= 1");
  const int threads = thread_budget();

  const auto rhos = oqs::trajectory_ensemble_density(
      psi0, sys, dt, (int)n_steps, (int)save_every, (int)n_traj, seed, threads);
  oqs::Trajectory probe = oqs::ito_trajectory(psi0, sys, dt, (int)n_steps, seed,
                                              (int)save_every);
  std::string csv = density_header(psi0.size());
  for (std::size_t k = 0; k < rhos.size(); ++k)
    density_row(csv, probe.t[k], rhos[k]);
  write_atomic(out, "ensemble_density.csv", csv);
  res.outputs.push_back("ensemble_density.csv");
  result["n_traj"] = n_traj;

  if (p.has("channel_dims")) {
    const auto ch = projectors_from_dims(p.j("channel_dims"), psi0.size());
    const auto rep = oqs::entropy_rate_check(psi0, sys, ch, dt, (int)n_steps,
                                             (int)save_every, (int)n_traj, seed,
                                             threads);
    std::string ecsv = "t,K_mean,K_stderr\n";
    for (std::size_t k = 0; k < rep.t.size(); ++k)
      ecsv += fmt(rep.t[k]) + "," + fmt(rep.K_mean[k]) + "," +
              fmt(rep.K_stderr[k]) + "\n";
    write_atomic(out, "entropy.csv", ecsv);
    res.outputs.push_back("entropy.csv");
    result["entropy_rate_lhs"] = rep.lhs_rate;
    result["entropy_rate_lhs_stderr"] = rep.lhs_rate_stderr;
    result["entropy_rate_rhs"] = rep.rhs_rate;
    result["entropy_rate_sign_ok"] = rep.sign_ok;
    result["excluded_channels"] = rep.excluded_channels;
  }
}

void run_growth(const Params& p, const fs::path& out, RunResult& res,
                json& result, std::uint64_t seed) {
  const std::string mode = p.s("mode");
  if (mode == "density") {
    const double Q0 = p.d("Q0"), decay = p.d("Q_decay");
    const auto series = rg::growth_density(
        p.d("delta0"), p.d("a_coef"), p.d("b_coef"),
        [=](double t) { return Q0 * std::exp(-decay * t); }, p.d("dt"),
        (int)p.i("n_steps"));
    std::string csv = "t,delta,rate\n";
    for (std::size_t k = 0; k < series.t.size(); ++k)
      csv += fmt(series.t[k]) + "," + fmt(series.delta[k]) + "," +
             fmt(series.rate[k]) + "\n";
    write_atomic(out, "growth.csv", csv);
    res.outputs.push_back("growth.csv");
    result["crossover_time"] = series.crossover_time;
  } else if (mode == "sawtooth") {
    rg::SawtoothParams sp;
    sp.v_plus = p.d("v_plus");
    sp.v_minus = p.d("v_minus");
    sp.rate_cat = p.d("rate_cat");
    sp.rate_res = p.d("rate_res");
    sp.t_max = p.d("t_max");
    sp.n_samples = (int)p.i("n_samples");
    sp.length0 = p.d("length0", 0);
    sp.reflecting_floor = p.b("reflecting_floor", true);
    const auto r = rg::sawtooth_series(sp, (int)p.i("n_traj"), seed,
                                       thread_budget());
    std::string csv = "t,traj0,ensemble_mean\n";
    for (std::size_t k = 0; k < r.t.size(); ++k)
      csv += fmt(r.t[k]) + "," + fmt(r.lengths[0][k]) + "," +
             fmt(r.ensemble_mean[k]) + "\n";
    write_atomic(out, "sawtooth.csv", csv);
    res.outputs.push_back("sawtooth.csv");
    result["drift"] = r.drift;
    result["bounded"] = r.drift < 0;
  } else {
    throw std::invalid_argument("growth: mode must be density or sawtooth");
  }
}

void run_flow(const Params& p, const fs::path& out, RunResult& res, json& result) {
  const std::string mode = p.s("mode");
  if (mode == "coupling") {
    const double cq = p.d("c_quad", 1.0);
    rg::FlowSpec spec;
    spec.C_of_g = [=](const std::vector<double>& g) {
      return 25.0 + cq * g[0] * g[0];
    };
    spec.beta = [=](const std::vector<double>& g) {
      return std::vector<double>{2.0 * cq * g[0]};
    };
    const std::string norm = p.s("q_norm", "ctheorem");
    if (norm == "flow")
      spec.Q_of_C = rg::q_of_c_flow;
    else if (norm == "ctheorem")
      spec.Q_of_C = rg::q_of_c_theorem;
    else
      throw std::invalid_argument("flow: q_norm must be flow or ctheorem");
    rg::CouplingState st;
    st.g = {p.d("g0")};
    st.g_dot = {p.d("gdot0", 0)};
    st.C = spec.C_of_g(st.g);
    const double dt = p.d("dt");
    const long long n_steps = p.i("n_steps");
    const long long save_every = std::max<long long>(1, p.i("save_every", 1));
    std::vector<double> Cs{st.C}, Qs{spec.Q_of_C(st.C)};
    std::string csv = "t,C,Q\n";
    csv += fmt(0) + "," + fmt(Cs[0]) + "," + fmt(Qs[0]) + "\n";
    for (long long k = 1; k <= n_steps; ++k) {
      st = rg::flow_step(st, spec, dt);
      if (k % save_every == 0 || k == n_steps) {
        Cs.push_back(st.C);
        Qs.push_back(spec.Q_of_C(st.C));
        csv += fmt(st.t) + "," + fmt(st.C) + "," + fmt(Qs.back()) + "\n";
      }
    }
    write_atomic(out, "flow.csv", csv);
    res.outputs.push_back("flow.csv");
    result["g_final"] = st.g[0];
    result["C_final"] = st.C;
    result["c_flow_ok"] =
        rg::c_flow_check(Cs, Qs, dt * (double)save_every, p.d("c_tol", 1e-6));
  } else if (mode == "fokker_planck") {
    const long long n = p.i("n_points");
    if (n < 3) throw std::invalid_argument("flow: n_points must be >= 3");
    rg::GridDistribution dist;
    const double lo = p.d("lambda_min"), hi = p.d("lambda_max");
    const double l0 = p.d("lambda0", 0), s0 = p.d("sigma0");
    if (!(s0 > 0)) throw std::invalid_argument("flow: sigma0 must be > 0");
    dist.lambda.resize(n);
    dist.P.resize(n);
    for (long long i = 0; i < n; ++i) {
      dist.lambda[i] = lo + (hi - lo) * i / (n - 1);
      const double z = (dist.lambda[i] - l0) / s0;
      dist.P[i] = std::exp(-0.5 * z * z);
    }
    double mass = 0;
    for (long long i = 0; i + 1 < n; ++i)
      mass += 0.5 * (dist.P[i] + dist.P[i + 1]) *
              (dist.lambda[i + 1] - dist.lambda[i]);
    for (auto& v : dist.P) v /= mass;
    auto variance = [&](const rg::GridDistribution& d) {
      double m1 = 0, m2 = 0;
      for (std::size_t i = 0; i + 1 < d.P.size(); ++i) {
        const double dl = d.lambda[i + 1] - d.lambda[i];
        m1 += 0.5 * (d.P[i] * d.lambda[i] + d.P[i + 1] * d.lambda[i + 1]) * dl;
        m2 += 0.5 * (d.P[i] * d.lambda[i] * d.lambda[i] +
                     d.P[i + 1] * d.lambda[i + 1] * d.lambda[i + 1]) * dl;
      }
      return m2 - m1 * m1;
    };
    const double var0 = variance(dist);
    const double Q0 = p.d("Q0"), decay = p.d("Q_decay"), bc = p.d("beta_coef");
    auto beta = [=](double l) { return bc * l; };
    auto Q = [=](double tau) { return Q0 * std::exp(-decay * tau); };
    const double dtau = p.d("dtau");
    const long long n_steps = p.i("n_steps");
    const long long save_every = std::max<long long>(1, p.i("save_every", 1));
    std::string csv = "tau,lambda,P\n";
    auto dump = [&]() {
      for (std::size_t i = 0; i < dist.P.size(); ++i)
        csv += fmt(dist.tau) + "," + fmt(dist.lambda[i]) + "," +
               fmt(dist.P[i]) + "\n";
    };
    dump();
    for (long long done = 0; done < n_steps;) {
      const long long chunk = std::min(save_every, n_steps - done);
      dist = rg::fokker_planck_evolve(std::move(dist), beta, Q, dtau, (int)chunk);
      done += chunk;
      dump();
    }
    write_atomic(out, "fp.csv", csv);
    res.outputs.push_back("fp.csv");
    double mass1 = 0;
    for (std::size_t i = 0; i + 1 < dist.P.size(); ++i)
      mass1 += 0.5 * (dist.P[i] + dist.P[i + 1]) *
               (dist.lambda[i + 1] - dist.lambda[i]);
    result["mass_final"] = mass1;
    result["variance_initial"] = var0;
    result["variance_final"] = variance(dist);
  } else {
    throw std::invalid_argument("flow: mode must be coupling or fokker_planck");
  }
}

void run_blackhole(const Params& p, const fs::path& out, RunResult& res,
                   json& result) {
  bh::TachyonPulse pulse;
  pulse.a = p.d("amplitude");
  const std::string kind = p.s("kind");
  if (kind == "infalling")
    pulse.kind = bh::PulseKind::infalling;
  else if (kind == "reflected")
    pulse.kind = bh::PulseKind::reflected;
  else
    throw std::invalid_argument("blackhole: kind must be infalling or reflected");
  const long long n = p.i("n_points");
  if (n < 2) throw std::invalid_argument("blackhole: n_points must be >= 2");
  std::vector<double> grid(n);
  const double lo = p.d("x_min"), hi = p.d("x_max");
  for (long long i = 0; i < n; ++i) grid[i] = lo + (hi - lo) * i / (n - 1);
  const auto prof = bh::metric_from_pulse(pulse, grid, p.d("t"));
  std::string csv = "x,g_tt,g_xx\n";
  for (std::size_t i = 0; i < prof.x.size(); ++i)
    csv += fmt(prof.x[i]) + "," + fmt(prof.g_tt[i]) + "," + fmt(prof.g_xx[i]) +
           "\n";
  write_atomic(out, "metric.csv", csv);
  res.outputs.push_back("metric.csv");
  const auto hor = bh::horizon_locate(prof);
  result["horizon_found"] = hor.found;
  if (hor.found) result["horizon_x"] = hor.x_h;
  result["horizon_multiple"] = hor.multiple;
  try {
    const auto fit = bh::adm_mass(prof);
    result["adm_mass"] = fit.mass;
    result["adm_fit_residual"] = fit.max_rel_residual;
  } catch (const std::runtime_error& e) {
    result["adm_mass"] = nullptr;
    result["adm_note"] = e.what();
  }
}

void run_collapse_time(const Params& p, json& result) {
  oqs::CollapseInputs in;
  in.M_gus_eV = p.d("M_gus_GeV", 1e18) * units::GeV_to_eV;
  in.E_eV = p.d("E_eV");
  in.N = p.d("N");
  result["t_col_s"] = oqs::collapse_time_string(in);
  if (p.has("m_eV") && p.has("delta_x_m")) {
    in.m_eV = p.d("m_eV");
    in.delta_x_m = p.d("delta_x_m");
    result["t_pointlike_s"] = oqs::collapse_time_pointlike(in);
    if (p.has("target_s"))
      result["N_for_target"] = oqs::pointlike_N_for_time(in, p.d("target_s"));
  }
}

void run_tdva(const Params& p, const fs::path& out, RunResult& res,
              json& result) {
  const long long n = p.i("n_sites");
  if (n < 3) throw std::invalid_argument("tdva: n_sites must be >= 3");
  const double dx = p.d("dx");
  const auto kernel = tdva::free_two_point((int)n, dx, p.d("m_eff"));
  tdva::QuarticPotential pot{p.d("A"), p.d("B")};
  pot.validate();
  tdva::SqueezedState st;
  st.x.resize(n);
  st.C.resize(n);
  st.D = tdva::Column::Zero(n);
  st.G = kernel.G0;
  st.Pi = tdva::Matrix::Zero(n, n);
  const double well = std::sqrt(pot.A > 0 ? pot.A / pot.B : 0.0);
  const std::string init = p.s("init", "kink");
  const double mid = 0.5 * (n - 1) * dx;
  for (long long i = 0; i < n; ++i) {
    st.x[i] = i * dx;
    if (init == "kink")
      st.C(i) = well * std::tanh(std::sqrt(std::max(pot.A, 0.0) / 2.0) *
                                 (st.x[i] - mid));
    else if (init == "well")
      st.C(i) = well;
    else
      throw std::invalid_argument("tdva: init must be kink or well");
  }
  const double dt = p.d("dt");
  const long long n_steps = p.i("n_steps");
  const long long save_every = std::max<long long>(1, p.i("save_every", 10));
  const bool freeze = p.b("freeze_G", false);
  const double e0 = tdva::quantum_energy(st, pot, kernel);
  std::string fcsv = "t,x,C\n", ecsv = "t,energy\n";
  double worst_drift = 0;
  auto dump = [&]() {
    for (long long i = 0; i < n; ++i)
      fcsv += fmt(st.t) + "," + fmt(st.x[i]) + "," + fmt(st.C(i)) + "\n";
    const double e = tdva::quantum_energy(st, pot, kernel);
    ecsv += fmt(st.t) + "," + fmt(e) + "\n";
    if (e0 != 0) worst_drift = std::max(worst_drift, std::abs(e - e0) / std::abs(e0));
  };
  dump();
  for (long long done = 0; done < n_steps;) {
    const long long chunk = std::min(save_every, n_steps - done);
    st = tdva::tdva_evolve(std::move(st), pot, kernel, dt, (int)chunk, freeze);
    done += chunk;
    dump();
  }
  write_atomic(out, "field.csv", fcsv);
  write_atomic(out, "energy.csv", ecsv);
  res.outputs.push_back("field.csv");
  res.outputs.push_back("energy.csv");
  result["energy_initial"] = e0;
  result["max_energy_drift"] = worst_drift;
}

} // namespace

int thread_budget() {
  if (const char* env = std::getenv("MTSIM_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return (int)std::clamp(hw, 1u, 8u);
}

std::vector<std::string> subcommand_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : schemas()) out.push_back(k);
  return out;
}

std::string schema_text(const std::string& subcommand) {
  const auto it = schemas().find(subcommand);
  if (it == schemas().end())
    throw ParseError("unknown subcommand '" + subcommand + "'");
  std::ostringstream os;
  os << "keys for '" << subcommand << "':\n";
  auto describe = [&](const KeySpec& k) {
    const char* t = k.type == KeyType::Double ? "number"
                    : k.type == KeyType::Int  ? "integer"
                    : k.type == KeyType::Bool ? "bool"
                    : k.type == KeyType::Json ? "json"
                                              : "string";
    os << "  " << k.name << " (" << t << ", "
       << (k.required ? "required" : "optional") << "): " << k.doc << "\n";
  };
  for (const auto& k : global_keys) describe(k);
  for (const auto& k : it->second) describe(k);
  return os.str();
}

Scenario parse_scenario(const std::string& text) {
  struct Entry {
    std::string value;
    int line;
  };
  std::map<std::string, Entry> entries;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ParseError("line " + std::to_string(lineno) +
                       ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ParseError("line " + std::to_string(lineno) + ": empty key");
    const auto prev = entries.find(key);
    if (prev != entries.end())
      throw ParseError("duplicate key '" + key + "' on lines " +
                       std::to_string(prev->second.line) + " and " +
                       std::to_string(lineno));
    entries[key] = {value, lineno};
  }

  const auto sub_it = entries.find("subcommand");
  if (sub_it == entries.end()) throw ParseError("missing key 'subcommand'");
  const std::string sub = sub_it->second.value;
  const auto schema_it = schemas().find(sub);
  if (schema_it == schemas().end())
    throw ParseError("line " + std::to_string(sub_it->second.line) +
                     ": unknown subcommand '" + sub + "'");
  const auto& schema = schema_it->second;

  auto find_spec = [&](const std::string& key) -> const KeySpec* {
    for (const auto& k : global_keys)
      if (key == k.name) return &k;
    for (const auto& k : schema)
      if (key == k.name) return &k;
    return nullptr;
  };
  for (const auto& [key, entry] : entries) {
    const KeySpec* spec = find_spec(key);
    if (!spec)
      throw ParseError("line " + std::to_string(entry.line) +
                       ": unknown key '" + key + "' for subcommand '" + sub +
                       "'");
    type_check(*spec, entry.value, entry.line);
  }
  for (const auto& k : schema)
    if (k.required && !entries.count(k.name))
      throw ParseError("missing required key '" + std::string(k.name) +
                       "' for subcommand '" + sub + "'");

  Scenario s;
  s.subcommand = sub;
  if (entries.count("name")) s.name = entries["name"].value;
  if (entries.count("seed")) {
    long long v;
    parse_int(entries["seed"].value, v);
    s.seed = (std::uint64_t)v;
  }
  for (const auto& [key, entry] : entries)
    if (key != "subcommand" && key != "name" && key != "seed")
      s.params[key] = entry.value;
  return s;
}

RunResult run(const Scenario& s) {
  RunResult res;
  const auto t_start = std::chrono::steady_clock::now();
  json result;
  try {
    const Params p{s.params};
    const fs::path out(s.output_dir);
    if (s.subcommand == "kink")
      run_kink(p, out, res, result);
    else if (s.subcommand == "evolve")
      run_evolve(p, out, res, result);
    else if (s.subcommand == "decohere")
      run_decohere(p, out, res, result);
    else if (s.subcommand == "trajectories")
      run_trajectories(p, out, res, result, s.seed);
    else if (s.subcommand == "growth")
      run_growth(p, out, res, result, s.seed);
    else if (s.subcommand == "flow")
      run_flow(p, out, res, result);
    else if (s.subcommand == "blackhole")
      run_blackhole(p, out, res, result);
    else if (s.subcommand == "collapse-time")
      run_collapse_time(p, result);
    else if (s.subcommand == "tdva")
      run_tdva(p, out, res, result);
    else
      throw std::invalid_argument("unknown subcommand '" + s.subcommand + "'");

    write_atomic(s.output_dir, "result.json", result.dump(2) + "\n");
    res.outputs.push_back("result.json");

    json manifest;
    manifest["name"] = s.name;
    manifest["subcommand"] = s.subcommand;
    manifest["seed"] = s.seed;
    manifest["parameters"] = s.params;
    manifest["version"] = "1.0.0";
    manifest["outputs"] = res.outputs;
    manifest["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    write_atomic(s.output_dir, "manifest.json", manifest.dump(2) + "\n");
    res.outputs.push_back("manifest.json");
  } catch (const ParseError& e) {
    res.exit_code = 2;
    res.message = e.what();
  } catch (const std::invalid_argument& e) {
    res.exit_code = 2;
    res.message = e.what();
  } catch (const std::exception& e) {
    res.exit_code = 3;
    res.message = e.what();
  }
  return res;
}

} // namespace mtsim::scn
