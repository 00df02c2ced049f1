#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

// Renormalization-group / Liouville flow machinery: friction flow in coupling
// space, the c-flow inequality check, the RG-kink family, a 1-D Fokker-Planck
// localization solver, the growth-density law, telegraph ("sawtooth") length
// trajectories, and the discrete-mode selection rules.

namespace mtsim::rg {

struct CouplingState {
  std::vector<double> g;
  std::vector<double> g_dot;
  double C = 0; // central-charge functional value
  double t = 0; // RG time
};

struct FlowSpec {
  std::function<double(const std::vector<double>&)> C_of_g;
  std::function<std::vector<double>(const std::vector<double>&)> beta;
  std::function<std::vector<std::vector<double>>(const std::vector<double>&)>
      metric_G; // optional, positive definite where sampled
  std::function<double(double)> Q_of_C; // e.g. sqrt((C-25)/6) or sqrt((C-25)/3)
};

// sqrt((C-25)/6), the flow-equation normalization. Throws for C < 25.
double q_of_c_flow(double C);
// sqrt((C-25)/3), the c-theorem normalization. Throws for C < 25.
double q_of_c_theorem(double C);

// One RK4 step of g'' + Q(C[g]) g' = -beta(g); C refreshed from C_of_g.
CouplingState flow_step(const CouplingState& s, const FlowSpec& spec, double dt);

// Finite-difference check of Cdd + Q Cd <= tol at all interior samples of a
// uniformly sampled trace. Throws with fewer than 3 samples.
bool c_flow_check(std::span<const double> C, std::span<const double> Q,
                  double dt, double tol);

// Wilson-scheme RG kink: flow beta R(T) = a2 T + a4 T^2.
struct RGKinkSpec {
  double a2 = 0;
  double a4 = 0; // != 0
  double A3 = 0; // cubic coefficient of the second-derivative polynomial
  double u_wave() const { return (A3 - 3 * a2 * a4) / a4; }
};

// T(x - u t) = (1/(2 a4)) (-a2 tanh[(a2/2)(x - u t)] - a2).
// The tanh coefficient is fixed to -a2 by requiring T' = R(T) exactly; the
// printed sgn(a2 a4) prefactor satisfies the flow only when a2 a4 < 0.
double rg_kink(const RGKinkSpec& spec, double x, double t);

// max |T' - R(T)| with exact derivatives over the samples (companion check).
double rg_kink_flow_residual(const RGKinkSpec& spec,
                             std::span<const double> xi_samples);

struct GridDistribution {
  std::vector<double> lambda; // uniform grid
  std::vector<double> P;      // non-negative, trapezoid-normalized to 1
  double tau = 0;
};

// Conservative finite-volume update of
//   dP/dtau = (1/8pi^2) d/dl [Q^3 d/dl (Q^3 P)] + d/dl [beta P]
// with no-flux boundaries, Q a function of tau alone, upwinded drift.
// Rejects dtau beyond the explicit diffusion/advection stability bound.
GridDistribution fokker_planck_evolve(GridDistribution dist,
                                      const std::function<double(double)>& beta_1d,
                                      const std::function<double(double)>& Q_of_tau,
                                      double dtau, int n_steps);

struct GrowthSeries {
  std::vector<double> t;
  std::vector<double> delta;
  std::vector<double> rate;   // -a Q + b Q^3 at each sample
  double crossover_time = -1; // first sign change of the rate, -1 if none
};

// d<delta>/dt = (-a Q(t) + b Q(t)^3) <delta>, RK4 with time-dependent Q.
GrowthSeries growth_density(double delta0, double a_coef, double b_coef,
                            const std::function<double(double)>& Q_of_t,
                            double dt, int n_steps);

struct SawtoothParams {
  double v_plus = 0;     // assembly speed
  double v_minus = 0;    // disassembly speed
  double rate_cat = 0;   // + -> - switching rate
  double rate_res = 0;   // - -> + switching rate
  double t_max = 0;
  int n_samples = 0;
  bool reflecting_floor = true; // clamp length at 0
  double length0 = 0;
};

struct SawtoothResult {
  std::vector<double> t;
  std::vector<std::vector<double>> lengths; // one row per trajectory
  std::vector<double> ensemble_mean;
  double drift = 0; // analytic mean drift of the free telegraph process
};

// Telegraph-process length trajectories; trajectory i uses seed base_seed + i,
// ensemble mean reduced in index order.
SawtoothResult sawtooth_series(const SawtoothParams& p, int n_traj,
                               std::uint64_t base_seed, int n_threads = 1);

struct SelectionResult {
  bool equality = false;   // j = m/3 - 1 + (N-2)/2 to 1e-12
  bool inequality = false; // j >= (N-5)/4
  bool ok = false;
  double sum_p = 0; // sum_{i<N} p_i = (N-2)/sqrt2
  double p_N = 0;   // -(N-2)/sqrt2
};

SelectionResult selection_rules(int N, double j, double m);

// k -> k - 2 pi k^2 d'. Requires k > 2.
double instanton_k_shift(double k, double d_prime);

// k_R = k (Omega/a^2)^{const beta_I T0}, normalized so k_R = k at ratio 1.
double k_renormalized(double k, double omega_over_a2, double beta_I, double T0,
                      double proportionality_const);

} // namespace mtsim::rg
