#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

// Open-quantum-system layer: Lindblad evolution in the double-weight
// dissipator convention
//   rho' = i[rho,H] - sum_m {B_m^dag B_m, rho} + 2 sum_m B_m rho B_m^dag,
// its Ito state-vector unraveling, dispersion entropy and the localization
// rate theorem, off-diagonal decay fits, and the two collapse-time estimates.

namespace mtsim::oqs {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

struct OpenSystem {
  Matrix H;                        // Hermitian, hbar = 1 units
  std::vector<Matrix> lindblad_ops; // the B_m
  void validate() const;
};

// Invariant checks for a density matrix; throws on violation.
void check_density_matrix(const Matrix& rho, double herm_tol = 1e-12,
                          double trace_tol = 1e-10, double eig_floor = -1e-10);

// Right-hand side of the master equation above.
Matrix lindblad_rhs(const Matrix& rho, const OpenSystem& sys);

// RK4 with per-step trace guard; halves the step (up to 20 times) until the
// one-step trace drift is < 1e-12, then asserts the state invariants.
Matrix lindblad_evolve(Matrix rho, const OpenSystem& sys, double dt, int n_steps);

struct Trajectory {
  std::vector<double> t;
  std::vector<Vector> psi; // normalized states at the sample times
};

// Euler-Maruyama integration of the state-vector diffusion whose ensemble
// reproduces the master equation above: noise term (B_m - <B_m>)|psi> dxi_m
// with E[dxi dxi*] = 2 dt, and the deterministic dissipative bracket carrying
// an overall factor 2 relative to the unit-coefficient form (the combination
// is the standard unraveling with operators sqrt(2) B_m; the oracle tests pin
// it against lindblad_evolve). Renormalized each step; deterministic per seed.
Trajectory ito_trajectory(const Vector& psi0, const OpenSystem& sys, double dt,
                          int n_steps, std::uint64_t seed, int save_every = 1);

// Ensemble mean of |psi><psi| over trajectories seed(i) = base_seed + i,
// reduced in fixed index order; optional thread fan-out, same result for any
// thread count.
std::vector<Matrix> trajectory_ensemble_density(const Vector& psi0,
                                                const OpenSystem& sys, double dt,
                                                int n_steps, int save_every,
                                                int n_traj,
                                                std::uint64_t base_seed,
                                                int n_threads = 1);

struct ChannelProjectors {
  std::vector<Matrix> P;
  void validate(double tol = 1e-12) const; // idempotent, Hermitian, complete, orthogonal
};

// K = -sum_k <P_k> ln <P_k>, with 0 ln 0 = 0.
double dispersion_entropy(const Vector& psi, const ChannelProjectors& channels);

struct EntropyRateReport {
  std::vector<double> t;
  std::vector<double> K_mean;
  std::vector<double> K_stderr;
  double lhs_rate = 0;        // d<K>/dt at t = 0, ensemble finite difference
  double lhs_rate_stderr = 0;
  double rhs_rate = 0;        // -sum_k (1-<P_k>)/<P_k> R_k at t = 0
  bool sign_ok = false;       // rhs <= 0
  std::vector<int> excluded_channels; // <P_k> below floor, skipped in rhs
};

// Monte Carlo check of the entropy-decrease theorem for block-diagonal H.
// rhs uses L_kj = P_k L_j P_k with L_j = sqrt(2) B_j (the unraveling's
// operators), evaluated on the initial state.
EntropyRateReport entropy_rate_check(const Vector& psi0, const OpenSystem& sys,
                                     const ChannelProjectors& channels,
                                     double dt, int n_steps, int save_every,
                                     int n_traj, std::uint64_t base_seed,
                                     int n_threads = 1);

struct DecayFit {
  double D_fit = 0;       // fitted diffusion coefficient (per unit N)
  double r_squared = 0;   // of the joint linear fit in t (u_I-u_F)^2
  double max_quad_dev = 0; // worst relative deviation from (du)^2 scaling
  bool flagged = false;    // r_squared < 0.99
};

// Pure position dephasing on a grid of dimer displacements: single Lindblad
// operator sqrt(D N) diag(u). Evolves the uniform-coherence state and fits
// ln|rho_IF(t)/rho_IF(0)| = -K t (u_I - u_F)^2.
DecayFit coherence_decay_fit(const std::vector<double>& u_grid, double coupling_D,
                             double N_env, double t_max, int n_times);

struct CollapseInputs {
  double M_gus_eV = 1e27;  // grand-unified string scale, eV
  double E_eV = 1;         // typical energy scale, eV
  double N = 1;            // environment units
  double m_eV = 0;         // moving mass (mc^2), eV
  double delta_x_m = 0;    // displacement scale, m
};

// t = hbar M_gus / (E^2 N), energies in eV, result in seconds.
double collapse_time_string(const CollapseInputs& in);

// t = hbar (M_gus/m)^3 / (N m^3 (dx/hbar c)^2), result in seconds.
double collapse_time_pointlike(const CollapseInputs& in);

// N such that collapse_time_pointlike equals target_seconds.
double pointlike_N_for_time(const CollapseInputs& in, double target_seconds);

// [K0 / sum_k p_k (1-p_k)] * collapse_time_string. An empty probability list
// applies the order-one default ratio 1. K0 = 0 returns 0.
double localization_time(const CollapseInputs& in, double K0,
                         const std::vector<double>& channel_probs);

struct EnergyStatistics {
  std::vector<double> mean;        // Tr(rho H)
  std::vector<double> variance;    // Tr(rho H^2) - mean^2
};

EnergyStatistics energy_statistics(const std::vector<Matrix>& rho_trace,
                                   const Matrix& H);

} // namespace mtsim::oqs
