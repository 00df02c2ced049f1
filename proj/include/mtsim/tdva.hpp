#pragma once

#include <Eigen/Dense>
#include <vector>

// Variational squeezed-state dynamics for the double-well chain: mean field
// (C, D) plus the equal-time two-point function and its conjugate (G, Pi),
// evolved by the Hamilton equations of the Gaussian-ansatz energy functional.
// Lattice units throughout: unit mass, unit wave speed.

namespace mtsim::tdva {

using Matrix = Eigen::MatrixXd;
using Column = Eigen::VectorXd;

struct QuarticPotential {
  double A = 0; // U(z) = -A z^2/2 + B z^4/4
  double B = 0; // > 0
  // Gaussian smearing e^{w d^2/dz^2} of the n-th derivative of U, n = 0..2.
  // The series terminates for the quartic:
  //   M0 = -A(z^2+2w)/2 + B(z^4+12wz^2+12w^2)/4
  //   M1 = -A z + B(z^3+6wz),  M2 = -A + 3B z^2 + 6B w.
  double smeared(int n, double z, double w) const;
  void validate() const;
};

struct FreeKernel {
  double m_eff = 0;
  double dx = 0;
  Matrix G0; // circulant vacuum two-point function, symmetric PD
};

// Periodic-lattice mode sum G0(x,y) = (1/N) sum_k e^{ik(x-y)} / (2 w_k),
// w_k = sqrt(m_eff^2 + (2/dx^2)(1 - cos k dx)). m_eff = 0 is rejected
// (infrared-divergent in 1+1 dimensions).
FreeKernel free_two_point(int n_sites, double dx, double m_eff);

struct SqueezedState {
  std::vector<double> x;
  Column C, D; // mean field and conjugate momentum
  Matrix G, Pi; // two-point function (symmetric PD) and its conjugate
  double t = 0;
  void validate() const;
};

// RK4 advance of the coupled system
//   Cdot = D,  Ddot = lap C - M1(C, w),  w_i = (G_ii - G0_ii)/2,
//   Gdot = 2(Pi G + G Pi),
//   Pidot = (1/8) G^-2 - 2 Pi^2 - (1/2) K - (1/2) diag(M2(C, w)),
// with C, D clamped at the chain ends, periodic K in the Gaussian sector.
// freeze_G keeps (G, Pi) fixed and evolves the mean field alone. Positive
// definiteness of G is monitored each step.
SqueezedState tdva_evolve(SqueezedState s, const QuarticPotential& pot,
                          const FreeKernel& kernel, double dt, int n_steps,
                          bool freeze_G = false);

// Gaussian-ansatz energy with the vacuum subtraction
//   (1/8) tr(G0^-1) + (1/2) tr(K G0)
// so the free vacuum sits at zero; at G = G0, Pi = 0 only the classical
// terms survive.
double quantum_energy(const SqueezedState& s, const QuarticPotential& pot,
                      const FreeKernel& kernel);

// Max finite-difference residual of Cddot - lap C + M1(C, w) = 0 along a
// uniformly sampled trace; second order in dt and dx.
double modified_soliton_residual(const std::vector<SqueezedState>& trace,
                                 const QuarticPotential& pot,
                                 const FreeKernel& kernel, double dt);

} // namespace mtsim::tdva
