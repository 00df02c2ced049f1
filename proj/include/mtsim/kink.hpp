#pragma once

#include <span>
#include <utility>
#include <vector>

// Classical microtubule displacement-field model: dimensionless reduction,
// exact kink solutions of the damped anharmonic wave equation, energetics,
// and direct method-of-lines PDE evolution.

namespace mtsim::kink {

// Physical parameter set of the dimer chain. SI units.
struct MTParams {
  double M = 0;            // dimer mass, kg
  double A = 0;            // quadratic potential coefficient, J/m^2 (sign free)
  double B = 0;            // quartic potential coefficient, J/m^4, > 0
  double k = 0;            // stiffness, J/m^2
  double R0 = 0;           // dimer spacing, m
  double gamma = 0;        // friction, kg/s
  double q = 36 * 1.602176634e-19; // mobile charge, C (default 18 x 2e)
  double E = 0;            // electric field, V/m
  double T = 300;          // temperature, K
  double Tc = 300;         // critical temperature, K
  double temper_const = 0; // |const| of the temperature law, J/(m^2 K)

  void validate() const; // throws std::invalid_argument on bad invariants
};

struct DimensionlessParams {
  double rho = 0;        // dimensionless friction
  double sigma = 0;      // dimensionless forcing
  double alpha = 0;      // inverse length scale, 1/m
  double v = 0;          // kink speed, m/s
  double v0 = 0;         // sound speed, m/s
  double gamma_vs = 0;   // boost factor
  double vs_squared = 0; // squared string velocity (sign free)
};

// Cubic factorization roots of psi^3 - psi - sigma, ascending.
struct KinkRoots {
  double a = 0; // smallest
  double d = 0; // middle
  double b = 0; // largest
};

struct FieldState {
  std::vector<double> x;     // positions, m (uniform)
  std::vector<double> u;     // displacement, m
  std::vector<double> u_dot; // velocity, m/s
  double t = 0;              // time, s
};

struct KinkEnergetics {
  double delta = 0;    // binding + resonant transfer energy, J
  double total = 0;    // delta + kinetic, J
  double eff_mass = 0; // kink effective mass, kg
};

// A = -|temper_const| (T - Tc); positive below Tc.
double temperature_coefficient(double T, double Tc, double temper_const);

double sound_speed(const MTParams& p);

// Dimensionless reduction at kink speed v. Requires A > 0 and 0 <= v < v0.
DimensionlessParams reduce(const MTParams& p, double v);

// Largest |sigma| admitting three distinct real roots: 2/(3 sqrt 3).
double sigma_critical();

// Roots of psi^3 - psi - sigma, labeled a <= d <= b. Requires
// |sigma| < sigma_critical().
KinkRoots solve_cubic(double sigma);

// Heteroclinic profile connecting b (xi -> -inf) to a (xi -> +inf).
// `orientation` +1 is the printed e^{+(b-a)xi/sqrt2} form, valid as a bounded
// solution of the damped equation when d <= 0; -1 mirrors it for d > 0.
// Zero picks the orientation matching sgn(d) automatically.
double kink_profile(double xi, const KinkRoots& r, int orientation = 0);

// Fixed propagation speed v = v0 [1 + 2 gamma^2/(9 d^2 M A)]^{-1/2}.
double kink_velocity(const MTParams& p, const KinkRoots& r);

// L / v.
double transfer_time(double L, double v);

// Binding + resonant energy, effective mass, and total energy at speed v.
KinkEnergetics kink_energetics(const MTParams& p, double v);

// Central charges of the two boosted world-sheet factors,
// c_t = 1 - 24 v^2 g^2, c_x = 1 + 24 g^2 with g^2 = 1/(1 - v^2).
std::pair<double, double> central_charges(double vs_squared);

// gamma_vs = rho / 2.
double friction_to_deficit(double rho);

// True iff d^2 >= 8/9 (real string velocity regime).
bool reality_check(double d);

// lambda_s = sqrt(hbar alpha' / v0^2), meters.
double string_length(double alpha_prime, double v0);

// Max |psi'' + rho psi' - psi^3 + psi + sigma| of the analytic profile with
// exact derivatives, over the sample points. Inconsistent (rho, sigma) give a
// large residual instead of an error.
double residual_ode(const KinkRoots& r, double rho, double sigma,
                    std::span<const double> xi_samples);

// Discrete analogue of the chain Hamiltonian (per unit R0), for bookkeeping.
double field_energy(const FieldState& s, const MTParams& p);

// Analytic kink initial data centered at x0 moving at speed v.
FieldState make_kink_state(const MTParams& p, const KinkRoots& r, double v,
                           double x_min, double x_max, int n, double x0);

// Method-of-lines integration of the damped chain equation: centered
// second-order space, classical RK4 time, endpoints clamped to their initial
// values. Throws on CFL violation (dt >= dx/v0) or non-finite fields.
FieldState evolve_pde(FieldState s, const MTParams& p, double dt, int n_steps);

} // namespace mtsim::kink
