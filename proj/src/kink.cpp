#include "mtsim/kink.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mtsim/units.hpp"

namespace mtsim::kink {

void MTParams::validate() const {
  if (!(M > 0)) throw std::invalid_argument("MTParams: M must be > 0");
  if (!(B > 0)) throw std::invalid_argument("MTParams: B must be > 0");
  if (!(k > 0)) throw std::invalid_argument("MTParams: k must be > 0");
  if (!(R0 > 0)) throw std::invalid_argument("MTParams: R0 must be > 0");
  if (gamma < 0) throw std::invalid_argument("MTParams: gamma must be >= 0");
  if (!(Tc > 0)) throw std::invalid_argument("MTParams: Tc must be > 0");
}

double temperature_coefficient(double T, double Tc, double temper_const) {
  if (!(temper_const > 0))
    throw std::invalid_argument("temperature_coefficient: temper_const must be > 0");
  return -std::abs(temper_const) * (T - Tc);
}

double sound_speed(const MTParams& p) { return std::sqrt(p.k / p.M) * p.R0; }

DimensionlessParams reduce(const MTParams& p, double v) {
  p.validate();
  if (!(p.A > 0)) throw std::invalid_argument("reduce: no double well (A <= 0)");
  const double v0 = sound_speed(p);
  if (!(v >= 0 && v < v0))
    throw std::invalid_argument("reduce: supersonic kink unsupported (v >= v0)");
  DimensionlessParams d;
  d.v = v;
  d.v0 = v0;
  d.rho = p.gamma * v / std::sqrt(p.M * std::abs(p.A) * (v0 * v0 - v * v));
  d.sigma = p.q * std::sqrt(p.B) * std::pow(std::abs(p.A), -1.5) * p.E;
  d.alpha = std::sqrt(std::abs(p.A) / (p.M * (v0 * v0 - v * v)));
  d.gamma_vs = d.rho / 2.0;
  // String-frame velocity from gamma_vs^2 = 1/(1 - v_s^2); negative (Wick
  // rotated) whenever rho < 2. rho = 0 is a degenerate boost, left at 0.
  d.vs_squared = d.rho > 0 ? 1.0 - 4.0 / (d.rho * d.rho) : 0.0;
  return d;
}

double sigma_critical() { return 2.0 / (3.0 * std::sqrt(3.0)); }

KinkRoots solve_cubic(double sigma) {
  if (!(std::abs(sigma) < sigma_critical()))
    throw std::invalid_argument(
        "solve_cubic: degenerate or single-well: fewer than 3 real roots");
  // Depressed cubic psi^3 - psi - sigma: trigonometric solution.
  // psi = (2/sqrt3) cos(theta/3 - 2 pi k / 3), cos(theta) = (3 sqrt3 / 2) sigma.
  const double arg = std::clamp(1.5 * std::sqrt(3.0) * sigma, -1.0, 1.0);
  const double theta = std::acos(arg);
  double r[3];
  for (int k = 0; k < 3; ++k)
    r[k] = 2.0 / std::sqrt(3.0) *
           std::cos(theta / 3.0 - 2.0 * M_PI * k / 3.0);
  std::sort(r, r + 3);
  // One Newton polish per root.
  for (double& x : r) {
    for (int it = 0; it < 2; ++it) {
      const double f = x * x * x - x - sigma;
      const double fp = 3 * x * x - 1;
      if (fp != 0) x -= f / fp;
    }
  }
  return {r[0], r[1], r[2]};
}

double kink_profile(double xi, const KinkRoots& r, int orientation) {
  const int o = orientation != 0 ? orientation : (r.d > 0 ? -1 : 1);
  const double z = o * (r.b - r.a) * xi / std::sqrt(2.0);
  // a + (b-a)/(1+e^z), written to avoid overflow for large |z|.
  if (z > 0) {
    const double e = std::exp(-z);
    return r.a + (r.b - r.a) * e / (1.0 + e);
  }
  return r.a + (r.b - r.a) / (1.0 + std::exp(z));
}

double kink_velocity(const MTParams& p, const KinkRoots& r) {
  p.validate();
  if (!(p.A > 0)) throw std::invalid_argument("kink_velocity: requires A > 0");
  if (r.d == 0 && p.gamma > 0)
    throw std::invalid_argument(
        "kink_velocity: no propagating damped kink at sigma = 0");
  const double v0 = sound_speed(p);
  if (p.gamma == 0) return v0;
  const double corr =
      2.0 * p.gamma * p.gamma / (9.0 * r.d * r.d * p.M * std::abs(p.A));
  return v0 / std::sqrt(1.0 + corr);
}

double transfer_time(double L, double v) {
  if (!(L > 0)) throw std::invalid_argument("transfer_time: L must be > 0");
  if (!(v > 0)) throw std::invalid_argument("transfer_time: v must be > 0");
  return L / v;
}

KinkEnergetics kink_energetics(const MTParams& p, double v) {
  p.validate();
  if (!(p.A > 0)) throw std::invalid_argument("kink_energetics: requires A > 0");
  const double s2 = std::sqrt(2.0);
  KinkEnergetics e;
  e.delta = (2.0 * s2 / 3.0) * p.A * p.A / p.B + (s2 / 3.0) * p.k * p.A / p.B;
  const double alpha = reduce(p, v).alpha;
  e.eff_mass = (4.0 / (3.0 * s2)) * p.M * p.A * alpha / (p.R0 * p.B);
  e.total = e.delta + 0.5 * e.eff_mass * v * v;
  return e;
}

std::pair<double, double> central_charges(double vs_squared) {
  if (vs_squared == 1.0)
    throw std::invalid_argument("central_charges: null boost singular");
  if (vs_squared > 1.0)
    throw std::invalid_argument("central_charges: v_s^2 > 1 not admissible");
  const double g2 = 1.0 / (1.0 - vs_squared);
  return {1.0 - 24.0 * vs_squared * g2, 1.0 + 24.0 * g2};
}

double friction_to_deficit(double rho) {
  if (rho < 0) throw std::invalid_argument("friction_to_deficit: rho must be >= 0");
  return rho / 2.0;
}

bool reality_check(double d) { return d * d >= 8.0 / 9.0; }

double string_length(double alpha_prime, double v0) {
  if (!(alpha_prime > 0) || !(v0 > 0))
    throw std::invalid_argument("string_length: alpha' and v0 must be > 0");
  return std::sqrt(units::hbar_SI * alpha_prime / (v0 * v0));
}

double residual_ode(const KinkRoots& r, double rho, double sigma,
                    std::span<const double> xi_samples) {
  // Exact derivatives of the profile: psi' = o (psi-a)(psi-b)/sqrt2,
  // psi'' = (2 psi - a - b)(psi-a)(psi-b)/2.
  const int o = r.d > 0 ? -1 : 1;
  double worst = 0;
  for (double xi : xi_samples) {
    const double psi = kink_profile(xi, r, o);
    const double pab = (psi - r.a) * (psi - r.b);
    const double d1 = o * pab / std::sqrt(2.0);
    const double d2 = 0.5 * (2 * psi - r.a - r.b) * pab;
    const double res = d2 + rho * d1 - psi * psi * psi + psi + sigma;
    worst = std::max(worst, std::abs(res));
  }
  return worst;
}

double field_energy(const FieldState& s, const MTParams& p) {
  const std::size_t n = s.u.size();
  const double dx = s.x[1] - s.x[0];
  double e = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = s.u[i];
    e += 0.5 * p.M * s.u_dot[i] * s.u_dot[i] - 0.5 * p.A * u * u +
         0.25 * p.B * u * u * u * u - p.q * p.E * u;
    if (i + 1 < n) {
      const double ux = (s.u[i + 1] - s.u[i]) / dx;
      e += 0.5 * p.k * p.R0 * p.R0 * ux * ux;
    }
  }
  return e * dx / p.R0;
}

FieldState make_kink_state(const MTParams& p, const KinkRoots& r, double v,
                           double x_min, double x_max, int n, double x0) {
  if (n < 3) throw std::invalid_argument("make_kink_state: need >= 3 points");
  const double u0 = std::sqrt(p.A / p.B);
  const auto dim = reduce(p, v);
  FieldState s;
  s.x.resize(n);
  s.u.resize(n);
  s.u_dot.resize(n);
  const double dx = (x_max - x_min) / (n - 1);
  const int o = r.d > 0 ? -1 : 1;
  for (int i = 0; i < n; ++i) {
    const double x = x_min + i * dx;
    const double xi = dim.alpha * (x - x0);
    s.x[i] = x;
    s.u[i] = u0 * kink_profile(xi, r, o);
    // du/dt = -v du/dx for a rigid traveling wave; exact profile derivative.
    const double psi = kink_profile(xi, r, o);
    const double dpsi = o * (psi - r.a) * (psi - r.b) / std::sqrt(2.0);
    s.u_dot[i] = -v * u0 * dim.alpha * dpsi;
  }
  return s;
}

FieldState evolve_pde(FieldState s, const MTParams& p, double dt, int n_steps) {
  p.validate();
  const std::size_t n = s.u.size();
  if (n < 3 || s.x.size() != n || s.u_dot.size() != n)
    throw std::invalid_argument("evolve_pde: inconsistent state arrays");
  const double dx = s.x[1] - s.x[0];
  const double v0 = sound_speed(p);
  if (!(dt > 0) || dt >= dx / v0)
    throw std::invalid_argument("evolve_pde: CFL violation, need dt < dx/v0 = " +
                                std::to_string(dx / v0));

  const double c2 = p.k * p.R0 * p.R0 / p.M;
  const double invM = 1.0 / p.M;
  const double uL = s.u.front(), uR = s.u.back(); // clamped values

  std::vector<double> au(n), av(n); // accumulators
  std::vector<double> ku(n), kv(n); // stage slopes
  std::vector<double> tu(n), tv(n); // stage state

  auto rhs = [&](const std::vector<double>& u, const std::vector<double>& ud,
                 std::vector<double>& du, std::vector<double>& dv) {
    du[0] = du[n - 1] = 0;
    dv[0] = dv[n - 1] = 0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double uxx = (u[i + 1] - 2 * u[i] + u[i - 1]) / (dx * dx);
      du[i] = ud[i];
      dv[i] = c2 * uxx +
              invM * (p.A * u[i] - p.B * u[i] * u[i] * u[i] -
                      p.gamma * ud[i] + p.q * p.E);
    }
  };

  static const double bw[4] = {1.0 / 6, 1.0 / 3, 1.0 / 3, 1.0 / 6};
  static const double cw[4] = {0.0, 0.5, 0.5, 1.0};
  for (int step = 0; step < n_steps; ++step) {
    for (std::size_t i = 0; i < n; ++i) au[i] = av[i] = 0;
    for (int stage = 0; stage < 4; ++stage) {
      if (stage == 0) {
        rhs(s.u, s.u_dot, ku, kv);
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          tu[i] = s.u[i] + cw[stage] * dt * ku[i];
          tv[i] = s.u_dot[i] + cw[stage] * dt * kv[i];
        }
        rhs(tu, tv, ku, kv);
      }
      for (std::size_t i = 0; i < n; ++i) {
        au[i] += bw[stage] * ku[i];
        av[i] += bw[stage] * kv[i];
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      s.u[i] += dt * au[i];
      s.u_dot[i] += dt * av[i];
    }
    s.u[0] = uL;
    s.u[n - 1] = uR;
    s.u_dot[0] = s.u_dot[n - 1] = 0;
    s.t += dt;
    if (!std::isfinite(s.u[n / 2]) || !std::isfinite(s.u_dot[n / 2]))
      throw std::runtime_error("evolve_pde: blow-up detected at step " +
                               std::to_string(step));
  }
  return s;
}

} // namespace mtsim::kink
