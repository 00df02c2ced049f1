#include "mtsim/flow.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

namespace mtsim::rg {

namespace {
double require_supercritical(double C) {
  if (C < 25.0)
    throw std::domain_error("subcritical: Q imaginary (C < 25)");
  return C;
}
} // namespace

double q_of_c_flow(double C) { return std::sqrt((require_supercritical(C) - 25.0) / 6.0); }
double q_of_c_theorem(double C) { return std::sqrt((require_supercritical(C) - 25.0) / 3.0); }

CouplingState flow_step(const CouplingState& s, const FlowSpec& spec, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("flow_step: dt must be > 0");
  const std::size_t n = s.g.size();
  if (s.g_dot.size() != n)
    throw std::invalid_argument("flow_step: g and g_dot sizes differ");

  auto accel = [&](const std::vector<double>& g,
                   const std::vector<double>& gd) {
    const double Q = spec.Q_of_C(spec.C_of_g(g));
    auto b = spec.beta(g);
    std::vector<double> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = -Q * gd[i] - b[i];
    return a;
  };

  // RK4 on the first-order system (g, g_dot).
  std::vector<double> g1 = s.g, gd1 = s.g_dot;
  auto k1g = s.g_dot;
  auto k1v = accel(s.g, s.g_dot);
  std::vector<double> g2(n), gd2(n);
  for (std::size_t i = 0; i < n; ++i) {
    g2[i] = s.g[i] + 0.5 * dt * k1g[i];
    gd2[i] = s.g_dot[i] + 0.5 * dt * k1v[i];
  }
  auto k2g = gd2;
  auto k2v = accel(g2, gd2);
  std::vector<double> g3(n), gd3(n);
  for (std::size_t i = 0; i < n; ++i) {
    g3[i] = s.g[i] + 0.5 * dt * k2g[i];
    gd3[i] = s.g_dot[i] + 0.5 * dt * k2v[i];
  }
  auto k3g = gd3;
  auto k3v = accel(g3, gd3);
  std::vector<double> g4(n), gd4(n);
  for (std::size_t i = 0; i < n; ++i) {
    g4[i] = s.g[i] + dt * k3g[i];
    gd4[i] = s.g_dot[i] + dt * k3v[i];
  }
  auto k4g = gd4;
  auto k4v = accel(g4, gd4);

  CouplingState out;
  out.g.resize(n);
  out.g_dot.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.g[i] = s.g[i] + dt / 6.0 * (k1g[i] + 2 * k2g[i] + 2 * k3g[i] + k4g[i]);
    out.g_dot[i] =
        s.g_dot[i] + dt / 6.0 * (k1v[i] + 2 * k2v[i] + 2 * k3v[i] + k4v[i]);
  }
  out.t = s.t + dt;
  out.C = spec.C_of_g(out.g);
  return out;
}

bool c_flow_check(std::span<const double> C, std::span<const double> Q,
                  double dt, double tol) {
  if (C.size() < 3) throw std::invalid_argument("c_flow_check: insufficient trace");
  if (Q.size() != C.size())
    throw std::invalid_argument("c_flow_check: trace lengths differ");
  for (std::size_t i = 1; i + 1 < C.size(); ++i) {
    const double cdd = (C[i + 1] - 2 * C[i] + C[i - 1]) / (dt * dt);
    const double cd = (C[i + 1] - C[i - 1]) / (2 * dt);
    if (cdd + Q[i] * cd > tol) return false;
  }
  return true;
}

double rg_kink(const RGKinkSpec& spec, double x, double t) {
  if (spec.a4 == 0) throw std::invalid_argument("rg_kink: a4 must be nonzero");
  const double xi = x - spec.u_wave() * t;
  return (1.0 / (2.0 * spec.a4)) *
         (-spec.a2 * std::tanh(0.5 * spec.a2 * xi) - spec.a2);
}

double rg_kink_flow_residual(const RGKinkSpec& spec,
                             std::span<const double> xi_samples) {
  double worst = 0;
  for (double xi : xi_samples) {
    const double h = std::tanh(0.5 * spec.a2 * xi);
    const double T = (1.0 / (2.0 * spec.a4)) * (-spec.a2 * h - spec.a2);
    const double Tp = -(spec.a2 * spec.a2) / (4.0 * spec.a4) * (1.0 - h * h);
    const double R = spec.a2 * T + spec.a4 * T * T;
    worst = std::max(worst, std::abs(Tp - R));
  }
  return worst;
}

GridDistribution fokker_planck_evolve(GridDistribution dist,
                                      const std::function<double(double)>& beta_1d,
                                      const std::function<double(double)>& Q_of_tau,
                                      double dtau, int n_steps) {
  const std::size_t n = dist.P.size();
  if (n < 3 || dist.lambda.size() != n)
    throw std::invalid_argument("fokker_planck_evolve: bad grid");
  const double dl = dist.lambda[1] - dist.lambda[0];

  std::vector<double> beta_face(n - 1);
  double bmax = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    beta_face[i] = beta_1d(0.5 * (dist.lambda[i] + dist.lambda[i + 1]));
    bmax = std::max(bmax, std::abs(beta_face[i]));
  }

  std::vector<double> flux(n + 1, 0.0);
  for (int step = 0; step < n_steps; ++step) {
    const double Q = Q_of_tau(dist.tau);
    const double D = std::pow(Q, 6) / (8.0 * M_PI * M_PI);
    if (dtau > 0.4 * dl * dl / std::max(D, 1e-300) ||
        (bmax > 0 && dtau > 0.9 * dl / bmax))
      throw std::invalid_argument(
          "fokker_planck_evolve: dtau exceeds the explicit stability bound");
    flux[0] = flux[n] = 0.0; // no-flux boundaries
    for (std::size_t i = 1; i < n; ++i) {
      const double diff = D * (dist.P[i] - dist.P[i - 1]) / dl;
      // Drift d/dl [beta P]: flux +beta P, upwinded on the face sign.
      const double b = beta_face[i - 1];
      const double adv = b * (b > 0 ? dist.P[i] : dist.P[i - 1]);
      flux[i] = diff + adv;
    }
    for (std::size_t i = 0; i < n; ++i)
      dist.P[i] += dtau / dl * (flux[i + 1] - flux[i]);
    dist.tau += dtau;
  }
  for (double& p : dist.P) p = std::max(p, 0.0); // clip roundoff negatives
  return dist;
}

GrowthSeries growth_density(double delta0, double a_coef, double b_coef,
                            const std::function<double(double)>& Q_of_t,
                            double dt, int n_steps) {
  if (!(a_coef > 0) || !(b_coef > 0))
    throw std::invalid_argument("growth_density: a, b must be > 0");
  GrowthSeries out;
  out.t.reserve(n_steps + 1);
  out.delta.reserve(n_steps + 1);
  out.rate.reserve(n_steps + 1);
  auto rate = [&](double t) {
    const double Q = Q_of_t(t);
    return -a_coef * Q + b_coef * Q * Q * Q;
  };
  double d = delta0, t = 0;
  out.t.push_back(0);
  out.delta.push_back(d);
  out.rate.push_back(rate(0));
  for (int s = 0; s < n_steps; ++s) {
    const double k1 = rate(t) * d;
    const double k2 = rate(t + 0.5 * dt) * (d + 0.5 * dt * k1);
    const double k3 = rate(t + 0.5 * dt) * (d + 0.5 * dt * k2);
    const double k4 = rate(t + dt) * (d + dt * k3);
    d += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    t += dt;
    out.t.push_back(t);
    out.delta.push_back(d);
    out.rate.push_back(rate(t));
    const std::size_t i = out.rate.size() - 1;
    if (out.crossover_time < 0 && out.rate[i - 1] * out.rate[i] < 0) {
      const double r0 = out.rate[i - 1], r1 = out.rate[i];
      out.crossover_time = out.t[i - 1] + dt * r0 / (r0 - r1);
    }
  }
  return out;
}

namespace {
std::vector<double> one_sawtooth(const SawtoothParams& p, std::uint64_t seed,
                                 const std::vector<double>& sample_t) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> wait_cat(p.rate_cat);
  std::exponential_distribution<double> wait_res(p.rate_res);
  std::vector<double> out(sample_t.size());
  double t = 0, len = p.length0;
  bool growing = true;
  std::size_t k = 0;
  while (k < sample_t.size()) {
    const double hold = growing
                            ? (p.rate_cat > 0 ? wait_cat(rng) : p.t_max * 2)
                            : (p.rate_res > 0 ? wait_res(rng) : p.t_max * 2);
    const double v = growing ? p.v_plus : -p.v_minus;
    const double t_end = t + hold;
    while (k < sample_t.size() && sample_t[k] <= t_end) {
      double l = len + v * (sample_t[k] - t);
      if (p.reflecting_floor) l = std::max(l, 0.0);
      out[k++] = l;
    }
    len += v * hold;
    if (p.reflecting_floor) len = std::max(len, 0.0);
    t = t_end;
    growing = !growing;
  }
  return out;
}
} // namespace

SawtoothResult sawtooth_series(const SawtoothParams& p, int n_traj,
                               std::uint64_t base_seed, int n_threads) {
  if (p.v_plus < 0 || p.v_minus < 0 || p.rate_cat < 0 || p.rate_res < 0)
    throw std::invalid_argument("sawtooth_series: negative rates/speeds rejected");
  if (n_traj < 1 || p.n_samples < 2)
    throw std::invalid_argument("sawtooth_series: need trajectories and samples");

  SawtoothResult res;
  res.t.resize(p.n_samples);
  for (int i = 0; i < p.n_samples; ++i)
    res.t[i] = p.t_max * i / (p.n_samples - 1);

  res.lengths.assign(n_traj, {});
  const int nt = std::max(1, n_threads);
  std::vector<std::thread> pool;
  for (int w = 0; w < nt; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < n_traj; i += nt)
        res.lengths[i] = one_sawtooth(p, base_seed + (std::uint64_t)i, res.t);
    });
  for (auto& th : pool) th.join();

  res.ensemble_mean.assign(p.n_samples, 0.0);
  for (int i = 0; i < n_traj; ++i) // fixed index order
    for (int k = 0; k < p.n_samples; ++k)
      res.ensemble_mean[k] += res.lengths[i][k];
  for (double& m : res.ensemble_mean) m /= n_traj;

  const double tau_p = p.rate_cat > 0 ? 1.0 / p.rate_cat : 0;
  const double tau_m = p.rate_res > 0 ? 1.0 / p.rate_res : 0;
  res.drift = (tau_p + tau_m) > 0
                  ? (p.v_plus * tau_p - p.v_minus * tau_m) / (tau_p + tau_m)
                  : 0.0;
  return res;
}

SelectionResult selection_rules(int N, double j, double m) {
  if (N < 3) throw std::invalid_argument("selection_rules: N >= 3 required");
  SelectionResult r;
  const double j_required = m / 3.0 - 1.0 + 0.5 * (N - 2);
  r.equality = std::abs(j - j_required) <= 1e-12;
  r.inequality = j >= 0.25 * (N - 5) - 1e-12;
  r.ok = r.equality && r.inequality;
  r.sum_p = (N - 2) / std::sqrt(2.0);
  r.p_N = -r.sum_p;
  return r;
}

double instanton_k_shift(double k, double d_prime) {
  if (!(k > 2))
    throw std::invalid_argument("instanton_k_shift: ADM mass singular (k <= 2)");
  return k - 2.0 * M_PI * k * k * d_prime;
}

double k_renormalized(double k, double omega_over_a2, double beta_I, double T0,
                      double proportionality_const) {
  if (!(k > 2))
    throw std::invalid_argument("k_renormalized: ADM mass singular (k <= 2)");
  if (!(omega_over_a2 > 0))
    throw std::invalid_argument("k_renormalized: Omega/a^2 must be > 0");
  return k * std::pow(omega_over_a2, proportionality_const * beta_I * T0);
}

} // namespace mtsim::rg
