#include "mtsim/openq.hpp"

#include <cmath>
#include <complex>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

#include "mtsim/units.hpp"

namespace mtsim::oqs {

using std::complex;
using namespace std::complex_literals;

void OpenSystem::validate() const {
  if (H.rows() < 2 || H.rows() != H.cols())
    throw std::invalid_argument("OpenSystem: H must be square, dim >= 2");
  if ((H - H.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("OpenSystem: H not Hermitian");
  for (const auto& B : lindblad_ops)
    if (B.rows() != H.rows() || B.cols() != H.cols())
      throw std::invalid_argument("OpenSystem: B_m dimension mismatch");
}

void check_density_matrix(const Matrix& rho, double herm_tol, double trace_tol,
                          double eig_floor) {
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > herm_tol)
    throw std::runtime_error("density matrix: Hermiticity violated");
  if (std::abs(rho.trace().real() - 1.0) > trace_tol ||
      std::abs(rho.trace().imag()) > trace_tol)
    throw std::runtime_error("density matrix: trace != 1");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho + rho.adjoint()));
  if (es.eigenvalues().minCoeff() < eig_floor)
    throw std::runtime_error("density matrix: negative eigenvalue");
}

Matrix lindblad_rhs(const Matrix& rho, const OpenSystem& sys) {
  Matrix out = 1.0i * (rho * sys.H - sys.H * rho);
  for (const auto& B : sys.lindblad_ops) {
    const Matrix BdB = B.adjoint() * B;
    out -= BdB * rho + rho * BdB;
    out += 2.0 * B * rho * B.adjoint();
  }
  return out;
}

namespace {
Matrix rk4_step(const Matrix& rho, const OpenSystem& sys, double dt) {
  const Matrix k1 = lindblad_rhs(rho, sys);
  const Matrix k2 = lindblad_rhs(rho + 0.5 * dt * k1, sys);
  const Matrix k3 = lindblad_rhs(rho + 0.5 * dt * k2, sys);
  const Matrix k4 = lindblad_rhs(rho + dt * k3, sys);
  return rho + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}
} // namespace

Matrix lindblad_evolve(Matrix rho, const OpenSystem& sys, double dt, int n_steps) {
  sys.validate();
  for (int step = 0; step < n_steps; ++step) {
    const double tr0 = rho.trace().real();
    Matrix next;
    int halvings = 0;
    for (;;) {
      const int sub = 1 << halvings;
      next = rho;
      for (int s = 0; s < sub; ++s) next = rk4_step(next, sys, dt / sub);
      if (std::abs(next.trace().real() - tr0) < 1e-12) break;
      if (++halvings > 20)
        throw std::runtime_error("lindblad_evolve: integrator tolerance exceeded");
    }
    rho = std::move(next);
  }
  check_density_matrix(rho, 1e-9, 1e-8, -1e-8); // loose running guard
  return rho;
}

namespace {
struct ItoWork {
  std::vector<Matrix> L;   // sqrt(2) B_m
  std::vector<Matrix> LdL; // L^dag L
  Matrix iH;
  explicit ItoWork(const OpenSystem& sys) {
    iH = complex<double>(0, 1) * sys.H;
    for (const auto& B : sys.lindblad_ops) {
      L.push_back(std::sqrt(2.0) * B);
      LdL.push_back(L.back().adjoint() * L.back());
    }
  }
};

void ito_step(Vector& psi, const ItoWork& w, double dt, std::mt19937_64& rng,
              std::normal_distribution<double>& gauss) {
  // The noise term has vanishing overlap with |psi>, so the systematic norm
  // drift lives entirely in the deterministic part; guarding that part keeps
  // the check free of Gaussian tails while still catching oversized steps.
  Vector det = -w.iH * psi * dt;
  Vector noise = Vector::Zero(psi.size());
  for (std::size_t m = 0; m < w.L.size(); ++m) {
    const complex<double> expL = psi.dot(w.L[m] * psi); // <L>
    const complex<double> expLd = std::conj(expL);
    det += (expLd * (w.L[m] * psi) - 0.5 * (w.LdL[m] * psi) -
            0.5 * expLd * expL * psi) *
           dt;
    const double amp = std::sqrt(0.5 * dt);
    const complex<double> dxi(gauss(rng) * amp, gauss(rng) * amp);
    noise += dxi * (w.L[m] * psi - expL * psi);
  }
  if (std::abs((psi + det).norm() - 1.0) > 1e-3)
    throw std::runtime_error("ito_trajectory: norm drift exceeds step-size bound");
  psi += det + noise;
  psi /= psi.norm();
}
} // namespace

Trajectory ito_trajectory(const Vector& psi0, const OpenSystem& sys, double dt,
                          int n_steps, std::uint64_t seed, int save_every) {
  sys.validate();
  ItoWork w(sys);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector psi = psi0.normalized();
  Trajectory tr;
  tr.t.push_back(0);
  tr.psi.push_back(psi);
  for (int s = 1; s <= n_steps; ++s) {
    ito_step(psi, w, dt, rng, gauss);
    if (s % save_every == 0 || s == n_steps) {
      tr.t.push_back(s * dt);
      tr.psi.push_back(psi);
    }
  }
  return tr;
}

namespace {
// Sampled states for every trajectory, parallel fill, deterministic layout.
std::vector<Trajectory> run_ensemble(const Vector& psi0, const OpenSystem& sys,
                                     double dt, int n_steps, int save_every,
                                     int n_traj, std::uint64_t base_seed,
                                     int n_threads) {
  std::vector<Trajectory> all(n_traj);
  const int nt = std::max(1, n_threads);
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mx;
  for (int wkr = 0; wkr < nt; ++wkr)
    pool.emplace_back([&, wkr] {
      try {
        for (int i = wkr; i < n_traj; i += nt)
          all[i] = ito_trajectory(psi0, sys, dt, n_steps,
                                  base_seed + (std::uint64_t)i, save_every);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mx);
        if (!err) err = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
  return all;
}
} // namespace

std::vector<Matrix> trajectory_ensemble_density(const Vector& psi0,
                                                const OpenSystem& sys, double dt,
                                                int n_steps, int save_every,
                                                int n_traj,
                                                std::uint64_t base_seed,
                                                int n_threads) {
  auto all = run_ensemble(psi0, sys, dt, n_steps, save_every, n_traj, base_seed,
                          n_threads);
  const std::size_t n_t = all[0].t.size();
  const auto dim = psi0.size();
  std::vector<Matrix> rho(n_t, Matrix::Zero(dim, dim));
  for (int i = 0; i < n_traj; ++i) // fixed index order
    for (std::size_t k = 0; k < n_t; ++k)
      rho[k] += all[i].psi[k] * all[i].psi[k].adjoint();
  for (auto& r : rho) r /= (double)n_traj;
  return rho;
}

void ChannelProjectors::validate(double tol) const {
  if (P.empty()) throw std::invalid_argument("channels: empty");
  const auto dim = P[0].rows();
  Matrix sum = Matrix::Zero(dim, dim);
  for (std::size_t k = 0; k < P.size(); ++k) {
    if ((P[k] - P[k].adjoint()).cwiseAbs().maxCoeff() > tol)
      throw std::invalid_argument("channels: projector not Hermitian");
    if ((P[k] * P[k] - P[k]).cwiseAbs().maxCoeff() > tol)
      throw std::invalid_argument("channels: projector not idempotent");
    for (std::size_t j = 0; j < k; ++j)
      if ((P[k] * P[j]).cwiseAbs().maxCoeff() > tol)
        throw std::invalid_argument("channels: projectors not orthogonal");
    sum += P[k];
  }
  if ((sum - Matrix::Identity(dim, dim)).cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument("channels: not complete");
}

double dispersion_entropy(const Vector& psi, const ChannelProjectors& channels) {
  channels.validate();
  double K = 0;
  for (const auto& Pk : channels.P) {
    const double p = std::max(0.0, (psi.dot(Pk * psi)).real());
    if (p > 0) K -= p * std::log(p);
  }
  return std::max(K, 0.0);
}

EntropyRateReport entropy_rate_check(const Vector& psi0, const OpenSystem& sys,
                                     const ChannelProjectors& channels,
                                     double dt, int n_steps, int save_every,
                                     int n_traj, std::uint64_t base_seed,
                                     int n_threads) {
  channels.validate();
  for (const auto& Pk : channels.P)
    if ((sys.H * Pk - Pk * sys.H).cwiseAbs().maxCoeff() > 1e-10)
      throw std::invalid_argument("entropy_rate_check: H not block diagonal");

  auto all = run_ensemble(psi0, sys, dt, n_steps, save_every, n_traj, base_seed,
                          n_threads);
  const std::size_t n_t = all[0].t.size();

  EntropyRateReport rep;
  rep.t = all[0].t;
  rep.K_mean.assign(n_t, 0.0);
  rep.K_stderr.assign(n_t, 0.0);
  std::vector<std::vector<double>> K(n_traj, std::vector<double>(n_t));
  for (int i = 0; i < n_traj; ++i)
    for (std::size_t k = 0; k < n_t; ++k)
      K[i][k] = dispersion_entropy(all[i].psi[k], channels);
  for (std::size_t k = 0; k < n_t; ++k) {
    double s = 0;
    for (int i = 0; i < n_traj; ++i) s += K[i][k];
    rep.K_mean[k] = s / n_traj;
    double v = 0;
    for (int i = 0; i < n_traj; ++i) {
      const double d = K[i][k] - rep.K_mean[k];
      v += d * d;
    }
    rep.K_stderr[k] = std::sqrt(v / n_traj / std::max(1, n_traj - 1));
  }

  // Left side: ensemble mean of the per-trajectory initial slope.
  const double dt01 = rep.t[1] - rep.t[0];
  double sm = 0, sv = 0;
  for (int i = 0; i < n_traj; ++i) sm += (K[i][1] - K[i][0]) / dt01;
  sm /= n_traj;
  for (int i = 0; i < n_traj; ++i) {
    const double d = (K[i][1] - K[i][0]) / dt01 - sm;
    sv += d * d;
  }
  rep.lhs_rate = sm;
  rep.lhs_rate_stderr = std::sqrt(sv / n_traj / std::max(1, n_traj - 1));

  // Right side at t = 0: -sum_k (1-p_k)/p_k sum_j |<P_k L_j P_k>|^2,
  // with L_j = sqrt(2) B_j.
  const Vector psi = psi0.normalized();
  double rhs = 0;
  for (std::size_t k = 0; k < channels.P.size(); ++k) {
    const double p = (psi.dot(channels.P[k] * psi)).real();
    if (p < 1e-8) {
      rep.excluded_channels.push_back((int)k);
      continue;
    }
    double Rk = 0;
    for (const auto& B : sys.lindblad_ops) {
      const Matrix Lkj = channels.P[k] * (std::sqrt(2.0) * B) * channels.P[k];
      Rk += std::norm(psi.dot(Lkj * psi));
    }
    rhs -= (1.0 - p) / p * Rk;
  }
  rep.rhs_rate = rhs;
  rep.sign_ok = rhs <= 0;
  return rep;
}

DecayFit coherence_decay_fit(const std::vector<double>& u_grid, double coupling_D,
                             double N_env, double t_max, int n_times) {
  const int n = (int)u_grid.size();
  if (n < 2) throw std::invalid_argument("coherence_decay_fit: need >= 2 sites");
  OpenSystem sys;
  sys.H = Matrix::Zero(n, n);
  Matrix B = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) B(i, i) = u_grid[i];
  sys.lindblad_ops = {std::sqrt(coupling_D * N_env) * B};

  double du2max = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      du2max = std::max(du2max, (u_grid[i] - u_grid[j]) * (u_grid[i] - u_grid[j]));
  const double rate_max = coupling_D * N_env * du2max;
  const double dt_target = 0.02 / std::max(rate_max, 1e-30);

  Matrix rho = Matrix::Constant(n, n, complex<double>(1.0 / n, 0));
  const Matrix rho0 = rho;

  std::vector<double> xs, ys; // x = t (du)^2, y = -ln|ratio|
  struct Pair { int i, j; std::vector<double> slope_x, slope_y; };
  std::vector<Pair> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (u_grid[i] != u_grid[j]) pairs.push_back({i, j, {}, {}});

  double t = 0;
  for (int s = 1; s <= n_times; ++s) {
    const double t_next = t_max * s / n_times;
    const int sub = std::max(1, (int)std::ceil((t_next - t) / dt_target));
    rho = lindblad_evolve(rho, sys, (t_next - t) / sub, sub);
    t = t_next;
    for (auto& pr : pairs) {
      const double ratio = std::abs(rho(pr.i, pr.j)) / std::abs(rho0(pr.i, pr.j));
      if (ratio <= 1e-14) continue; // below resolvable decay
      const double du = u_grid[pr.i] - u_grid[pr.j];
      xs.push_back(t * du * du);
      ys.push_back(-std::log(ratio));
      pr.slope_x.push_back(t * du * du);
      pr.slope_y.push_back(-std::log(ratio));
    }
  }

  auto fit_origin = [](const std::vector<double>& x, const std::vector<double>& y) {
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxx += x[i] * x[i];
      sxy += x[i] * y[i];
    }
    return sxx > 0 ? sxy / sxx : 0.0;
  };

  DecayFit fit;
  const double K = fit_origin(xs, ys);
  double ss_res = 0, ss_tot = 0, ymean = 0;
  for (double y : ys) ymean += y;
  ymean /= std::max<std::size_t>(1, ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ss_res += (ys[i] - K * xs[i]) * (ys[i] - K * xs[i]);
    ss_tot += (ys[i] - ymean) * (ys[i] - ymean);
  }
  fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.D_fit = K / N_env;
  for (auto& pr : pairs) {
    if (pr.slope_x.empty()) continue;
    const double Kp = fit_origin(pr.slope_x, pr.slope_y);
    fit.max_quad_dev = std::max(fit.max_quad_dev, std::abs(Kp - K) / K);
  }
  fit.flagged = fit.r_squared < 0.99;
  return fit;
}

double collapse_time_string(const CollapseInputs& in) {
  return units::hbar_eV * in.M_gus_eV / (in.E_eV * in.E_eV * in.N);
}

double collapse_time_pointlike(const CollapseInputs& in) {
  const double dx_nat = in.delta_x_m / units::hbar_c_eV_m; // 1/eV
  const double ratio = in.M_gus_eV / in.m_eV;
  return units::hbar_eV * ratio * ratio * ratio /
         (in.N * std::pow(in.m_eV, 3) * dx_nat * dx_nat);
}

double pointlike_N_for_time(const CollapseInputs& in, double target_seconds) {
  CollapseInputs one = in;
  one.N = 1;
  return collapse_time_pointlike(one) / target_seconds;
}

double localization_time(const CollapseInputs& in, double K0,
                         const std::vector<double>& channel_probs) {
  if (K0 == 0) return 0;
  double ratio = 1.0; // order-one naturalness default
  if (!channel_probs.empty()) {
    double denom = 0;
    for (double p : channel_probs) {
      if (!(p > 0 && p < 1))
        throw std::invalid_argument("localization_time: <P_k> must lie in (0,1)");
      denom += p * (1.0 - p);
    }
    ratio = K0 / denom;
  }
  return ratio * collapse_time_string(in);
}

EnergyStatistics energy_statistics(const std::vector<Matrix>& rho_trace,
                                   const Matrix& H) {
  EnergyStatistics st;
  const Matrix H2 = H * H;
  for (const auto& rho : rho_trace) {
    const double mean = (rho * H).trace().real();
    st.mean.push_back(mean);
    st.variance.push_back((rho * H2).trace().real() - mean * mean);
  }
  return st;
}

} // namespace mtsim::oqs
