#include "mtsim/tdva.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mtsim::tdva {

void QuarticPotential::validate() const {
  if (!(B > 0)) throw std::invalid_argument("QuarticPotential: B must be > 0");
}

double QuarticPotential::smeared(int n, double z, double w) const {
  switch (n) {
    case 0:
      return -A * (z * z + 2 * w) / 2 +
             B * (z * z * z * z + 12 * w * z * z + 12 * w * w) / 4;
    case 1:
      return -A * z + B * (z * z * z + 6 * w * z);
    case 2:
      return -A + 3 * B * z * z + 6 * B * w;
    default:
      throw std::invalid_argument("QuarticPotential::smeared: n must be 0..2");
  }
}

FreeKernel free_two_point(int n_sites, double dx, double m_eff) {
  if (n_sites < 1) throw std::invalid_argument("free_two_point: n_sites < 1");
  if (!(dx > 0)) throw std::invalid_argument("free_two_point: dx must be > 0");
  if (!(m_eff > 0))
    throw std::invalid_argument(
        "free_two_point: massless kernel infrared-divergent in 1+1 dimensions");
  FreeKernel ker;
  ker.m_eff = m_eff;
  ker.dx = dx;
  // First row of the circulant, then roll.
  std::vector<double> row(n_sites, 0.0);
  for (int k = 0; k < n_sites; ++k) {
    const double kk = 2.0 * M_PI * k / n_sites;
    const double wk =
        std::sqrt(m_eff * m_eff + 2.0 / (dx * dx) * (1.0 - std::cos(kk)));
    for (int d = 0; d < n_sites; ++d)
      row[d] += std::cos(kk * d) / (2.0 * wk * n_sites);
  }
  ker.G0.resize(n_sites, n_sites);
  for (int i = 0; i < n_sites; ++i)
    for (int j = 0; j < n_sites; ++j)
      ker.G0(i, j) = row[std::abs(i - j)];
  return ker;
}

void SqueezedState::validate() const {
  const auto n = (Eigen::Index)x.size();
  if (n < 3 || C.size() != n || D.size() != n || G.rows() != n ||
      G.cols() != n || Pi.rows() != n || Pi.cols() != n)
    throw std::invalid_argument("SqueezedState: inconsistent array sizes");
  if ((G - G.transpose()).cwiseAbs().maxCoeff() > 1e-10 ||
      (Pi - Pi.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("SqueezedState: G, Pi must be symmetric");
}

namespace {
// Periodic lattice Laplacian as the positive operator K = -lap.
Matrix periodic_K(int n, double dx) {
  Matrix K = Matrix::Zero(n, n);
  const double s = 1.0 / (dx * dx);
  for (int i = 0; i < n; ++i) {
    K(i, i) = 2 * s;
    K(i, (i + 1) % n) -= s;
    K(i, (i + n - 1) % n) -= s;
  }
  return K;
}

struct Deriv {
  Column dC, dD;
  Matrix dG, dPi;
};

Deriv rhs(const SqueezedState& s, const QuarticPotential& pot,
          const FreeKernel& ker, const Matrix& K, bool freeze_G) {
  const auto n = s.C.size();
  const double invdx2 = 1.0 / (ker.dx * ker.dx);
  Deriv d;
  d.dC = s.D;
  d.dC(0) = d.dC(n - 1) = 0; // clamped ends
  d.dD = Column::Zero(n);
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    const double w = 0.5 * (s.G(i, i) - ker.G0(i, i));
    d.dD(i) = (s.C(i + 1) - 2 * s.C(i) + s.C(i - 1)) * invdx2 -
              pot.smeared(1, s.C(i), w);
  }
  if (freeze_G) {
    d.dG = Matrix::Zero(n, n);
    d.dPi = Matrix::Zero(n, n);
    return d;
  }
  d.dG = 2.0 * (s.Pi * s.G + s.G * s.Pi);
  const Matrix Ginv = s.G.llt().solve(Matrix::Identity(n, n));
  d.dPi = 0.125 * Ginv * Ginv - 2.0 * s.Pi * s.Pi - 0.5 * K;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = 0.5 * (s.G(i, i) - ker.G0(i, i));
    d.dPi(i, i) -= 0.5 * pot.smeared(2, s.C(i), w);
  }
  d.dPi = 0.5 * (d.dPi + d.dPi.transpose().eval());
  return d;
}
} // namespace

SqueezedState tdva_evolve(SqueezedState s, const QuarticPotential& pot,
                          const FreeKernel& kernel, double dt, int n_steps,
                          bool freeze_G) {
  pot.validate();
  s.validate();
  const auto n = s.C.size();
  if ((Eigen::Index)kernel.G0.rows() != n)
    throw std::invalid_argument("tdva_evolve: kernel size mismatch");
  if (!(dt > 0) || dt >= kernel.dx)
    throw std::invalid_argument("tdva_evolve: need 0 < dt < dx (lattice CFL)");
  const Matrix K = periodic_K((int)n, kernel.dx);

  auto apply = [&](const SqueezedState& base, const Deriv& d, double h) {
    SqueezedState out = base;
    out.C += h * d.dC;
    out.D += h * d.dD;
    out.G += h * d.dG;
    out.Pi += h * d.dPi;
    return out;
  };
  for (int step = 0; step < n_steps; ++step) {
    const Deriv k1 = rhs(s, pot, kernel, K, freeze_G);
    const Deriv k2 = rhs(apply(s, k1, 0.5 * dt), pot, kernel, K, freeze_G);
    const Deriv k3 = rhs(apply(s, k2, 0.5 * dt), pot, kernel, K, freeze_G);
    const Deriv k4 = rhs(apply(s, k3, dt), pot, kernel, K, freeze_G);
    s.C += dt / 6.0 * (k1.dC + 2 * k2.dC + 2 * k3.dC + k4.dC);
    s.D += dt / 6.0 * (k1.dD + 2 * k2.dD + 2 * k3.dD + k4.dD);
    s.G += dt / 6.0 * (k1.dG + 2 * k2.dG + 2 * k3.dG + k4.dG);
    s.Pi += dt / 6.0 * (k1.dPi + 2 * k2.dPi + 2 * k3.dPi + k4.dPi);
    s.G = 0.5 * (s.G + s.G.transpose().eval());
    s.Pi = 0.5 * (s.Pi + s.Pi.transpose().eval());
    s.t += dt;
    if (!freeze_G) {
      Eigen::LLT<Matrix> llt(s.G);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("tdva_evolve: Gaussian ansatz breakdown at t = " +
                                 std::to_string(s.t));
    }
  }
  return s;
}

double quantum_energy(const SqueezedState& s, const QuarticPotential& pot,
                      const FreeKernel& kernel) {
  const auto n = s.C.size();
  const double invdx2 = 1.0 / (kernel.dx * kernel.dx);
  double e = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    e += 0.5 * s.D(i) * s.D(i);
    const double w = 0.5 * (s.G(i, i) - kernel.G0(i, i));
    e += pot.smeared(0, s.C(i), w);
    if (i + 1 < n) {
      const double dc = s.C(i + 1) - s.C(i);
      e += 0.5 * dc * dc * invdx2;
    }
  }
  const Matrix K = periodic_K((int)n, kernel.dx);
  const Matrix Ginv = s.G.llt().solve(Matrix::Identity(n, n));
  const Matrix G0inv = kernel.G0.llt().solve(Matrix::Identity(n, n));
  e += 0.125 * Ginv.trace() + 2.0 * (s.Pi * s.G * s.Pi).trace() +
       0.5 * (K * s.G).trace();
  e -= 0.125 * G0inv.trace() + 0.5 * (K * kernel.G0).trace(); // vacuum at zero
  return e;
}

double modified_soliton_residual(const std::vector<SqueezedState>& trace,
                                 const QuarticPotential& pot,
                                 const FreeKernel& kernel, double dt) {
  if (trace.size() < 3)
    throw std::invalid_argument("modified_soliton_residual: need >= 3 snapshots");
  const auto n = trace[0].C.size();
  const double invdx2 = 1.0 / (kernel.dx * kernel.dx);
  double worst = 0;
  for (std::size_t k = 1; k + 1 < trace.size(); ++k) {
    const auto& sm = trace[k - 1];
    const auto& s0 = trace[k];
    const auto& sp = trace[k + 1];
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
      const double cdd = (sp.C(i) - 2 * s0.C(i) + sm.C(i)) / (dt * dt);
      const double lap = (s0.C(i + 1) - 2 * s0.C(i) + s0.C(i - 1)) * invdx2;
      const double w = 0.5 * (s0.G(i, i) - kernel.G0(i, i));
      worst = std::max(worst,
                       std::abs(cdd - lap + pot.smeared(1, s0.C(i), w)));
    }
  }
  return worst;
}

} // namespace mtsim::tdva
