#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>

#include "mtsim/openq.hpp"
#include "mtsim/units.hpp"

using namespace mtsim;
using oqs::Matrix;
using oqs::Vector;
using std::complex;
using namespace std::complex_literals;

namespace {

Matrix sigma_x() {
  Matrix s(2, 2);
  s << 0, 1, 1, 0;
  return s;
}

Matrix sigma_z() {
  Matrix s(2, 2);
  s << 1, 0, 0, -1;
  return s;
}

Matrix random_hermitian(int dim, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix A(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) A(i, j) = complex<double>(g(rng), g(rng));
  return 0.5 * (A + A.adjoint());
}

Matrix random_density(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix A(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) A(i, j) = complex<double>(g(rng), g(rng));
  Matrix rho = A * A.adjoint();
  return rho / rho.trace().real();
}

Matrix propagator(const Matrix& H, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  const auto& V = es.eigenvectors();
  Vector phases(H.rows());
  for (int i = 0; i < H.rows(); ++i)
    phases(i) = std::exp(complex<double>(0, -es.eigenvalues()(i) * t));
  return V * phases.asDiagonal() * V.adjoint();
}

oqs::ChannelProjectors block_channels(const std::vector<int>& dims) {
  int dim = 0;
  for (int d : dims) dim += d;
  oqs::ChannelProjectors ch;
  int off = 0;
  for (int d : dims) {
    Matrix P = Matrix::Zero(dim, dim);
    for (int i = 0; i < d; ++i) P(off + i, off + i) = 1.0;
    ch.P.push_back(P);
    off += d;
  }
  return ch;
}

double trace_norm(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.adjoint()));
  return es.eigenvalues().cwiseAbs().sum();
}

} // namespace

TEST_CASE("density matrix invariants") {
  Matrix rho(2, 2);
  rho << 0.5, 0.25, 0.25, 0.5;
  CHECK_NOTHROW(oqs::check_density_matrix(rho));

  Matrix bad = rho;
  bad(0, 1) = 0.25 + 0.1i;
  CHECK_THROWS_WITH_AS(oqs::check_density_matrix(bad),
                       "density matrix: Hermiticity violated",
                       std::runtime_error);

  bad = 1.1 * rho;
  CHECK_THROWS_WITH_AS(oqs::check_density_matrix(bad),
                       "density matrix: trace != 1", std::runtime_error);

  bad = rho;
  bad(0, 1) = bad(1, 0) = 0.7; // off-diagonal larger than the diagonal
  CHECK_THROWS_WITH_AS(oqs::check_density_matrix(bad),
                       "density matrix: negative eigenvalue",
                       std::runtime_error);
}

TEST_CASE("open system validation") {
  oqs::OpenSystem sys;
  sys.H = Matrix::Zero(1, 1);
  CHECK_THROWS_AS(sys.validate(), std::invalid_argument);
  sys.H = sigma_x();
  sys.H(0, 1) = 0.5; // breaks Hermiticity
  CHECK_THROWS_AS(sys.validate(), std::invalid_argument);
  sys.H = sigma_x();
  sys.lindblad_ops = {Matrix::Zero(3, 3)};
  CHECK_THROWS_AS(sys.validate(), std::invalid_argument);
  sys.lindblad_ops = {sigma_z()};
  CHECK_NOTHROW(sys.validate());
}

TEST_CASE("master equation") {
  SUBCASE("closed evolution is unitary") {
    std::mt19937_64 rng(11);
    oqs::OpenSystem sys;
    sys.H = random_hermitian(3, rng, 0.5);
    Matrix rho0 = random_density(3, rng);
    const double t = 1.0;
    Matrix rho = oqs::lindblad_evolve(rho0, sys, 1e-3, 1000);
    const Matrix U = propagator(sys.H, t);
    const Matrix exact = U * rho0 * U.adjoint();
    CHECK((rho - exact).cwiseAbs().maxCoeff() < 1e-9);
    Eigen::SelfAdjointEigenSolver<Matrix> e0(rho0), e1(rho);
    CHECK((e0.eigenvalues() - e1.eigenvalues()).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("pure dephasing decays the off-diagonal as exp(-4 lambda t)") {
    const double lam = 0.3;
    oqs::OpenSystem sys;
    sys.H = Matrix::Zero(2, 2);
    sys.lindblad_ops = {std::sqrt(lam) * sigma_z()};
    Matrix rho(2, 2);
    rho << 0.5, 0.5, 0.5, 0.5;
    const double t = 0.5;
    rho = oqs::lindblad_evolve(rho, sys, 1e-3, 500);
    CHECK(rho(0, 0).real() == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(rho(0, 1).real() ==
          doctest::Approx(0.5 * std::exp(-4.0 * lam * t)).epsilon(1e-8));
    CHECK(std::abs(rho(0, 1).imag()) < 1e-12);
  }
  SUBCASE("random systems preserve the state invariants") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 6; ++trial) {
      const int dim = 2 + trial % 3;
      oqs::OpenSystem sys;
      sys.H = random_hermitian(dim, rng, 0.5);
      sys.lindblad_ops = {random_hermitian(dim, rng, 0.3),
                          random_hermitian(dim, rng, 0.3)};
      Matrix rho = random_density(dim, rng);
      rho = oqs::lindblad_evolve(rho, sys, 1e-3, 500);
      CHECK_NOTHROW(oqs::check_density_matrix(rho, 1e-9, 1e-8, -1e-8));
    }
  }
}

TEST_CASE("state-vector unraveling") {
  SUBCASE("no dissipation reduces to the Schroedinger equation") {
    oqs::OpenSystem sys;
    sys.H = 0.7 * sigma_x();
    Vector psi0(2);
    psi0 << 1, 0;
    const double dt = 1e-4;
    const int n = 2000;
    auto tr = oqs::ito_trajectory(psi0, sys, dt, n, 5, n);
    const Vector exact = propagator(sys.H, n * dt) * psi0;
    CHECK(1.0 - std::abs(tr.psi.back().dot(exact)) < 1e-4);
  }
  SUBCASE("an eigenstate of a diagonal operator is stationary") {
    oqs::OpenSystem sys;
    sys.H = Matrix::Zero(2, 2);
    Matrix B = Matrix::Zero(2, 2);
    B(0, 0) = 0.5;
    B(1, 1) = -0.3;
    sys.lindblad_ops = {B};
    Vector psi0(2);
    psi0 << 1, 0;
    auto tr = oqs::ito_trajectory(psi0, sys, 1e-2, 500, 99, 500);
    CHECK(std::abs(tr.psi.back()(0)) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(tr.psi.back()(1)) < 1e-14);
  }
  SUBCASE("ensemble density reproduces the master equation") {
    oqs::OpenSystem sys;
    sys.H = 0.4 * sigma_x();
    sys.lindblad_ops = {std::sqrt(0.3) * sigma_z()};
    Vector psi0(2);
    psi0 << 1, 0;
    const double dt = 1e-3;
    const int n_steps = 300, save_every = 100, n_traj = 2000;
    auto rho_mc = oqs::trajectory_ensemble_density(psi0, sys, dt, n_steps,
                                                  save_every, n_traj, 1234, 4);
    Matrix rho = psi0 * psi0.adjoint();
    REQUIRE(rho_mc.size() == 4);
    CHECK(trace_norm(rho_mc[0] - rho) < 1e-12);
    for (std::size_t k = 1; k < rho_mc.size(); ++k) {
      rho = oqs::lindblad_evolve(rho, sys, dt, save_every);
      CHECK(trace_norm(rho_mc[k] - rho) < 5e-2);
    }
  }
  SUBCASE("ensemble reduction is thread-count independent") {
    oqs::OpenSystem sys;
    sys.H = 0.4 * sigma_x();
    sys.lindblad_ops = {std::sqrt(0.3) * sigma_z()};
    Vector psi0(2);
    psi0 << std::sqrt(0.5), std::sqrt(0.5);
    auto r1 = oqs::trajectory_ensemble_density(psi0, sys, 1e-3, 50, 25, 32, 7, 1);
    auto r4 = oqs::trajectory_ensemble_density(psi0, sys, 1e-3, 50, 25, 32, 7, 4);
    REQUIRE(r1.size() == r4.size());
    for (std::size_t k = 0; k < r1.size(); ++k)
      CHECK((r1[k] - r4[k]).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("oversized steps trip the norm guard") {
    oqs::OpenSystem sys;
    sys.H = Matrix::Zero(2, 2);
    sys.lindblad_ops = {3.0 * sigma_z()};
    Vector psi0(2);
    psi0 << std::sqrt(0.5), std::sqrt(0.5);
    CHECK_THROWS_WITH_AS(oqs::ito_trajectory(psi0, sys, 0.5, 10, 1),
                         "ito_trajectory: norm drift exceeds step-size bound",
                         std::runtime_error);
  }
}

TEST_CASE("dispersion entropy") {
  SUBCASE("single channel carries no dispersion") {
    oqs::ChannelProjectors ch;
    ch.P = {Matrix::Identity(3, 3)};
    Vector psi(3);
    psi << 0.2, 0.5, std::sqrt(1 - 0.04 - 0.25);
    CHECK(oqs::dispersion_entropy(psi, ch) < 1e-12);
  }
  SUBCASE("uniform spread over n channels gives ln n") {
    auto ch = block_channels({1, 1, 1, 1});
    Vector psi = Vector::Constant(4, complex<double>(0.5, 0));
    CHECK(oqs::dispersion_entropy(psi, ch) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-12));
  }
  SUBCASE("matches the direct sum for a random state") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0, 1);
    Vector psi(5);
    for (int i = 0; i < 5; ++i) psi(i) = complex<double>(g(rng), g(rng));
    psi.normalize();
    auto ch = block_channels({2, 3});
    const double p1 = std::norm(psi(0)) + std::norm(psi(1));
    const double p2 = 1.0 - p1;
    CHECK(oqs::dispersion_entropy(psi, ch) ==
          doctest::Approx(-p1 * std::log(p1) - p2 * std::log(p2))
              .epsilon(1e-10));
  }
  SUBCASE("projector validation rejects broken sets") {
    oqs::ChannelProjectors incomplete;
    incomplete.P = {block_channels({1, 1}).P[0]};
    CHECK_THROWS_AS(incomplete.validate(), std::invalid_argument);

    oqs::ChannelProjectors overlapping;
    overlapping.P = {Matrix::Identity(2, 2), block_channels({1, 1}).P[0]};
    CHECK_THROWS_AS(overlapping.validate(), std::invalid_argument);

    oqs::ChannelProjectors skew;
    Matrix P(2, 2);
    P << 1, 0.3, 0, 0;
    skew.P = {P, Matrix::Identity(2, 2) - P};
    CHECK_THROWS_AS(skew.validate(), std::invalid_argument);
  }
}

TEST_CASE("entropy decrease theorem") {
  // Two 2-dimensional channels, each monitored by its own diagonal operator.
  oqs::OpenSystem sys;
  sys.H = Matrix::Zero(4, 4);
  sys.H.diagonal() << 0.1, 0.2, 0.3, 0.4;
  Matrix B1 = Matrix::Zero(4, 4), B2 = Matrix::Zero(4, 4);
  B1.diagonal() << 0.5, 0.3, 0.0, 0.0;
  B2.diagonal() << 0.0, 0.0, 0.4, 0.2;
  sys.lindblad_ops = {B1, B2};
  auto ch = block_channels({2, 2});
  Vector psi0 = Vector::Constant(4, complex<double>(0.5, 0));

  SUBCASE("analytic rate and Monte Carlo slope agree") {
    auto rep = oqs::entropy_rate_check(psi0, sys, ch, 1e-3, 10, 1, 2000, 77, 4);
    CHECK(rep.rhs_rate == doctest::Approx(-0.125).epsilon(1e-12));
    CHECK(rep.sign_ok);
    CHECK(rep.excluded_channels.empty());
    CHECK(rep.K_mean[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(std::abs(rep.lhs_rate - rep.rhs_rate) <
          4.0 * rep.lhs_rate_stderr + 0.02);
  }
  SUBCASE("channels with no weight are excluded from the rate") {
    Vector psi(4);
    psi << std::sqrt(0.5), std::sqrt(0.5), 0, 0;
    auto rep = oqs::entropy_rate_check(psi, sys, ch, 1e-3, 4, 1, 16, 5);
    REQUIRE(rep.excluded_channels.size() == 1);
    CHECK(rep.excluded_channels[0] == 1);
  }
  SUBCASE("a Hamiltonian coupling the channels is rejected") {
    auto broken = sys;
    broken.H(0, 3) = broken.H(3, 0) = 0.1;
    CHECK_THROWS_AS(
        oqs::entropy_rate_check(psi0, broken, ch, 1e-3, 4, 1, 8, 5),
        std::invalid_argument);
  }
}

TEST_CASE("coherence decay fits") {
  const std::vector<double> u{0.0, 1.0, 2.0, 3.0};
  SUBCASE("recovers the coupling and the quadratic gap scaling") {
    auto fit = oqs::coherence_decay_fit(u, 0.8, 5.0, 0.08, 8);
    CHECK(fit.D_fit == doctest::Approx(0.8).epsilon(1e-2));
    CHECK(fit.r_squared > 0.99);
    CHECK(fit.max_quad_dev < 0.02);
    CHECK_FALSE(fit.flagged);
  }
  SUBCASE("fitted coupling is environment-size independent") {
    auto f1 = oqs::coherence_decay_fit(u, 0.8, 1.0, 0.4, 8);
    auto f10 = oqs::coherence_decay_fit(u, 0.8, 10.0, 0.04, 8);
    CHECK(f1.D_fit == doctest::Approx(f10.D_fit).epsilon(1e-3));
  }
  SUBCASE("degenerate grids and tiny grids are handled") {
    auto flat = oqs::coherence_decay_fit({1.0, 1.0, 1.0}, 0.8, 5.0, 0.1, 4);
    CHECK(flat.D_fit == 0.0);
    CHECK_FALSE(flat.flagged);
    CHECK_THROWS_AS(oqs::coherence_decay_fit({1.0}, 0.8, 5.0, 0.1, 4),
                    std::invalid_argument);
  }
}

TEST_CASE("collapse time estimates") {
  oqs::CollapseInputs in;
  in.N = 1e12;
  SUBCASE("reference string-scale point") {
    CHECK(oqs::collapse_time_string(in) ==
          doctest::Approx(0.6582119569).epsilon(1e-12));
  }
  SUBCASE("scaling in the energy and environment size") {
    auto in2 = in;
    in2.E_eV = 2;
    CHECK(oqs::collapse_time_string(in2) ==
          doctest::Approx(0.25 * oqs::collapse_time_string(in)));
    in2 = in;
    in2.N = 2e12;
    CHECK(oqs::collapse_time_string(in2) ==
          doctest::Approx(0.5 * oqs::collapse_time_string(in)));
    in2 = in;
    in2.M_gus_eV = 2e27;
    CHECK(oqs::collapse_time_string(in2) ==
          doctest::Approx(2.0 * oqs::collapse_time_string(in)));
  }
  SUBCASE("pointlike estimate for a small molecule") {
    oqs::CollapseInputs pl;
    pl.m_eV = 3.0 * units::proton_mass_eV;
    pl.delta_x_m = 4e-9;
    const double N1s = oqs::pointlike_N_for_time(pl, 1.0);
    CHECK(N1s == doctest::Approx(3220463743708.612).epsilon(1e-9));
    pl.N = N1s;
    CHECK(oqs::collapse_time_pointlike(pl) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("localization time from channel dispersion") {
    CHECK(oqs::localization_time(in, 0.0, {0.5, 0.5}) == 0.0);
    CHECK(oqs::localization_time(in, std::log(2.0), {}) ==
          doctest::Approx(oqs::collapse_time_string(in)));
    CHECK(oqs::localization_time(in, std::log(2.0), {0.5, 0.5}) ==
          doctest::Approx(2.0 * std::log(2.0) *
                          oqs::collapse_time_string(in)));
    CHECK_THROWS_AS(oqs::localization_time(in, 1.0, {0.5, 1.5}),
                    std::invalid_argument);
  }
}

TEST_CASE("energy statistics along a dephasing trace") {
  SUBCASE("dissipators commuting with H conserve mean and variance") {
    oqs::OpenSystem sys;
    sys.H = Matrix::Zero(2, 2);
    sys.H.diagonal() << 1.0, 2.0;
    sys.lindblad_ops = {std::sqrt(0.3) * sigma_z()};
    Matrix rho(2, 2);
    rho << 0.5, 0.5, 0.5, 0.5;
    std::vector<Matrix> trace{rho};
    for (int k = 0; k < 4; ++k)
      trace.push_back(oqs::lindblad_evolve(trace.back(), sys, 1e-3, 100));
    auto st = oqs::energy_statistics(trace, sys.H);
    for (double m : st.mean) CHECK(m == doctest::Approx(1.5).epsilon(1e-10));
    for (double v : st.variance)
      CHECK(v == doctest::Approx(0.25).epsilon(1e-9));
  }
  SUBCASE("non-commuting dissipators drain the mean energy") {
    oqs::OpenSystem sys;
    sys.H = sigma_x();
    sys.lindblad_ops = {std::sqrt(0.3) * sigma_z()};
    Matrix rho(2, 2);
    rho << 0.5, 0.5, 0.5, 0.5; // highest-energy eigenstate of sigma_x
    std::vector<Matrix> trace{rho};
    for (int k = 0; k < 4; ++k)
      trace.push_back(oqs::lindblad_evolve(trace.back(), sys, 1e-3, 250));
    auto st = oqs::energy_statistics(trace, sys.H);
    CHECK(st.mean.front() == doctest::Approx(1.0));
    CHECK(st.mean.back() < st.mean.front() - 0.1);
    CHECK(st.mean.back() ==
          doctest::Approx(std::exp(-4.0 * 0.3 * 1.0)).epsilon(1e-6));
  }
}
