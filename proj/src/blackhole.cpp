#include "mtsim/blackhole.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace mtsim::bh {

namespace {
double sech(double z) { return 1.0 / std::cosh(z); }
} // namespace

void TachyonPulse::validate() const {
  // a = 0 is the absent pulse (flat background); negatives are rejected.
  if (!(a >= 0)) throw std::invalid_argument("TachyonPulse: amplitude must be >= 0");
}

double TachyonPulse::value(double x, double t) const {
  if (kind == PulseKind::infalling) return a * std::exp(-x) * sech(2 * (x + t));
  return a * sech(2 * (x + t)) + a * sech(2 * (x - t));
}

double TachyonPulse::dx(double x, double t) const {
  if (kind == PulseKind::infalling) {
    const double T = value(x, t);
    return -T * (1.0 + 2.0 * std::tanh(2 * (x + t)));
  }
  const double up = 2 * (x + t), um = 2 * (x - t);
  return -2 * a * sech(up) * std::tanh(up) - 2 * a * sech(um) * std::tanh(um);
}

double TachyonPulse::dt(double x, double t) const {
  if (kind == PulseKind::infalling) {
    return -2.0 * value(x, t) * std::tanh(2 * (x + t));
  }
  const double up = 2 * (x + t), um = 2 * (x - t);
  return -2 * a * sech(up) * std::tanh(up) + 2 * a * sech(um) * std::tanh(um);
}

namespace {
using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;

double integrate_or_throw(const std::function<double(double)>& f, double lo,
                          double hi, double x_at) {
  if (!(hi > lo)) return 0.0;
  double err = 0;
  const double val = Quad::integrate(f, lo, hi, 12, 1e-12, &err);
  if (err > 1e-8)
    throw std::runtime_error(
        "metric_from_pulse: quadrature not converged at x = " +
        std::to_string(x_at) + " (error estimate " + std::to_string(err) + ")");
  return val;
}
} // namespace

MetricProfile metric_from_pulse(const TachyonPulse& pulse,
                                const std::vector<double>& x_grid, double t) {
  pulse.validate();
  if (x_grid.size() < 2)
    throw std::invalid_argument("metric_from_pulse: need >= 2 grid points");
  // sech(2z) < 1e-15 beyond |z| ~ 17.5; margin 20 clears every tail.
  const double margin = 20.0;
  MetricProfile prof;
  prof.t = t;
  prof.x = x_grid;
  prof.g_tt.resize(x_grid.size());
  prof.g_xx.resize(x_grid.size());
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    const double x = x_grid[i];
    // Energy to the right of x is counted up to the outer edge of the
    // observation window: radiation that has escaped past the window no
    // longer curves the metric inside it, which is what restores flatness
    // once a reflected pulse has left the grid.
    const double x_hi = x_grid.back();
    const double Ix = integrate_or_throw(
        [&](double xp) {
          const double Tx = pulse.dx(xp, t);
          const double Tt = pulse.dt(xp, t);
          return Tx * Tx + Tt * Tt;
        },
        x, x_hi, x);
    const double t_lo = std::min(t, std::min(-x, x)) - margin;
    const double It = integrate_or_throw(
        [&](double tp) { return pulse.dt(x, tp) * pulse.dx(x, tp); }, t_lo, t,
        x);
    prof.g_tt[i] = -(1.0 - Ix - It);
    prof.g_xx[i] = 1.0 + It;
  }
  return prof;
}

HorizonResult horizon_locate(const MetricProfile& profile) {
  HorizonResult res;
  const auto& x = profile.x;
  int crossings = 0;
  for (std::size_t i = x.size() - 1; i >= 1; --i) {
    const double fl = -profile.g_tt[i - 1];
    const double fr = -profile.g_tt[i];
    if (fl == 0.0 || fl * fr < 0) {
      ++crossings;
      if (crossings == 1) {
        // root of the linear interpolant in the bracketing cell
        res.found = true;
        res.x_h = x[i - 1] + (x[i] - x[i - 1]) * fl / (fl - fr);
      }
    }
  }
  res.multiple = crossings > 1;
  return res;
}

AdmFit adm_mass(const MetricProfile& profile) {
  // Fit y = 1 + g_tt against e^{-2x} over points with a resolvable,
  // perturbative deviation.
  double see = 0, sey = 0, ymax = 0;
  std::vector<std::size_t> used;
  for (std::size_t i = 0; i < profile.x.size(); ++i) {
    const double y = 1.0 + profile.g_tt[i];
    ymax = std::max(ymax, std::abs(y));
    if (std::abs(y) > 1e-10 && std::abs(y) < 0.5) used.push_back(i);
  }
  AdmFit fit;
  if (ymax < 1e-8 || used.empty()) return fit; // flat already, mass 0
  for (auto i : used) {
    const double e = std::exp(-2.0 * profile.x[i]);
    const double y = 1.0 + profile.g_tt[i];
    see += e * e;
    sey += e * y;
  }
  fit.mass = sey / see;
  for (auto i : used) {
    const double e = std::exp(-2.0 * profile.x[i]);
    const double y = 1.0 + profile.g_tt[i];
    fit.max_rel_residual =
        std::max(fit.max_rel_residual, std::abs(y - fit.mass * e) /
                                           std::abs(fit.mass * e));
  }
  if (fit.max_rel_residual > 1e-3)
    throw std::runtime_error("adm_mass: not yet asymptotic (residual " +
                             std::to_string(fit.max_rel_residual) + ")");
  return fit;
}

double adm_mass_vs_k(double k, double dilaton_a) {
  if (!(k > 2)) throw std::invalid_argument("adm_mass_vs_k: requires k > 2");
  return std::exp(dilaton_a) / std::sqrt(k - 2.0);
}

} // namespace mtsim::bh
