#pragma once

#include <vector>

// Two-dimensional dynamical collapse: tachyon pulse profiles, the metric
// quadratures they source, horizon location, and the ADM-mass diagnostics.

namespace mtsim::bh {

enum class PulseKind { infalling, reflected };

struct TachyonPulse {
  double a = 0;                          // amplitude, > 0
  PulseKind kind = PulseKind::infalling; // e^{-x} a sech(2(x+t)) or the
                                         // left+right sech pair
  double value(double x, double t) const;
  double dx(double x, double t) const; // analytic spatial derivative
  double dt(double x, double t) const; // analytic time derivative
  void validate() const;
};

struct MetricProfile {
  std::vector<double> x;
  std::vector<double> g_tt; // -g_tt = 1 - int_x^inf [(dxT)^2 + (dtT)^2] dx'
                            //          - int_{-inf}^t dtT dxT dt'
  std::vector<double> g_xx; // 1 + the t-integral
  double t = 0;
};

// Adaptive quadrature of both integrals at each grid point; integration
// windows truncated where the pulse tail is below 1e-14. Throws on a
// non-converged quadrature with the worst point in the message.
MetricProfile metric_from_pulse(const TachyonPulse& pulse,
                                const std::vector<double>& x_grid, double t);

struct HorizonResult {
  bool found = false;
  double x_h = 0;       // outermost zero of the dt^2 coefficient
  bool multiple = false; // more than one sign change on the grid
};

HorizonResult horizon_locate(const MetricProfile& profile);

struct AdmFit {
  double mass = 0;
  double max_rel_residual = 0; // worst deviation from the 1 - M e^{-2x} form
};

// Least-squares fit of -g_tt = 1 - M e^{-2x} over the exterior deviation
// range; throws "not yet asymptotic" when the relative residual exceeds 1e-3.
AdmFit adm_mass(const MetricProfile& profile);

// e^{dilaton_a} / sqrt(k - 2), unit proportionality constant. Requires k > 2.
double adm_mass_vs_k(double k, double dilaton_a);

} // namespace mtsim::bh
