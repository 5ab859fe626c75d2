#include "exfree/analytic.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "exfree/errors.hpp"

namespace exfree::analytic {

namespace {

using std::numbers::pi;
using std::numbers::sqrt2;

double symmetric_g(const SystemParams& params) {
  if (std::abs(params.g1 - params.g2) > 1e-12 * std::max(params.g1, params.g2)) {
    throw UnsupportedAsymmetry("closed-form solution requires g1 == g2");
  }
  if (!(params.g1 > 0.0)) throw InvalidParameter("coupling g must be positive");
  return params.g1;
}

void check_regime(double g, double delta) {
  const double threshold = 2.0 * sqrt2 * g;
  if (!(delta > threshold)) {
    std::ostringstream msg;
    msg << "delta = " << delta << " rad/us is not above 2*sqrt(2)*g = " << threshold
        << " rad/us; a quantum phase transition occurs when delta < 2*sqrt(2)*g "
           "(parametric oscillation regime)";
    throw RegimeError(msg.str());
  }
}

double omega_of(double g, double delta) {
  check_regime(g, delta);
  return std::sqrt(delta * delta / 8.0 - g * g);
}

double tau_st_of(double g, double delta) {
  return pi / (delta / 2.0 - sqrt2 * omega_of(g, delta));
}

}  // namespace

double omega(const SystemParams& params) { return omega_of(symmetric_g(params), params.delta); }

CoeffSet heisenberg_coeffs(const SystemParams& params, double t) {
  const double g = symmetric_g(params);
  const double delta = params.delta;
  const double om = omega_of(g, delta);
  const double x = sqrt2 * om * t;
  const std::complex<double> i(0.0, 1.0);
  const std::complex<double> phase = std::exp(i * (delta * t / 2.0));
  const double asym = delta / (std::sqrt(8.0) * om);

  const std::complex<double> rot_minus = phase * (std::cos(x) - i * asym * std::sin(x));
  const std::complex<double> rot_plus = phase * (std::cos(x) + i * asym * std::sin(x));
  const std::complex<double> cross = -i * (g / (sqrt2 * om)) * phase * std::sin(x);

  CoeffSet c;
  c.t = t;
  c.c11 = 0.5 * (1.0 + rot_minus);
  c.c33 = c.c11;
  c.c13 = 0.5 * (rot_minus - 1.0);
  c.c31 = c.c13;
  c.c12 = cross;
  c.c32 = cross;
  c.c21 = -cross;
  c.c23 = -cross;
  c.c22 = rot_plus;
  return c;
}

std::array<double, 3> mean_photon_numbers(const SystemParams& params, double t, double n1_0) {
  if (n1_0 < 0.0) throw InvalidParameter("initial photon number must be >= 0");
  const auto c = heisenberg_coeffs(params, t);
  const double leak = std::norm(c.c21);
  return {n1_0 * std::norm(c.c11) + leak, (2.0 + n1_0) * leak, n1_0 * std::norm(c.c31) + leak};
}

double tau_st(const SystemParams& params) { return tau_st_of(symmetric_g(params), params.delta); }

double tau_s2(const SystemParams& params) { return pi / (sqrt2 * omega(params)); }

TimingInfo timing(const SystemParams& params) {
  TimingInfo info;
  info.omega = omega(params);
  info.tau_st = tau_st(params);
  info.tau_s2 = tau_s2(params);
  info.ratio = info.tau_st / info.tau_s2;
  return info;
}

double sweet_point_detuning(double g, int k) {
  if (k < 1) throw InvalidParameter("sweet point index k must be >= 1");
  if (!(g > 0.0)) throw InvalidParameter("coupling g must be positive");
  const double kk = static_cast<double>(k);
  return g * std::sqrt(8.0 * (1.0 + kk) * (1.0 + kk) / (1.0 + 2.0 * kk));
}

double tmsv_joint_population(double r, int n) {
  if (r < 0.0) throw InvalidParameter("squeezing degree r must be >= 0");
  if (n < 0) throw InvalidParameter("photon number must be >= 0");
  const double amp = std::pow(std::tanh(r), n) / std::cosh(r);
  return amp * amp;
}

double g_eff(const SystemParams& params) {
  if (params.delta == 0.0) throw InvalidParameter("effective coupling g1*g2/delta needs delta != 0");
  return params.g1 * params.g2 / params.delta;
}

double n2_amplitude_tms(const SystemParams& params) {
  const double g = symmetric_g(params);
  const double om = omega(params);
  return (g / (2.0 * om)) * (g / (2.0 * om));
}

BsTiming bs_reference_timing(const SystemParams& params) {
  const double g = symmetric_g(params);
  if (params.delta < 0.0) throw InvalidParameter("beam-splitter reference expects delta >= 0");
  BsTiming out;
  out.omega2 = std::sqrt(params.delta * params.delta / 8.0 + g * g);
  out.tau_st = pi / (sqrt2 * out.omega2 - params.delta / 2.0);
  out.n2_amplitude = (g / (2.0 * out.omega2)) * (g / (2.0 * out.omega2));
  return out;
}

std::vector<SwapTimePoint> swap_time_vs_g_sweep(double delta_over_g, std::span<const double> g_values) {
  if (!(delta_over_g > 2.0 * sqrt2)) {
    throw RegimeError("delta/g = " + std::to_string(delta_over_g) +
                      " is not above 2*sqrt(2); a quantum phase transition occurs when "
                      "delta < 2*sqrt(2)*g");
  }
  std::vector<SwapTimePoint> out;
  out.reserve(g_values.size());
  for (double g : g_values) {
    if (!(g > 0.0)) throw InvalidParameter("sweep couplings must be positive");
    out.push_back({g, tau_st_of(g, delta_over_g * g)});
  }
  return out;
}

}  // namespace exfree::analytic
