#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "exfree/model.hpp"

// Closed-form Heisenberg-picture solution of the detuned three-mode
// Hamiltonian for equal couplings g1 = g2 = g, valid for delta > 2*sqrt(2)*g.
// Used as the independent reference for the numerical propagators.
namespace exfree::analytic {

// Bogoliubov coefficients: a1(t) = c11 a1 + c12 a2^dagger + c13 a3,
// a2^dagger(t) = c21 a1 + c22 a2^dagger + c23 a3, a3(t) = c31 a1 + c32 a2^dagger + c33 a3.
struct CoeffSet {
  double t = 0.0;
  std::complex<double> c11, c12, c13;
  std::complex<double> c21, c22, c23;
  std::complex<double> c31, c32, c33;
};

struct TimingInfo {
  double omega = 0.0;   // rad/us
  double tau_st = 0.0;  // us
  double tau_s2 = 0.0;  // us
  double ratio = 0.0;   // tau_st / tau_s2
};

// sqrt(delta^2/8 - g^2). Throws RegimeError below threshold and
// UnsupportedAsymmetry when g1 != g2.
double omega(const SystemParams& params);

CoeffSet heisenberg_coeffs(const SystemParams& params, double t);

// (n1, n2, n3) for n1_0 photons in S1 and vacuum in S2, S3.
std::array<double, 3> mean_photon_numbers(const SystemParams& params, double t, double n1_0);

double tau_st(const SystemParams& params);
double tau_s2(const SystemParams& params);
TimingInfo timing(const SystemParams& params);

// The detuning at which tau_st = k * tau_s2:
// delta = g * sqrt(8 (1+k)^2 / (1+2k)).
double sweet_point_detuning(double g, int k);

// |<nn|TMSV(r)>|^2 = (tanh^n r / cosh r)^2.
double tmsv_joint_population(double r, int n);

double g_eff(const SystemParams& params);

// Per-photon amplitude A of the bus leakage n2 ~ A (1 - cos(2 sqrt2 Omega t)).
double n2_amplitude_tms(const SystemParams& params);

struct BsTiming {
  double omega2 = 0.0;
  double tau_st = 0.0;
  double n2_amplitude = 0.0;
};

// Same quantities for the excitation-conserving beam-splitter bus;
// Omega2 = sqrt(delta^2/8 + g^2) is real for every delta.
BsTiming bs_reference_timing(const SystemParams& params);

struct SwapTimePoint {
  double g = 0.0;       // rad/us
  double tau_st = 0.0;  // us
};

// tau_st as a function of g at fixed delta/g.
std::vector<SwapTimePoint> swap_time_vs_g_sweep(double delta_over_g, std::span<const double> g_values);

}  // namespace exfree::analytic
