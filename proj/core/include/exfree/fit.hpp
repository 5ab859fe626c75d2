#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace exfree {

struct FitResult {
  std::vector<std::string> names;
  std::vector<double> estimates;
  std::vector<double> sigmas;  // one standard deviation
  double residual_rms = 0.0;
  int iterations = 0;
  bool converged = false;
  // An estimate ran into the edge of its plausible range (e.g. a decay rate
  // that collapsed to zero).
  bool at_bound = false;
  std::string message;

  double value(std::string_view name) const;
  double sigma(std::string_view name) const;
};

struct FitOptions {
  double residual_threshold = 5e-2;  // rms residual required to call a fit converged
  int max_evaluations = 4000;
};

// P0(t) = a / cosh^2(g t) + b. Estimates are named a, b, g (rad/us).
FitResult fit_tms_strength(std::span<const double> t_us, std::span<const double> p0,
                           const FitOptions& options = {});

// tau_S2 = 2 pi / sqrt((delta_d + delta_0)^2 - 8 g^2); estimate delta_0 (rad/us).
// Throws InvalidParameter when fewer than 4 points are supplied.
FitResult fit_stark_detuning(std::span<const double> delta_d, std::span<const double> tau_s2_us,
                             double g, const FitOptions& options = {});

// y = A e^{-t/tau1} [1 + s e^{-t/tauphi} cos(omega t)] + c, with s = +-1
// taken from whether the trace starts above or below its mean. Estimates
// are named tau1_us, tauphi_us, omega, amplitude, offset.
FitResult fit_damped_oscillation(std::span<const double> t_us, std::span<const double> y,
                                 const FitOptions& options = {});

}  // namespace exfree
