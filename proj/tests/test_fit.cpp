#include <random>

#include <gtest/gtest.h>

#include "exfree/errors.hpp"
#include "exfree/experiments.hpp"
#include "exfree/fit.hpp"
#include "exfree/model.hpp"

using namespace exfree;

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out;
  for (int k = 0; k < n; ++k) out.push_back(a + (b - a) * k / (n - 1));
  return out;
}

}  // namespace

TEST(FitTms, NoiselessRoundTrip) {
  for (double g_khz : {40.0, 80.0, 150.0}) {
    const double g = khz_to_angular(g_khz);
    const auto t = linspace(0.0, 4.0, 41);
    const auto p0 = generate_tmsv_trace(g, t);
    const auto fit = fit_tms_strength(t, p0);
    EXPECT_TRUE(fit.converged) << fit.message;
    EXPECT_NEAR(fit.value("g") / g, 1.0, 5e-3);
    EXPECT_NEAR(fit.value("a"), 1.0, 5e-3);
    EXPECT_NEAR(fit.value("b"), 0.0, 5e-3);
  }
}

TEST(FitTms, NoisyRoundTripIsDeterministic) {
  const double g = khz_to_angular(80);
  const auto t = linspace(0.0, 3.0, 61);
  const auto a = fit_tms_strength(t, generate_tmsv_trace(g, t, NoiseSpec{0.01, 3}));
  const auto b = fit_tms_strength(t, generate_tmsv_trace(g, t, NoiseSpec{0.01, 3}));
  EXPECT_EQ(a.value("g"), b.value("g"));
  EXPECT_NEAR(a.value("g") / g, 1.0, 0.05);
  EXPECT_GT(a.sigma("g"), 0.0);
}

TEST(FitTms, TooFewSamplesAndShortWindow) {
  const auto t = linspace(0.0, 1.0, 5);
  EXPECT_THROW(fit_tms_strength(t, generate_tmsv_trace(1.0, t)), InvalidParameter);
  const auto t_short = linspace(0.0, 0.05, 20);
  const auto fit = fit_tms_strength(t_short, generate_tmsv_trace(0.5, t_short));
  EXPECT_FALSE(fit.converged);
}

TEST(FitStark, NoiselessRoundTrip) {
  const double g = khz_to_angular(80);
  for (double delta0_khz : {-25.0, 0.0, 275.0}) {
    std::vector<double> dd, tau;
    for (double d_khz : {300.0, 350.0, 400.0, 450.0, 500.0, 600.0}) {
      dd.push_back(khz_to_angular(d_khz));
      const double total = khz_to_angular(d_khz + delta0_khz);
      tau.push_back(2.0 * M_PI / std::sqrt(total * total - 8.0 * g * g));
    }
    const auto fit = fit_stark_detuning(dd, tau, g);
    EXPECT_TRUE(fit.converged) << fit.message;
    EXPECT_NEAR(angular_to_khz(fit.value("delta_0")), delta0_khz, 0.005 * std::max(1.0, std::abs(delta0_khz)));
  }
}

TEST(FitStark, UnderDeterminedThrows) {
  const std::vector<double> dd{1.0, 2.0, 3.0};
  const std::vector<double> tau{1.0, 0.8, 0.6};
  EXPECT_THROW(fit_stark_detuning(dd, tau, 0.1), InvalidParameter);
}

TEST(FitDamped, NoiselessRoundTrip) {
  const auto t = linspace(0.0, 400.0, 401);
  const double tau1 = 250.0, tauphi = 120.0, omega = 0.2;
  std::vector<double> y;
  for (double ti : t) y.push_back(0.8 * std::exp(-ti / tau1) * (1.0 + std::exp(-ti / tauphi) * std::cos(omega * ti)) + 0.05);
  const auto fit = fit_damped_oscillation(t, y);
  EXPECT_TRUE(fit.converged) << fit.message;
  EXPECT_NEAR(fit.value("tau1_us") / tau1, 1.0, 5e-3);
  EXPECT_NEAR(fit.value("tauphi_us") / tauphi, 1.0, 5e-3);
  EXPECT_NEAR(fit.value("omega") / omega, 1.0, 5e-3);
}

TEST(FitDamped, FlatTraceIsRejected) {
  const auto t = linspace(0.0, 10.0, 50);
  const std::vector<double> y(50, 0.3);
  EXPECT_THROW(fit_damped_oscillation(t, y), InvalidParameter);
}

TEST(FitResult, ConvergedImpliesSmallResidual) {
  const FitOptions opt;
  const auto t = linspace(0.0, 3.0, 41);
  const auto fit = fit_tms_strength(t, generate_tmsv_trace(khz_to_angular(80), t, NoiseSpec{0.02, 9}), opt);
  if (fit.converged) EXPECT_LT(fit.residual_rms, opt.residual_threshold);
  EXPECT_THROW(fit.value("nope"), InvalidParameter);
}

TEST(Tmsv, SimulatedVacuumMatchesSechSquared) {
  const double g = khz_to_angular(80);
  std::vector<double> t;
  for (int k = 0; k <= 20; ++k) t.push_back(1.0 / g * k / 20.0);
  const auto sim = simulate_tmsv_vacuum(g, t, 15);
  const auto ref = generate_tmsv_trace(g, t);
  for (std::size_t k = 0; k < t.size(); ++k) EXPECT_NEAR(sim[k], ref[k], 1e-3);
}
