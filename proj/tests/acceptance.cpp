// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "exfree/analytic.hpp"
#include "exfree/dynamics.hpp"
#include "exfree/experiments.hpp"
#include "exfree/metrics.hpp"
#include "oracles.hpp"

using namespace exfree;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& note) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + note);
  }
  void info(const std::string& note) { notes.push_back("info " + note); }
};

std::string f(const char* format, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, format, a);
  return buf;
}

std::string f(const char* format, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, format, a, b);
  return buf;
}

std::string f(const char* format, double a, double b, double c) {
  char buf[200];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

const double kG = khz_to_angular(80.0);

// Max |n_num - n_closed_form| over [0, 2 tau_ST].
double oracle_error(double delta_khz, const ModeDims& dims, int samples) {
  const auto p = SystemParams::from_khz(80, delta_khz, dims);
  const double t_end = 2.0 * analytic::tau_st(p);
  const UnitaryPropagator prop(sparse_h_full(p), fock_state(dims, {1, 0, 0}));
  double worst = 0.0;
  for (int k = 0; k <= samples; ++k) {
    const double t = t_end * k / samples;
    const auto num = mean_photon_numbers(prop.at(t));
    const auto ref = analytic::mean_photon_numbers(p, t, 1.0);
    for (int m = 0; m < 3; ++m) worst = std::max(worst, std::abs(num[m] - ref[m]));
  }
  return worst;
}

Outcome criterion1() {
  Outcome o;
  for (double delta : {475.0, 675.0, 775.0}) {
    const auto start = std::chrono::steady_clock::now();
    const double err = oracle_error(delta, ModeDims{6, 5, 6}, 2000);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.check(err <= 1e-4, f("delta/2pi=%.0f kHz dims (6,5,6): max |dn| = %.3g (limit 1e-4)", delta, err));
    o.check(secs < 10.0, f("delta/2pi=%.0f kHz runtime %.2f s (limit 10 s)", delta, secs));
    o.info(f("delta/2pi=%.0f kHz dims (12,12,12): max |dn| = %.3g", delta, oracle_error(delta, ModeDims{12, 12, 12}, 2000)));
  }
  return o;
}

Outcome criterion2() {
  Outcome o;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> g_khz(10.0, 200.0), factor(1.01, 10.0), t_us(0.0, 100.0);
  double worst_norm = 0.0, worst_cross = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double g = g_khz(rng);
    const auto p = SystemParams::from_khz(g, 2.0 * std::sqrt(2.0) * g * factor(rng));
    const auto c = analytic::heisenberg_coeffs(p, t_us(rng));
    worst_norm = std::max(worst_norm, std::abs(std::norm(c.c11) + std::norm(c.c13) - std::norm(c.c12) - 1.0));
    worst_cross = std::max(worst_cross,
                           std::abs(c.c11 * std::conj(c.c31) + c.c13 * std::conj(c.c33) - c.c12 * std::conj(c.c32)));
  }
  o.check(worst_norm <= 1e-10, f("max |norm identity - 1| = %.3g", worst_norm));
  o.check(worst_cross <= 1e-10, f("max |cross identity| = %.3g", worst_cross));
  return o;
}

Outcome criterion3() {
  Outcome o;
  const std::pair<double, double> cases[] = {{475.0, 17.4}, {775.0, 30.0}};
  for (const auto& [delta, quoted] : cases) {
    const auto p = SystemParams::from_khz(80, delta, ModeDims{12, 12, 12});
    const auto info = analytic::timing(p);
    // Quoted values are rounded to the digits given.
    const double tol = quoted == 30.0 ? 0.02 : 0.01;
    o.check(std::abs(info.tau_st / quoted - 1.0) <= tol,
            f("delta/2pi=%.0f kHz: tau_ST = %.4f us vs quoted %.1f us", delta, info.tau_st, quoted));
    const int n = 20000;
    std::vector<double> t(n + 1), n3(n + 1);
    const UnitaryPropagator prop(sparse_h_full(p), fock_state(p.dims, {1, 0, 0}));
    for (int i = 0; i <= n; ++i) {
      t[i] = 2.0 * info.tau_st * i / n;
      n3[i] = mean_photon_numbers(prop.at(t[i]))[2];
    }
    const double fast = 2.0 * M_PI / (p.delta / 2.0 + std::sqrt(2.0) * info.omega);
    const double peak = oracle::smoothed_peak_time(t, n3, {info.tau_s2, fast});
    o.check(std::abs(peak / info.tau_st - 1.0) <= 5e-3,
            f("delta/2pi=%.0f kHz: trajectory peak %.4f us vs tau_ST %.4f us", delta, peak, info.tau_st));
  }
  const auto hom = SystemParams::from_khz(80, 775);
  o.info(f("delta/2pi=775 kHz: tau_ST/2 = %.2f us", 0.5 * analytic::tau_st(hom)));
  return o;
}

Outcome criterion4() {
  Outcome o;
  const std::pair<int, double> cases[] = {{4, 373.0}, {7, 463.0}};
  for (const auto& [k, operating] : cases) {
    const double root = oracle::sweet_point_root(kG, k);
    const double closed = analytic::sweet_point_detuning(kG, k);
    o.check(std::abs(angular_to_khz(root) / operating - 1.0) <= 0.02,
            f("k=%.0f: root-find delta/2pi = %.2f kHz vs operating point %.0f kHz", k, angular_to_khz(root), operating));
    o.check(std::abs(closed / root - 1.0) <= 1e-9, f("k=%.0f: closed form / root - 1 = %.3g", k, closed / root - 1.0));
  }
  return o;
}

Outcome criterion5() {
  Outcome o;
  const auto p = SystemParams::from_khz(80, 475, ModeDims{6, 5, 6});
  const double tau = analytic::tau_st(p);
  const StateVector psi0 = fock_state(p.dims, {1, 0, 0});
  const Vector exact = evolve_unitary(build_h_full(p), psi0, tau).amplitudes();
  double previous = 0.0;
  for (int div : {250, 500, 1000, 2000, 4000}) {
    const double err = (evolve_trotter(p, psi0, tau, tau / div).amplitudes() - exact).norm();
    if (previous > 0.0) {
      const double ratio = previous / err;
      o.check(ratio >= 1.5 && ratio <= 3.0, f("dt = tau_ST/%.0f: error %.3g, ratio %.3f", div, err, ratio));
    } else {
      o.info(f("dt = tau_ST/%.0f: error %.3g", div, err));
    }
    previous = err;
  }
  return o;
}

Outcome criterion6() {
  Outcome o;
  const auto p = SystemParams::from_khz(80, 775, ModeDims{8, 8, 8});
  const double half = 0.5 * analytic::tau_st(p);
  const auto r = run_hom(p, EvolutionSpec::uniform(half, 3), std::vector<double>{half});
  const auto& s = r.snapshots.front().values;
  o.check(s.at("P11") <= 0.02, f("P11 = %.3g at t = %.3f us", s.at("P11"), half));
  o.check(s.at("P02_plus_P20") >= 0.96, f("P02 + P20 = %.5f", s.at("P02_plus_P20")));
  o.check(s.at("fidelity") >= 0.98, f("phase-optimized fidelity = %.5f (phase %.3f rad)", s.at("fidelity"), s.at("phase_rad")));
  o.check(std::abs(s.at("negativity") - 0.5) <= 0.01, f("negativity = %.5f", s.at("negativity")));
  return o;
}

Outcome criterion7() {
  Outcome o;
  const std::vector<double> table{0.073, 0.06, 0.042, 0.089, 0.037};
  const double combined = depolarizing_budget(table);
  o.check(std::abs(combined - 0.799) <= 0.005, f("depolarizing combination F = %.5f", combined));

  auto p = SystemParams::from_khz(80, 373, ModeDims{6, 5, 6});
  p.coherence = measured_cavity_coherence();
  BudgetSpec spec;
  spec.cavity_decoherence = true;
  const auto report = error_budget_report(p, EvolutionSpec::uniform(analytic::tau_st(p), 2), spec);
  const double cavity = report.lines.front().infidelity;
  o.check(std::abs(cavity - 0.042) <= 0.015, f("cavity-decoherence ablation = %.2f %% (target 4.2 +- 1.5 %%)", 100.0 * cavity));

  const auto purified = run_purified_qst(p.without_decoherence(), EvolutionSpec::uniform(analytic::tau_st(p), 2),
                                         PurificationSpec{});
  o.check(purified.scalar("fidelity") > purified.scalar("fidelity_unpurified"),
          f("purified F = %.4f > unpurified F = %.4f", purified.scalar("fidelity"), purified.scalar("fidelity_unpurified")));
  return o;
}

Outcome criterion8() {
  Outcome o;
  const double sweet_khz = angular_to_khz(analytic::sweet_point_detuning(kG, 4));
  const ModeDims dims{16, 16, 16};
  const auto p = SystemParams::from_khz(80, sweet_khz, dims);
  const double tau = analytic::tau_st(p);
  o.info(f("sweet point k=4: delta/2pi = %.3f kHz, tau_ST = %.3f us", sweet_khz, tau));

  const std::pair<BinomialLabel, BinomialLabel> cases[] = {{BinomialLabel::ZeroL, BinomialLabel::ZeroE},
                                                           {BinomialLabel::PlusIL, BinomialLabel::PlusIE}};
  for (const auto& [code, error] : cases) {
    const std::array<StateVector, 3> parts{binomial_code_state(code, dims[kS1]), fock_state(ModeDims{dims[kS2]}, {0}),
                                           fock_state(ModeDims{dims[kS3]}, {0})};
    const UnitaryPropagator prop(sparse_h_full(p), product_state(dims, parts));
    const StateVector out = prop.at(tau);
    const auto received = partial_trace(out, {kS3});
    const double fid = phase_optimized_fidelity(binomial_code_state(code, dims[kS3]), received, 0).fidelity;
    o.check(fid >= 0.99, "ideal " + std::string(to_string(code)) + f(": fidelity %.6f", fid));

    const auto jumped = apply_jump(out, kS3);
    const auto split = parity_split(partial_trace(*jumped.state, {kS3}), 0);
    const double efid = phase_optimized_fidelity(binomial_code_state(error, dims[kS3]), *split.odd, 0).fidelity;
    o.check(efid >= 0.99, "jump on " + std::string(to_string(code)) + " -> " + std::string(to_string(error)) +
                              f(": odd-parity fidelity %.6f (P_odd %.4f)", efid, split.p_odd));
  }

  auto noisy = SystemParams::from_khz(80, sweet_khz, ModeDims{8, 5, 8});
  noisy.coherence = measured_cavity_coherence();
  auto spec = EvolutionSpec::uniform(tau, 2, Method::Lindblad);
  BinomialOptions opt;
  opt.wigner_points = 3;
  const auto r = run_binomial_transfer(noisy, spec, BinomialLabel::ZeroL, opt);
  o.check(r.scalar("fidelity_conditioned") > r.scalar("fidelity"),
          f("decoherence, dims (8,5,8): even-parity F = %.4f > unconditioned F = %.4f", r.scalar("fidelity_conditioned"),
            r.scalar("fidelity")));
  return o;
}

Outcome criterion9() {
  Outcome o;
  std::vector<double> t;
  for (int k = 0; k <= 40; ++k) t.push_back(3.0 * k / 40.0);
  const auto fit_g = fit_tms_strength(t, generate_tmsv_trace(kG, t));
  o.check(fit_g.converged && std::abs(fit_g.value("g") / kG - 1.0) <= 1e-3,
          f("g fit: %.5f kHz vs 80 kHz", angular_to_khz(fit_g.value("g"))));

  const double delta0 = khz_to_angular(275.0);
  std::vector<double> dd, tau;
  for (double d_khz : {50.0, 100.0, 150.0, 200.0, 250.0, 300.0, 350.0}) {
    dd.push_back(khz_to_angular(d_khz));
    const auto p = SystemParams::from_khz(80, d_khz + 275.0);
    tau.push_back(analytic::tau_s2(p));
  }
  const auto fit_d = fit_stark_detuning(dd, tau, kG);
  o.check(fit_d.converged && std::abs(fit_d.value("delta_0") / delta0 - 1.0) <= 0.02,
          f("Stark offset fit: %.4f kHz vs 275 kHz", angular_to_khz(fit_d.value("delta_0"))));

  std::vector<double> ts;
  for (int k = 0; k <= 50; ++k) ts.push_back(1.0 / kG * k / 50.0);
  const auto sim = simulate_tmsv_vacuum(kG, ts, 15);
  const auto ref = generate_tmsv_trace(kG, ts);
  double worst = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) worst = std::max(worst, std::abs(sim[k] - ref[k]));
  o.check(worst <= 1e-3, f("TMSV vacuum, two-mode simulation vs 1/cosh^2 for g t <= 1: max diff %.3g", worst));
  return o;
}

Outcome criterion10() {
  Outcome o;
  std::vector<double> grid;
  for (double r = 2.9; r <= 50.0; r += 0.5) grid.push_back(r * kG);
  grid.push_back(50.0 * kG);
  bool ordered = true;
  for (const auto& row : compare_tms_vs_bs(kG, grid)) {
    ordered = ordered && row.tms_valid && row.tau_tms < row.tau_bs && row.n2_amplitude_tms > row.n2_amplitude_bs;
  }
  o.check(ordered, f("tau_TMS < tau_BS and n2_TMS > n2_BS on %.0f grid points, delta/g in [2.9, 50]", double(grid.size())));
  const auto last = compare_tms_vs_bs(kG, std::vector<double>{50.0 * kG}).front();
  const double rt = last.tau_bs / last.tau_tms, rn = last.n2_amplitude_tms / last.n2_amplitude_bs;
  o.check(std::abs(rt - 1.0) <= 0.01 && std::abs(rn - 1.0) <= 0.01,
          f("delta/g = 50: tau ratio %.5f, n2 ratio %.5f", rt, rn));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle equivalence at (6,5,6)", criterion1},
      {"Bogoliubov invariants", criterion2},
      {"transfer timing", criterion3},
      {"sweet points", criterion4},
      {"Trotter first-order convergence", criterion5},
      {"HOM interference", criterion6},
      {"error budget", criterion7},
      {"binomial code transfer", criterion8},
      {"calibration round-trips", criterion9},
      {"TMS versus beam-splitter bus", criterion10},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    std::printf("%s %zu: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str());
    for (const auto& n : o.notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
