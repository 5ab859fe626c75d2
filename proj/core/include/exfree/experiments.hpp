#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "exfree/dynamics.hpp"
#include "exfree/fit.hpp"
#include "exfree/fock.hpp"
#include "exfree/metrics.hpp"
#include "exfree/model.hpp"

namespace exfree {

// Intentional detuning plus the Stark-shift offset; dynamics uses their sum.
struct CalibrationParams {
  double delta_d = 0.0;  // rad/us
  double delta_0 = 0.0;  // rad/us
  std::optional<double> delta_ac;  // rad/us

  double total_detuning() const { return delta_d + delta_0; }
};

struct Series {
  std::string name;
  std::string unit;
  std::vector<double> values;
};

struct StageRecord {
  std::string name;
  double success_probability = 1.0;
};

struct WignerMap {
  std::string label;
  std::vector<cplx> alphas;
  std::vector<double> values;
};

// Values evaluated at one instant, e.g. HOM tomography points.
struct Snapshot {
  double t = 0.0;  // us
  std::map<std::string, double> values;
};

struct ProtocolResult {
  std::string experiment;
  std::vector<double> times;  // us
  std::vector<Series> series;  // one value per entry of `times`
  std::map<std::string, double> scalars;
  std::vector<StageRecord> stages;
  std::vector<Snapshot> snapshots;
  std::optional<PauliTable> pauli;
  std::optional<ProcessMatrix> process;
  std::vector<WignerMap> wigner;
  std::vector<std::string> flags;

  const Series& column(std::string_view name) const;
  double scalar(std::string_view name) const;
  // Product of stage success probabilities.
  double retention() const;
};

// Trajectories of n1, n2, n3 from |100> with the method in `spec`.
ProtocolResult run_single_photon_qst(const SystemParams& params, const EvolutionSpec& spec);

enum class Purification { None, Qubit, QubitCavity };

Purification parse_purification(std::string_view text);
std::string_view to_string(Purification p);

struct PurificationSpec {
  Purification stages = Purification::QubitCavity;
  // Auxiliary-qubit excitation rate during the pump; failure is 1 - e^{-gamma t}.
  double gamma_q = 0.0057;  // 1/us
};

// Single-photon transfer read out at spec.total_time. Reports the process
// fidelity after each purification stage up to the requested one.
ProtocolResult run_purified_qst(const SystemParams& params, const EvolutionSpec& spec,
                                const PurificationSpec& purification);

// |101> input. Snapshot times default to odd multiples of tau_ST/2 within
// the run when `snapshot_times` is empty.
ProtocolResult run_hom(const SystemParams& params, const EvolutionSpec& spec,
                       std::span<const double> snapshot_times = {});

struct BinomialOptions {
  // Apply a_3 to the received state before the parity measurement.
  bool inject_jump = false;
  double wigner_extent = 3.0;
  int wigner_points = 41;
};

ProtocolResult run_binomial_transfer(const SystemParams& params, const EvolutionSpec& spec,
                                     BinomialLabel label, const BinomialOptions& options = {});

struct NoiseSpec {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

// P0(t) = 1/cosh^2(g t), optionally with additive Gaussian noise.
std::vector<double> generate_tmsv_trace(double g, std::span<const double> t_us,
                                        const std::optional<NoiseSpec>& noise = std::nullopt);
// Vacuum probability of one mode under two-mode squeezing, simulated on
// (levels, levels).
std::vector<double> simulate_tmsv_vacuum(double g, std::span<const double> t_us, int levels = 15);

struct BudgetLine {
  std::string name;
  double infidelity = 0.0;
  bool simulated = false;
};

struct BudgetSpec {
  bool qubit = false;
  bool residual_s2 = false;
  bool cavity_decoherence = false;
  double gamma_q = 0.0057;  // 1/us
  std::vector<BudgetLine> fixed;
};

struct BudgetReport {
  std::vector<BudgetLine> lines;
  double combined_fidelity = 1.0;
  std::map<std::string, double> reference_fidelities;
};

// Ablations at readout time spec.total_time. Throws BudgetUndefined when an
// ablation fidelity is at or below 1/4.
BudgetReport error_budget_report(const SystemParams& params, const EvolutionSpec& spec,
                                 const BudgetSpec& budget);

struct CompareRow {
  double delta = 0.0;  // rad/us
  bool tms_valid = false;
  double tau_tms = 0.0;  // us
  double tau_bs = 0.0;  // us
  double n2_amplitude_tms = 0.0;
  double n2_amplitude_bs = 0.0;
};

std::vector<CompareRow> compare_tms_vs_bs(double g, std::span<const double> delta_grid);

// Process fidelity of the S1 -> S3 qubit transfer at time t. With
// `post_select_s2` the S2-vacuum projection is applied and renormalized.
ProcessFidelity transfer_process_fidelity(const SystemParams& params, Method method, double t,
                                          bool post_select_s2, double trotter_dt = 0.0);

}  // namespace exfree
