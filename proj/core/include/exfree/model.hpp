#pragma once

#include <array>
#include <optional>
#include <vector>

#include "exfree/fock.hpp"

namespace exfree {

// Internal units: angular frequency in rad/us, time in us.
// Paper-style inputs are f/2pi in kHz.
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double khz_to_angular(double f_over_2pi_khz) { return kTwoPi * 1e-3 * f_over_2pi_khz; }
constexpr double angular_to_khz(double omega) { return omega / (kTwoPi * 1e-3); }

inline constexpr std::size_t kS1 = 0;
inline constexpr std::size_t kS2 = 1;
inline constexpr std::size_t kS3 = 2;

struct ModeCoherence {
  std::optional<double> t1;    // us
  std::optional<double> tphi;  // us
  double n_th = 0.0;
};

struct SystemParams {
  double g1 = 0.0;     // rad/us
  double g2 = 0.0;     // rad/us
  double delta = 0.0;  // rad/us
  ModeDims dims = default_dims();
  std::array<ModeCoherence, 3> coherence{};

  // g1 = g2 = g/2pi [kHz], delta/2pi [kHz].
  static SystemParams from_khz(double g_khz, double delta_khz, ModeDims dims = default_dims());

  // Throws InvalidParameter / InvalidDimension when the record is unusable.
  void validate() const;
  bool has_decoherence() const;
  SystemParams without_decoherence() const;
};

// Measured cavity T1s and thermal populations for S1, S2, S3.
std::array<ModeCoherence, 3> measured_cavity_coherence(bool with_thermal = false);

struct RegimeFlag {
  bool oscillatory = false;
  double threshold = 0.0;  // 2*sqrt(2)*max(g1, g2)
};

RegimeFlag regime(const SystemParams& params);

enum class TmsPair { S1S2, S3S2 };

// g (a_x^dagger a_2^dagger + a_x a_2) on the full space, x = 1 or 3.
OperatorMatrix build_h_tms(const SystemParams& params, TmsPair pair);
// delta a_2^dagger a_2.
OperatorMatrix build_h_detune(const SystemParams& params);
// Detuned three-mode Hamiltonian: both squeezing terms plus delta n_2.
OperatorMatrix build_h_full(const SystemParams& params);
// Adiabatically eliminated beam splitter g1 g2 / delta (a1^dagger a3 + h.c.).
OperatorMatrix build_h_eff(const SystemParams& params);
// Beam-splitter bus with the same layout, for the TMS-vs-BS comparison.
OperatorMatrix build_h_bs_reference(const SystemParams& params);

// Sparse forms of the same operators, for truncations where dense storage
// is wasteful.
SparseMatrix sparse_h_tms(const SystemParams& params, TmsPair pair);
SparseMatrix sparse_h_detune(const SystemParams& params);
SparseMatrix sparse_h_full(const SystemParams& params);
SparseMatrix sparse_h_eff(const SystemParams& params);
SparseMatrix sparse_h_bs_reference(const SystemParams& params);

// Two-mode g (a^dagger b^dagger + a b) on its own (N_a, N_b) space; used for
// vacuum-squeezing calibration traces.
OperatorMatrix build_h_tms_two_mode(double g, const ModeDims& dims);

OperatorMatrix total_photon_number(const ModeDims& dims);

// Lindblad jump operators from the per-mode coherence record.
std::vector<OperatorMatrix> collapse_operators(const SystemParams& params);

}  // namespace exfree
