#pragma once

#include <array>
#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "exfree/fock.hpp"

namespace exfree {

// |<a|b>|^2, <psi|rho|psi>, and the Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2.
double state_fidelity(const StateVector& a, const StateVector& b);
double state_fidelity(const StateVector& target, const DensityMatrix& rho);
double state_fidelity(const DensityMatrix& rho, const StateVector& target);
double state_fidelity(const DensityMatrix& a, const DensityMatrix& b);

struct PhaseOptimum {
  double fidelity = 0.0;
  double phase = 0.0;  // rad, applied as exp(i phase n_mode)
};

// max over phi of <target| R rho R^dagger |target>, R = exp(i phi n_mode).
PhaseOptimum phase_optimized_fidelity(const StateVector& target, const DensityMatrix& rho,
                                      std::size_t mode);

// Normalized Choi matrix of a qubit channel, basis |in> (x) |out>, input
// span{|0>,|1>} of the sending mode, output span{|0>,|1>} of the receiver.
struct ProcessMatrix {
  Eigen::Matrix4cd choi = Eigen::Matrix4cd::Zero();

  bool is_valid(double tol = 1e-8) const;
};

// Maps |a><b| (2x2 input on the sending mode) to the reduced operator of the
// receiving mode, of any size >= 2.
using QubitChannel = std::function<Matrix(const Eigen::Matrix2cd&)>;

struct ProcessOptions {
  // Post-selected channels are renormalized instead of rejected when they
  // lose trace.
  bool post_selected = false;
  bool optimize_phase = true;
  double trace_tolerance = 1e-6;
};

struct ProcessFidelity {
  double fidelity = 0.0;
  double phase = 0.0;  // output-mode rotation used (0 when not optimized)
  double mean_trace = 1.0;  // average output trace before renormalization
  ProcessMatrix process;
};

// F = Tr(chi_ideal chi) against the identity channel.
ProcessFidelity process_fidelity_qubit_subspace(const QubitChannel& channel,
                                                const ProcessOptions& options = {});

// F = 1/4 + 3/4 prod(1 - e_i) for per-error infidelities e_i in [0, 1].
double depolarizing_budget(std::span<const double> infidelities);
// Inverse used by ablations: 1 - P = 1 - (F_with - 1/4) / (F_without - 1/4).
double ablation_infidelity(double f_with_error, double f_without_error);

// Sum of |negative eigenvalues| of the partial transpose over the second factor.
double negativity(const Matrix& rho, int dim_a, int dim_b);
// Two-mode density matrix; bipartition is the two modes.
double negativity(const DensityMatrix& rho);

// Two-mode state projected onto span{|0>,|2>} x span{|0>,|2>} and
// renormalized, as a two-qubit matrix with |0> -> qubit 0 and |2> -> qubit 1.
struct QubitPair {
  Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();
  double weight = 0.0;
};

QubitPair project_02(const DensityMatrix& two_mode);

// Expectations <s_i (x) s_j> for (i, j) != (I, I), ordered IX IY IZ XI XX ...
// ZZ. |0> is the +Z eigenstate, so (|02> + i|20>)/sqrt2 gives <XY> = -1,
// <YX> = +1, <ZZ> = -1 and zero elsewhere.
struct PauliTable {
  std::array<double, 15> values{};
  double weight = 0.0;

  static std::array<std::string_view, 15> labels();
  double at(std::string_view label) const;
};

PauliTable pauli_table(const Eigen::Matrix4cd& two_qubit);
// Throws DegenerateProjection when the {0,2} weight is below 1e-6.
PauliTable pauli_table_02(const DensityMatrix& two_mode);

// W(alpha) = (2/pi) Tr[D(alpha)^dagger rho D(alpha) Pi] on a single mode.
// D is the exponential of (alpha a^dagger - conj(alpha) a) built with at
// least `guard` extra levels, more when the largest |alpha| needs them.
std::vector<double> wigner(const DensityMatrix& single_mode, std::span<const cplx> alphas,
                           int guard = 4);

// Square grid over [-extent, extent]^2 with `points` samples per axis;
// imaginary part outer, real part inner.
std::vector<cplx> wigner_grid(double extent, int points);

struct ParitySplit {
  double p_even = 0.0;
  double p_odd = 0.0;
  std::optional<DensityMatrix> even;
  std::optional<DensityMatrix> odd;
};

ParitySplit parity_split(const DensityMatrix& rho, std::size_t mode);

}  // namespace exfree
