#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "exfree/fock.hpp"
#include "exfree/model.hpp"

namespace exfree {

enum class Method { ExactUnitary, Trotter, Lindblad };

Method parse_method(std::string_view text);
std::string_view to_string(Method method);

// Operator order inside one Trotter step. Printed is
// e^{-iH_TMS1 dt} e^{-iH_TMS2 dt} e^{-iH_detune dt} as a matrix product,
// so the detuning acts on the ket first.
enum class TrotterOrder { Printed, Reversed };

struct EvolutionSpec {
  double total_time = 0.0;  // us
  Method method = Method::ExactUnitary;
  double trotter_dt = 0.0;  // us
  TrotterOrder trotter_order = TrotterOrder::Printed;
  double rtol = 1e-8;
  double atol = 1e-10;
  std::size_t max_steps = 5'000'000;
  std::vector<double> sample_times;  // sorted, within [0, total_time]

  void validate() const;

  // `samples` equally spaced points including both ends.
  static EvolutionSpec uniform(double total_time, std::size_t samples, Method method = Method::ExactUnitary);
};

// Eigendecomposition of H restricted to the basis states reachable from the
// support of psi through nonzero matrix elements. Any state in that span
// can then be propagated to arbitrary times at O(k^2) cost.
class UnitaryPropagator {
 public:
  UnitaryPropagator(const OperatorMatrix& hamiltonian, const StateVector& psi);
  UnitaryPropagator(const SparseMatrix& hamiltonian, const StateVector& psi);

  StateVector at(double t) const;
  std::size_t subspace_size() const { return support_.size(); }

 private:
  ModeDims dims_;
  std::vector<std::size_t> support_;
  Eigen::VectorXd energies_;
  Matrix vectors_;
  Vector coeffs_;  // psi in the eigenbasis
};

// exp(-iHt) psi. Throws InvalidOperator when H is not Hermitian.
StateVector evolve_unitary(const OperatorMatrix& hamiltonian, const StateVector& psi, double t);
StateVector evolve_unitary(const SparseMatrix& hamiltonian, const StateVector& psi, double t);

// First-order Trotter product repeated ceil(t/dt) times with step t/n <= dt.
StateVector evolve_trotter(const SystemParams& params, const StateVector& psi, double t, double dt,
                           TrotterOrder order = TrotterOrder::Printed);

// Reusable step operator; `step` advances a state by one dt.
class TrotterStepper {
 public:
  TrotterStepper(const SystemParams& params, double dt, TrotterOrder order = TrotterOrder::Printed);
  void step(Vector& amplitudes) const;
  double dt() const { return dt_; }

 private:
  ModeDims dims_;
  double dt_;
  TrotterOrder order_;
  Matrix gate_s1s2_;  // on (S1, S2)
  Matrix gate_s3s2_;  // on (S3, S2)
  Vector detune_phase_;
};

// Master equation d rho/dt = -i[H, rho] + sum_k (L rho L^dagger - {L^dagger L, rho}/2).
// Returns rho at spec.sample_times. Throws NonConvergence on integrator failure.
std::vector<DensityMatrix> evolve_lindblad(const OperatorMatrix& hamiltonian,
                                           std::span<const OperatorMatrix> collapse_ops,
                                           const DensityMatrix& rho, const EvolutionSpec& spec);

// Same propagation for an arbitrary (not necessarily Hermitian) operator X,
// e.g. |i><j| when building a process matrix.
std::vector<Matrix> evolve_lindblad_operator(const OperatorMatrix& hamiltonian,
                                             std::span<const OperatorMatrix> collapse_ops,
                                             const Matrix& x, const EvolutionSpec& spec);

// Outcome of a probabilistic operation; `state` is empty when the outcome
// has (numerically) zero probability.
template <typename State>
struct Conditioned {
  std::optional<State> state;
  double probability = 0.0;
  bool possible() const { return state.has_value(); }
};

inline constexpr double kImpossibleOutcome = 1e-12;

Conditioned<DensityMatrix> post_select(const DensityMatrix& rho, const OperatorMatrix& projector);
Conditioned<StateVector> post_select(const StateVector& psi, const OperatorMatrix& projector);

// a_mode applied and renormalized; probability is the pre-normalization weight.
Conditioned<StateVector> apply_jump(const StateVector& psi, std::size_t mode);
Conditioned<DensityMatrix> apply_jump(const DensityMatrix& rho, std::size_t mode);

struct ConvergenceReport {
  ModeDims base;
  ModeDims extended;
  double max_population_difference = 0.0;
  double threshold = 1e-6;
  bool passed = false;
};

using HamiltonianFactory = std::function<OperatorMatrix(const ModeDims&)>;
using StateFactory = std::function<StateVector(const ModeDims&)>;

// Evolves at `dims` and at dims+2 per mode and compares every single-mode
// photon-number distribution on the shared levels.
ConvergenceReport truncation_convergence_check(const HamiltonianFactory& hamiltonian,
                                               const StateFactory& initial, const ModeDims& dims,
                                               double t, double threshold = 1e-6);

// Three-mode convenience: build_h_full and a Fock initial state.
ConvergenceReport truncation_convergence_check(const SystemParams& params,
                                               std::span<const int> occupations, double t,
                                               double threshold = 1e-6);

}  // namespace exfree
