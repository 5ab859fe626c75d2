#include "exfree/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>
#include <boost/numeric/odeint.hpp>

#include "exfree/errors.hpp"

namespace exfree {

namespace {

SparseMatrix to_sparse(const Matrix& m) {
  return m.sparseView(cplx(1.0), 1e-300);
}

Matrix hermitian_expm(const Matrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const Vector phases =
      (es.eigenvalues().cast<cplx>() * cplx(0.0, -t)).array().exp().matrix();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

// Applies a gate acting on modes (first, second), with the gate's own basis
// ordered (first, second) and `second` fastest.
void apply_two_mode_gate(Vector& psi, const ModeDims& dims, std::size_t first, std::size_t second,
                         const Matrix& gate) {
  const int na = dims[first];
  const int nb = dims[second];
  const std::size_t sa = dims.stride(first);
  const std::size_t sb = dims.stride(second);
  const auto block = static_cast<Eigen::Index>(na * nb);
  Vector local(block);
  for (std::size_t base = 0; base < dims.total(); ++base) {
    if (dims.occupation(base, first) != 0 || dims.occupation(base, second) != 0) continue;
    for (int a = 0; a < na; ++a) {
      for (int b = 0; b < nb; ++b) {
        local[a * nb + b] = psi[static_cast<Eigen::Index>(base + sa * static_cast<std::size_t>(a) +
                                                          sb * static_cast<std::size_t>(b))];
      }
    }
    const Vector out = gate * local;
    for (int a = 0; a < na; ++a) {
      for (int b = 0; b < nb; ++b) {
        psi[static_cast<Eigen::Index>(base + sa * static_cast<std::size_t>(a) +
                                      sb * static_cast<std::size_t>(b))] = out[a * nb + b];
      }
    }
  }
}

void check_hermitian(const OperatorMatrix& h, const char* what) {
  const Matrix& m = h.elements();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvalidOperator(std::string(what) + ": Hamiltonian is not Hermitian");
  }
}

void check_hermitian(const SparseMatrix& h, const char* what) {
  double scale = 1.0;
  for (Eigen::Index k = 0; k < h.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(h, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  }
  const SparseMatrix diff = h - SparseMatrix(h.adjoint());
  for (Eigen::Index k = 0; k < diff.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) {
      if (std::abs(it.value()) > 1e-10 * scale) {
        throw InvalidOperator(std::string(what) + ": Hamiltonian is not Hermitian");
      }
    }
  }
}

void check_projector(const OperatorMatrix& p) {
  const Matrix& m = p.elements();
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-10) {
    throw InvalidOperator("post_select: projector is not Hermitian");
  }
  if ((m * m - m).cwiseAbs().maxCoeff() > 1e-10) {
    throw InvalidOperator("post_select: operator is not idempotent");
  }
}

// Vectorized Lindblad generator. The ODE state is the column-major matrix
// stored as interleaved doubles so odeint's range algebra applies.
class LindbladRhs {
 public:
  LindbladRhs(const OperatorMatrix& h, std::span<const OperatorMatrix> collapse_ops)
      : dim_(static_cast<Eigen::Index>(h.dims().total())) {
    Matrix heff = h.elements();
    for (const auto& l : collapse_ops) {
      if (!(l.dims() == h.dims())) throw InvalidDimension("collapse operator dimension mismatch");
      heff -= cplx(0.0, 0.5) * (l.elements().adjoint() * l.elements());
      jumps_.push_back(to_sparse(l.elements()));
      jumps_adj_.push_back(to_sparse(l.elements().adjoint()));
    }
    heff_ = to_sparse(heff);
    heff_adj_ = to_sparse(heff.adjoint());
  }

  void operator()(const std::vector<double>& x, std::vector<double>& dxdt, double /*t*/) const {
    Eigen::Map<const Matrix> rho(reinterpret_cast<const cplx*>(x.data()), dim_, dim_);
    Eigen::Map<Matrix> out(reinterpret_cast<cplx*>(dxdt.data()), dim_, dim_);
    const cplx minus_i(0.0, -1.0);
    out.noalias() = minus_i * (heff_ * rho);
    out.noalias() -= minus_i * (rho * heff_adj_);
    for (std::size_t k = 0; k < jumps_.size(); ++k) {
      scratch_.noalias() = jumps_[k] * rho;
      out.noalias() += scratch_ * jumps_adj_[k];
    }
  }

 private:
  Eigen::Index dim_;
  SparseMatrix heff_;
  SparseMatrix heff_adj_;
  std::vector<SparseMatrix> jumps_;
  std::vector<SparseMatrix> jumps_adj_;
  mutable Matrix scratch_;
};

std::vector<Matrix> integrate_lindblad(const OperatorMatrix& h,
                                       std::span<const OperatorMatrix> collapse_ops,
                                       const Matrix& x0, const EvolutionSpec& spec) {
  namespace odeint = boost::numeric::odeint;
  spec.validate();
  check_hermitian(h, "evolve_lindblad");
  const auto dim = static_cast<Eigen::Index>(h.dims().total());
  if (x0.rows() != dim || x0.cols() != dim) {
    throw InvalidDimension("evolve_lindblad: initial operator has the wrong size");
  }

  LindbladRhs rhs(h, collapse_ops);
  std::vector<double> state(static_cast<std::size_t>(2 * dim * dim));
  Eigen::Map<Matrix>(reinterpret_cast<cplx*>(state.data()), dim, dim) = x0;

  std::vector<Matrix> out;
  out.reserve(spec.sample_times.size());
  auto observer = [&](const std::vector<double>& x, double) {
    out.emplace_back(Eigen::Map<const Matrix>(reinterpret_cast<const cplx*>(x.data()), dim, dim));
  };

  std::vector<double> times = spec.sample_times;
  if (times.empty()) return out;
  // integrate_times starts at times.front(); evolve up to it first.
  if (times.front() > 0.0) times.insert(times.begin(), 0.0);
  const bool dropped_origin = times.size() != spec.sample_times.size();

  using State = std::vector<double>;
  auto stepper = odeint::make_dense_output(spec.atol, spec.rtol, odeint::runge_kutta_dopri5<State>());
  const double span = std::max(times.back() - times.front(), 1e-12);
  try {
    odeint::integrate_times(stepper, std::ref(rhs), state, times.begin(), times.end(),
                            std::min(1e-3, span), observer,
                            odeint::max_step_checker(spec.max_steps));
  } catch (const std::exception& e) {
    throw NonConvergence(std::string("Lindblad integration failed: ") + e.what());
  }
  if (dropped_origin) out.erase(out.begin());
  if (out.size() != spec.sample_times.size()) {
    throw NonConvergence("Lindblad integration stopped before the last sample time");
  }
  for (const auto& m : out) {
    if (!m.allFinite()) throw NonConvergence("Lindblad integration produced non-finite values");
  }
  return out;
}

}  // namespace

Method parse_method(std::string_view text) {
  if (text == "exact" || text == "exact-unitary") return Method::ExactUnitary;
  if (text == "trotter") return Method::Trotter;
  if (text == "lindblad") return Method::Lindblad;
  throw InvalidParameter("unknown method '" + std::string(text) + "' (exact|trotter|lindblad)");
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::ExactUnitary: return "exact";
    case Method::Trotter: return "trotter";
    case Method::Lindblad: return "lindblad";
  }
  return "?";
}

void EvolutionSpec::validate() const {
  if (!(total_time >= 0.0)) throw InvalidParameter("total_time must be >= 0");
  if (method == Method::Trotter && !(trotter_dt > 0.0)) {
    throw InvalidParameter("trotter_dt must be positive for the trotter method");
  }
  if (method == Method::Lindblad && !(rtol > 0.0)) throw InvalidParameter("rtol must be positive");
  if (!std::is_sorted(sample_times.begin(), sample_times.end())) {
    throw InvalidParameter("sample_times must be sorted");
  }
  if (!sample_times.empty() &&
      (sample_times.front() < 0.0 || sample_times.back() > total_time * (1.0 + 1e-12) + 1e-12)) {
    throw InvalidParameter("sample_times must lie within [0, total_time]");
  }
}

EvolutionSpec EvolutionSpec::uniform(double total_time, std::size_t samples, Method method) {
  EvolutionSpec spec;
  spec.total_time = total_time;
  spec.method = method;
  spec.sample_times.resize(std::max<std::size_t>(samples, 2));
  const std::size_t n = spec.sample_times.size();
  for (std::size_t k = 0; k < n; ++k) {
    spec.sample_times[k] = total_time * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  return spec;
}

UnitaryPropagator::UnitaryPropagator(const OperatorMatrix& hamiltonian, const StateVector& psi)
    : UnitaryPropagator(
          (hamiltonian.dims() == psi.dims()
               ? to_sparse(hamiltonian.elements())
               : throw InvalidDimension("evolve_unitary: dimension mismatch")),
          psi) {}

UnitaryPropagator::UnitaryPropagator(const SparseMatrix& hamiltonian, const StateVector& psi)
    : dims_(psi.dims()) {
  const auto d = static_cast<Eigen::Index>(dims_.total());
  if (hamiltonian.rows() != d || hamiltonian.cols() != d) {
    throw InvalidDimension("evolve_unitary: dimension mismatch");
  }
  check_hermitian(hamiltonian, "evolve_unitary");
  SparseMatrix h = hamiltonian;
  h.makeCompressed();

  // Breadth-first closure of the support of psi under the nonzero pattern of H.
  std::vector<char> seen(dims_.total(), 0);
  std::deque<Eigen::Index> queue;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (psi.amplitudes()[i] != cplx(0.0)) {
      seen[static_cast<std::size_t>(i)] = 1;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const Eigen::Index col = queue.front();
    queue.pop_front();
    for (SparseMatrix::InnerIterator it(h, col); it; ++it) {
      if (it.value() != cplx(0.0) && !seen[static_cast<std::size_t>(it.row())]) {
        seen[static_cast<std::size_t>(it.row())] = 1;
        queue.push_back(it.row());
      }
    }
  }
  std::vector<Eigen::Index> local_index(dims_.total(), -1);
  for (std::size_t i = 0; i < dims_.total(); ++i) {
    if (seen[i]) {
      local_index[i] = static_cast<Eigen::Index>(support_.size());
      support_.push_back(i);
    }
  }

  const auto k = static_cast<Eigen::Index>(support_.size());
  Matrix sub = Matrix::Zero(k, k);
  Vector local(k);
  for (Eigen::Index b = 0; b < k; ++b) {
    const auto col = static_cast<Eigen::Index>(support_[static_cast<std::size_t>(b)]);
    local[b] = psi.amplitudes()[col];
    for (SparseMatrix::InnerIterator it(h, col); it; ++it) {
      sub(local_index[static_cast<std::size_t>(it.row())], b) = it.value();
    }
  }
  if (k > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(sub);
    energies_ = es.eigenvalues();
    vectors_ = es.eigenvectors();
    coeffs_ = vectors_.adjoint() * local;
  }
}

StateVector UnitaryPropagator::at(double t) const {
  Vector full = Vector::Zero(static_cast<Eigen::Index>(dims_.total()));
  if (support_.empty()) return {dims_, std::move(full)};
  const Vector rotated =
      ((energies_.cast<cplx>() * cplx(0.0, -t)).array().exp() * coeffs_.array()).matrix();
  const Vector local = vectors_ * rotated;
  for (std::size_t a = 0; a < support_.size(); ++a) {
    full[static_cast<Eigen::Index>(support_[a])] = local[static_cast<Eigen::Index>(a)];
  }
  return {dims_, std::move(full)};
}

StateVector evolve_unitary(const OperatorMatrix& hamiltonian, const StateVector& psi, double t) {
  return UnitaryPropagator(hamiltonian, psi).at(t);
}

StateVector evolve_unitary(const SparseMatrix& hamiltonian, const StateVector& psi, double t) {
  return UnitaryPropagator(hamiltonian, psi).at(t);
}

TrotterStepper::TrotterStepper(const SystemParams& params, double dt, TrotterOrder order)
    : dims_(params.dims), dt_(dt), order_(order) {
  if (!(dt > 0.0)) throw InvalidParameter("Trotter step dt must be positive");
  if (dims_.modes() != 3) throw InvalidDimension("Trotter stepper expects three modes");
  gate_s1s2_ = hermitian_expm(
      build_h_tms_two_mode(params.g1, ModeDims{dims_[kS1], dims_[kS2]}).elements(), dt);
  gate_s3s2_ = hermitian_expm(
      build_h_tms_two_mode(params.g2, ModeDims{dims_[kS3], dims_[kS2]}).elements(), dt);
  detune_phase_.resize(static_cast<Eigen::Index>(dims_.total()));
  for (std::size_t i = 0; i < dims_.total(); ++i) {
    detune_phase_[static_cast<Eigen::Index>(i)] =
        std::exp(cplx(0.0, -params.delta * dt * dims_.occupation(i, kS2)));
  }
}

void TrotterStepper::step(Vector& amplitudes) const {
  if (order_ == TrotterOrder::Printed) {
    amplitudes = (detune_phase_.array() * amplitudes.array()).matrix();
    apply_two_mode_gate(amplitudes, dims_, kS3, kS2, gate_s3s2_);
    apply_two_mode_gate(amplitudes, dims_, kS1, kS2, gate_s1s2_);
  } else {
    apply_two_mode_gate(amplitudes, dims_, kS1, kS2, gate_s1s2_);
    apply_two_mode_gate(amplitudes, dims_, kS3, kS2, gate_s3s2_);
    amplitudes = (detune_phase_.array() * amplitudes.array()).matrix();
  }
}

StateVector evolve_trotter(const SystemParams& params, const StateVector& psi, double t, double dt,
                           TrotterOrder order) {
  if (!(dt > 0.0)) throw InvalidParameter("Trotter step dt must be positive");
  if (!(t >= 0.0)) throw InvalidParameter("evolution time must be >= 0");
  if (!(psi.dims() == params.dims)) throw InvalidDimension("evolve_trotter: dimension mismatch");
  if (t == 0.0) return psi;
  const auto steps = static_cast<long>(std::max(1.0, std::ceil(t / dt - 1e-9)));
  TrotterStepper stepper(params, t / static_cast<double>(steps), order);
  Vector amps = psi.amplitudes();
  for (long s = 0; s < steps; ++s) stepper.step(amps);
  return {psi.dims(), std::move(amps)};
}

std::vector<DensityMatrix> evolve_lindblad(const OperatorMatrix& hamiltonian,
                                           std::span<const OperatorMatrix> collapse_ops,
                                           const DensityMatrix& rho, const EvolutionSpec& spec) {
  if (!rho.is_valid(1e-9, 1e-8)) throw InvalidParameter("evolve_lindblad: initial rho is not a valid state");
  auto raw = integrate_lindblad(hamiltonian, collapse_ops, rho.elements(), spec);
  std::vector<DensityMatrix> out;
  out.reserve(raw.size());
  for (auto& m : raw) {
    // Remove the antihermitian integration residue.
    Matrix herm = 0.5 * (m + m.adjoint());
    out.emplace_back(rho.dims(), std::move(herm));
  }
  return out;
}

std::vector<Matrix> evolve_lindblad_operator(const OperatorMatrix& hamiltonian,
                                             std::span<const OperatorMatrix> collapse_ops,
                                             const Matrix& x, const EvolutionSpec& spec) {
  return integrate_lindblad(hamiltonian, collapse_ops, x, spec);
}

Conditioned<DensityMatrix> post_select(const DensityMatrix& rho, const OperatorMatrix& projector) {
  if (!(rho.dims() == projector.dims())) throw InvalidDimension("post_select: dimension mismatch");
  check_projector(projector);
  const Matrix& p = projector.elements();
  Matrix kept = p * rho.elements() * p;
  Conditioned<DensityMatrix> out;
  out.probability = std::max(0.0, kept.trace().real());
  if (out.probability > kImpossibleOutcome) {
    out.state.emplace(rho.dims(), kept / out.probability);
  }
  return out;
}

Conditioned<StateVector> post_select(const StateVector& psi, const OperatorMatrix& projector) {
  if (!(psi.dims() == projector.dims())) throw InvalidDimension("post_select: dimension mismatch");
  check_projector(projector);
  Vector kept = projector.elements() * psi.amplitudes();
  Conditioned<StateVector> out;
  out.probability = kept.squaredNorm();
  if (out.probability > kImpossibleOutcome) {
    out.state.emplace(psi.dims(), kept / std::sqrt(out.probability));
  }
  return out;
}

Conditioned<StateVector> apply_jump(const StateVector& psi, std::size_t mode) {
  const auto a = mode_annihilation(psi.dims(), mode);
  Vector jumped = a.elements() * psi.amplitudes();
  Conditioned<StateVector> out;
  out.probability = jumped.squaredNorm();
  if (out.probability > kImpossibleOutcome) {
    out.state.emplace(psi.dims(), jumped / std::sqrt(out.probability));
  }
  return out;
}

Conditioned<DensityMatrix> apply_jump(const DensityMatrix& rho, std::size_t mode) {
  const auto a = mode_annihilation(rho.dims(), mode);
  Matrix jumped = a.elements() * rho.elements() * a.elements().adjoint();
  Conditioned<DensityMatrix> out;
  out.probability = std::max(0.0, jumped.trace().real());
  if (out.probability > kImpossibleOutcome) {
    out.state.emplace(rho.dims(), jumped / out.probability);
  }
  return out;
}

namespace {

ConvergenceReport compare_truncations(const StateVector& small, const StateVector& large,
                                      double threshold) {
  ConvergenceReport report;
  report.base = small.dims();
  report.extended = large.dims();
  report.threshold = threshold;
  double worst = 0.0;
  for (std::size_t m = 0; m < small.dims().modes(); ++m) {
    const auto ps = mode_distribution(small, m);
    const auto pl = mode_distribution(large, m);
    for (std::size_t n = 0; n < ps.size(); ++n) worst = std::max(worst, std::abs(ps[n] - pl[n]));
  }
  report.max_population_difference = worst;
  report.passed = worst < threshold;
  return report;
}

}  // namespace

ConvergenceReport truncation_convergence_check(const HamiltonianFactory& hamiltonian,
                                               const StateFactory& initial, const ModeDims& dims,
                                               double t, double threshold) {
  const ModeDims big = dims.padded(2);
  return compare_truncations(evolve_unitary(hamiltonian(dims), initial(dims), t),
                             evolve_unitary(hamiltonian(big), initial(big), t), threshold);
}

ConvergenceReport truncation_convergence_check(const SystemParams& params,
                                               std::span<const int> occupations, double t,
                                               double threshold) {
  SystemParams big = params;
  big.dims = params.dims.padded(2);
  return compare_truncations(
      evolve_unitary(sparse_h_full(params), fock_state(params.dims, occupations), t),
      evolve_unitary(sparse_h_full(big), fock_state(big.dims, occupations), t), threshold);
}

}  // namespace exfree
