#include "exfree/fock.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "exfree/errors.hpp"

namespace exfree {

namespace {

void check_same_dims(const ModeDims& a, const ModeDims& b, const char* what) {
  if (!(a == b)) throw InvalidDimension(std::string(what) + ": mode dimensions differ");
}

}  // namespace

ModeDims::ModeDims(std::initializer_list<int> levels) : ModeDims(std::vector<int>(levels)) {}

ModeDims::ModeDims(std::vector<int> levels) : levels_(std::move(levels)) {
  if (levels_.empty()) throw InvalidDimension("ModeDims: at least one mode required");
  strides_.assign(levels_.size(), 1);
  total_ = 1;
  for (std::size_t k = levels_.size(); k-- > 0;) {
    if (levels_[k] < 2) {
      throw InvalidDimension("ModeDims: mode " + std::to_string(k) + " has " +
                             std::to_string(levels_[k]) + " levels (need >= 2)");
    }
    strides_[k] = total_;
    total_ *= static_cast<std::size_t>(levels_[k]);
  }
}

std::size_t ModeDims::index(std::span<const int> occupations) const {
  if (occupations.size() != levels_.size()) {
    throw InvalidDimension("ModeDims::index: expected " + std::to_string(levels_.size()) +
                           " occupations, got " + std::to_string(occupations.size()));
  }
  std::size_t idx = 0;
  for (std::size_t k = 0; k < levels_.size(); ++k) {
    if (occupations[k] < 0 || occupations[k] >= levels_[k]) {
      throw OutOfTruncation("occupation " + std::to_string(occupations[k]) + " of mode " +
                            std::to_string(k) + " exceeds truncation " +
                            std::to_string(levels_[k]));
    }
    idx += strides_[k] * static_cast<std::size_t>(occupations[k]);
  }
  return idx;
}

std::size_t ModeDims::index(std::initializer_list<int> occupations) const {
  return index(std::span<const int>(occupations.begin(), occupations.size()));
}

std::vector<int> ModeDims::occupations(std::size_t index) const {
  std::vector<int> occ(levels_.size());
  for (std::size_t k = 0; k < levels_.size(); ++k) occ[k] = occupation(index, k);
  return occ;
}

int ModeDims::occupation(std::size_t index, std::size_t mode) const {
  return static_cast<int>((index / strides_[mode]) % static_cast<std::size_t>(levels_[mode]));
}

ModeDims ModeDims::padded(int extra) const {
  std::vector<int> lv = levels_;
  for (auto& n : lv) n += extra;
  return ModeDims(std::move(lv));
}

ModeDims default_dims() { return ModeDims{6, 5, 6}; }

StateVector::StateVector(ModeDims dims, Vector amplitudes)
    : dims_(std::move(dims)), amps_(std::move(amplitudes)) {
  if (static_cast<std::size_t>(amps_.size()) != dims_.total()) {
    throw InvalidDimension("StateVector: amplitude count does not match dimensions");
  }
}

StateVector StateVector::normalized() const {
  const double n = amps_.norm();
  if (n == 0.0) throw InvalidParameter("StateVector: cannot normalize the zero vector");
  return StateVector(dims_, amps_ / n);
}

DensityMatrix::DensityMatrix(ModeDims dims, Matrix elements)
    : dims_(std::move(dims)), rho_(std::move(elements)) {
  const auto d = static_cast<Eigen::Index>(dims_.total());
  if (rho_.rows() != d || rho_.cols() != d) {
    throw InvalidDimension("DensityMatrix: matrix size does not match dimensions");
  }
}

DensityMatrix::DensityMatrix(const StateVector& pure)
    : dims_(pure.dims()), rho_(pure.amplitudes() * pure.amplitudes().adjoint()) {}

bool DensityMatrix::is_valid(double tol, double tol_eig) const {
  if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
  if (std::abs(rho_.trace() - cplx(1.0)) > tol) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol_eig;
}

OperatorMatrix::OperatorMatrix(ModeDims dims, Matrix elements)
    : dims_(std::move(dims)), m_(std::move(elements)) {
  const auto d = static_cast<Eigen::Index>(dims_.total());
  if (m_.rows() != d || m_.cols() != d) {
    throw InvalidDimension("OperatorMatrix: matrix size does not match dimensions");
  }
}

OperatorMatrix OperatorMatrix::adjoint() const { return {dims_, m_.adjoint()}; }

bool OperatorMatrix::is_hermitian(double tol) const {
  return (m_ - m_.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

OperatorMatrix OperatorMatrix::operator+(const OperatorMatrix& rhs) const {
  check_same_dims(dims_, rhs.dims_, "operator+");
  return {dims_, m_ + rhs.m_};
}

OperatorMatrix OperatorMatrix::operator-(const OperatorMatrix& rhs) const {
  check_same_dims(dims_, rhs.dims_, "operator-");
  return {dims_, m_ - rhs.m_};
}

OperatorMatrix OperatorMatrix::operator*(const OperatorMatrix& rhs) const {
  check_same_dims(dims_, rhs.dims_, "operator*");
  return {dims_, m_ * rhs.m_};
}

OperatorMatrix OperatorMatrix::operator*(cplx scale) const { return {dims_, m_ * scale}; }

StateVector OperatorMatrix::operator*(const StateVector& psi) const {
  check_same_dims(dims_, psi.dims(), "operator*state");
  return {dims_, m_ * psi.amplitudes()};
}

OperatorMatrix operator*(cplx scale, const OperatorMatrix& op) { return op * scale; }

OperatorMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b) {
  return a * b - b * a;
}

OperatorMatrix annihilation_op(int n_levels) {
  if (n_levels < 2) {
    throw InvalidDimension("annihilation_op: need at least 2 levels, got " +
                           std::to_string(n_levels));
  }
  Matrix a = Matrix::Zero(n_levels, n_levels);
  for (int n = 1; n < n_levels; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return {ModeDims{n_levels}, std::move(a)};
}

OperatorMatrix creation_op(int n_levels) { return annihilation_op(n_levels).adjoint(); }

OperatorMatrix number_op(int n_levels) {
  if (n_levels < 2) throw InvalidDimension("number_op: need at least 2 levels");
  Matrix n = Matrix::Zero(n_levels, n_levels);
  for (int k = 0; k < n_levels; ++k) n(k, k) = k;
  return {ModeDims{n_levels}, std::move(n)};
}

OperatorMatrix identity_op(const ModeDims& dims) {
  const auto d = static_cast<Eigen::Index>(dims.total());
  return {dims, Matrix::Identity(d, d)};
}

SparseMatrix sparse_embed(const Matrix& single_mode, std::size_t mode, const ModeDims& dims) {
  if (mode >= dims.modes()) {
    throw InvalidDimension("embed_op: mode index " + std::to_string(mode) + " out of range");
  }
  if (single_mode.rows() != dims[mode] || single_mode.cols() != dims[mode]) {
    throw InvalidDimension("embed_op: operator dimension does not match mode " +
                           std::to_string(mode));
  }
  // kron(I_left, op, I_right) written out directly: entries only connect
  // basis states that agree on every other mode.
  const std::size_t d = dims.total();
  const std::size_t stride = dims.stride(mode);
  const int n = dims[mode];
  std::vector<Eigen::Triplet<cplx>> entries;
  for (std::size_t col = 0; col < d; ++col) {
    const int c = dims.occupation(col, mode);
    const std::size_t base = col - stride * static_cast<std::size_t>(c);
    for (int r = 0; r < n; ++r) {
      const cplx v = single_mode(r, c);
      if (v != cplx(0.0)) {
        entries.emplace_back(static_cast<int>(base + stride * static_cast<std::size_t>(r)),
                             static_cast<int>(col), v);
      }
    }
  }
  SparseMatrix out(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

SparseMatrix sparse_mode_annihilation(const ModeDims& dims, std::size_t mode) {
  if (mode >= dims.modes()) throw InvalidDimension("mode index out of range");
  return sparse_embed(annihilation_op(dims[mode]).elements(), mode, dims);
}

OperatorMatrix embed_op(const OperatorMatrix& op, std::size_t mode, const ModeDims& dims) {
  if (op.dims().modes() != 1) throw InvalidDimension("embed_op: expected a single-mode operator");
  return {dims, Matrix(sparse_embed(op.elements(), mode, dims))};
}

OperatorMatrix mode_annihilation(const ModeDims& dims, std::size_t mode) {
  return embed_op(annihilation_op(dims[mode]), mode, dims);
}

OperatorMatrix mode_creation(const ModeDims& dims, std::size_t mode) {
  return embed_op(creation_op(dims[mode]), mode, dims);
}

OperatorMatrix mode_number(const ModeDims& dims, std::size_t mode) {
  return embed_op(number_op(dims[mode]), mode, dims);
}

OperatorMatrix vacuum_projector(const ModeDims& dims, std::size_t mode) {
  const int n = dims[mode];
  Matrix p = Matrix::Zero(n, n);
  p(0, 0) = 1.0;
  return embed_op(OperatorMatrix(ModeDims{n}, std::move(p)), mode, dims);
}

OperatorMatrix parity_projector(const ModeDims& dims, std::size_t mode, bool even) {
  const int n = dims[mode];
  Matrix p = Matrix::Zero(n, n);
  for (int k = 0; k < n; ++k) p(k, k) = ((k % 2 == 0) == even) ? 1.0 : 0.0;
  return embed_op(OperatorMatrix(ModeDims{n}, std::move(p)), mode, dims);
}

StateVector fock_state(const ModeDims& dims, std::span<const int> occupations) {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(dims.total()));
  v[static_cast<Eigen::Index>(dims.index(occupations))] = 1.0;
  return {dims, std::move(v)};
}

StateVector fock_state(const ModeDims& dims, std::initializer_list<int> occupations) {
  return fock_state(dims, std::span<const int>(occupations.begin(), occupations.size()));
}

BinomialLabel parse_binomial_label(std::string_view text) {
  if (text == "0L") return BinomialLabel::ZeroL;
  if (text == "1L") return BinomialLabel::OneL;
  if (text == "+iL") return BinomialLabel::PlusIL;
  if (text == "0E") return BinomialLabel::ZeroE;
  if (text == "+iE") return BinomialLabel::PlusIE;
  throw InvalidParameter("unknown binomial label '" + std::string(text) + "'");
}

std::string_view to_string(BinomialLabel label) {
  switch (label) {
    case BinomialLabel::ZeroL: return "0L";
    case BinomialLabel::OneL: return "1L";
    case BinomialLabel::PlusIL: return "+iL";
    case BinomialLabel::ZeroE: return "0E";
    case BinomialLabel::PlusIE: return "+iE";
  }
  return "?";
}

StateVector binomial_code_state(BinomialLabel label, int n_levels) {
  if (n_levels < 5) {
    throw InvalidDimension("binomial_code_state: need at least 5 levels, got " +
                           std::to_string(n_levels));
  }
  const double h = std::numbers::sqrt2 / 2.0;
  const cplx i(0.0, 1.0);
  Vector v = Vector::Zero(n_levels);
  switch (label) {
    case BinomialLabel::ZeroL:
      v[0] = h;
      v[4] = h;
      break;
    case BinomialLabel::OneL:
      v[2] = 1.0;
      break;
    case BinomialLabel::PlusIL:
      v[0] = 0.5;
      v[4] = 0.5;
      v[2] = i * h;
      break;
    case BinomialLabel::ZeroE:
      v[3] = 1.0;
      break;
    case BinomialLabel::PlusIE:
      v[1] = h;
      v[3] = i * h;
      break;
  }
  return StateVector(ModeDims{n_levels}, v).normalized();
}

StateVector product_state(const ModeDims& dims, std::span<const StateVector> per_mode) {
  if (per_mode.size() != dims.modes()) {
    throw InvalidDimension("product_state: one single-mode state per mode required");
  }
  Vector v = Vector::Ones(1);
  for (std::size_t k = 0; k < dims.modes(); ++k) {
    const auto& s = per_mode[k];
    if (s.dims().modes() != 1 || s.dims()[0] != dims[k]) {
      throw InvalidDimension("product_state: state for mode " + std::to_string(k) +
                             " has the wrong truncation");
    }
    Vector next(v.size() * s.amplitudes().size());
    for (Eigen::Index a = 0; a < v.size(); ++a) {
      next.segment(a * s.amplitudes().size(), s.amplitudes().size()) = v[a] * s.amplitudes();
    }
    v = std::move(next);
  }
  return {dims, std::move(v)};
}

namespace {

// For every basis index: its index in the kept-mode space and in the traced-out space.
struct SplitIndex {
  ModeDims reduced;
  std::size_t env_total = 1;
  std::vector<std::size_t> reduced_index;
  std::vector<std::size_t> env_index;
};

SplitIndex split_indices(const ModeDims& dims, std::span<const std::size_t> keep) {
  std::vector<int> kept_levels;
  std::vector<bool> is_kept(dims.modes(), false);
  for (auto m : keep) {
    if (m >= dims.modes()) throw InvalidDimension("partial_trace: mode index out of range");
    if (is_kept[m]) throw InvalidDimension("partial_trace: mode listed twice");
    is_kept[m] = true;
    kept_levels.push_back(dims[m]);
  }
  SplitIndex out;
  out.reduced = ModeDims(std::move(kept_levels));
  const std::size_t d = dims.total();
  out.reduced_index.resize(d);
  out.env_index.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    std::size_t r = 0;
    for (std::size_t k = 0; k < keep.size(); ++k) {
      r += out.reduced.stride(k) * static_cast<std::size_t>(dims.occupation(i, keep[k]));
    }
    std::size_t e = 0;
    std::size_t mult = 1;
    for (std::size_t m = dims.modes(); m-- > 0;) {
      if (is_kept[m]) continue;
      e += mult * static_cast<std::size_t>(dims.occupation(i, m));
      mult *= static_cast<std::size_t>(dims[m]);
    }
    out.reduced_index[i] = r;
    out.env_index[i] = e;
    out.env_total = mult;
  }
  return out;
}

}  // namespace

Matrix partial_trace(const Matrix& op, const ModeDims& dims, std::span<const std::size_t> keep) {
  if (keep.empty()) {
    Matrix out(1, 1);
    out(0, 0) = op.trace();
    return out;
  }
  const SplitIndex split = split_indices(dims, keep);
  const std::size_t d = dims.total();
  const auto rd = static_cast<Eigen::Index>(split.reduced.total());
  Matrix out = Matrix::Zero(rd, rd);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (split.env_index[i] != split.env_index[j]) continue;
      out(static_cast<Eigen::Index>(split.reduced_index[i]),
          static_cast<Eigen::Index>(split.reduced_index[j])) +=
          op(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return out;
}

DensityMatrix partial_trace(const StateVector& psi, std::span<const std::size_t> keep) {
  if (keep.empty()) throw InvalidDimension("partial_trace: keep at least one mode");
  const SplitIndex split = split_indices(psi.dims(), keep);
  Matrix amps = Matrix::Zero(static_cast<Eigen::Index>(split.reduced.total()),
                             static_cast<Eigen::Index>(split.env_total));
  for (std::size_t i = 0; i < psi.dims().total(); ++i) {
    amps(static_cast<Eigen::Index>(split.reduced_index[i]), static_cast<Eigen::Index>(split.env_index[i])) =
        psi[i];
  }
  return {split.reduced, amps * amps.adjoint()};
}

DensityMatrix partial_trace(const StateVector& psi, std::initializer_list<std::size_t> keep) {
  return partial_trace(psi, std::span<const std::size_t>(keep.begin(), keep.size()));
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> keep) {
  std::vector<int> kept_levels;
  for (auto m : keep) kept_levels.push_back(rho.dims()[m]);
  return {ModeDims(kept_levels), partial_trace(rho.elements(), rho.dims(), keep)};
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::initializer_list<std::size_t> keep) {
  return partial_trace(rho, std::span<const std::size_t>(keep.begin(), keep.size()));
}

std::vector<double> mode_distribution(const StateVector& psi, std::size_t mode) {
  const auto& dims = psi.dims();
  std::vector<double> p(static_cast<std::size_t>(dims[mode]), 0.0);
  for (std::size_t i = 0; i < dims.total(); ++i) {
    p[static_cast<std::size_t>(dims.occupation(i, mode))] += std::norm(psi[i]);
  }
  return p;
}

std::vector<double> mode_distribution(const DensityMatrix& rho, std::size_t mode) {
  const auto& dims = rho.dims();
  std::vector<double> p(static_cast<std::size_t>(dims[mode]), 0.0);
  for (std::size_t i = 0; i < dims.total(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    p[static_cast<std::size_t>(dims.occupation(i, mode))] += rho.elements()(ii, ii).real();
  }
  return p;
}

namespace {

std::vector<double> means_from(const ModeDims& dims, auto&& distribution) {
  std::vector<double> out(dims.modes(), 0.0);
  for (std::size_t m = 0; m < dims.modes(); ++m) {
    const auto p = distribution(m);
    for (std::size_t n = 0; n < p.size(); ++n) out[m] += static_cast<double>(n) * p[n];
  }
  return out;
}

bool matches(const ModeDims& dims, std::size_t index, std::span<const std::size_t> modes,
             std::span<const int> occupations) {
  for (std::size_t k = 0; k < modes.size(); ++k) {
    if (dims.occupation(index, modes[k]) != occupations[k]) return false;
  }
  return true;
}

}  // namespace

std::vector<double> mean_photon_numbers(const StateVector& psi) {
  return means_from(psi.dims(), [&](std::size_t m) { return mode_distribution(psi, m); });
}

std::vector<double> mean_photon_numbers(const DensityMatrix& rho) {
  return means_from(rho.dims(), [&](std::size_t m) { return mode_distribution(rho, m); });
}

double joint_population(const StateVector& psi, std::span<const std::size_t> modes,
                        std::span<const int> occupations) {
  if (modes.size() != occupations.size()) throw InvalidDimension("joint_population: size mismatch");
  double p = 0.0;
  for (std::size_t i = 0; i < psi.dims().total(); ++i) {
    if (matches(psi.dims(), i, modes, occupations)) p += std::norm(psi[i]);
  }
  return p;
}

double joint_population(const DensityMatrix& rho, std::span<const std::size_t> modes,
                        std::span<const int> occupations) {
  if (modes.size() != occupations.size()) throw InvalidDimension("joint_population: size mismatch");
  double p = 0.0;
  for (std::size_t i = 0; i < rho.dims().total(); ++i) {
    if (matches(rho.dims(), i, modes, occupations)) {
      const auto ii = static_cast<Eigen::Index>(i);
      p += rho.elements()(ii, ii).real();
    }
  }
  return p;
}

}  // namespace exfree
