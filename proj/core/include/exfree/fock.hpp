#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace exfree {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using SparseMatrix = Eigen::SparseMatrix<cplx>;

// Per-mode truncation sizes. Mode order is (S1, S2, S3); flattening is
// row-major with the last mode fastest.
class ModeDims {
 public:
  ModeDims() = default;
  ModeDims(std::initializer_list<int> levels);
  explicit ModeDims(std::vector<int> levels);

  std::size_t modes() const { return levels_.size(); }
  int operator[](std::size_t mode) const { return levels_.at(mode); }
  const std::vector<int>& levels() const { return levels_; }
  std::size_t total() const { return total_; }
  std::size_t stride(std::size_t mode) const { return strides_.at(mode); }

  std::size_t index(std::span<const int> occupations) const;
  std::size_t index(std::initializer_list<int> occupations) const;
  std::vector<int> occupations(std::size_t index) const;
  int occupation(std::size_t index, std::size_t mode) const;

  // Same number of modes, every level count raised by `extra`.
  ModeDims padded(int extra) const;

  bool operator==(const ModeDims& other) const { return levels_ == other.levels_; }

 private:
  std::vector<int> levels_;
  std::vector<std::size_t> strides_;
  std::size_t total_ = 1;
};

// The three-mode truncation used unless a caller asks otherwise.
ModeDims default_dims();

class StateVector {
 public:
  StateVector(ModeDims dims, Vector amplitudes);

  const ModeDims& dims() const { return dims_; }
  const Vector& amplitudes() const { return amps_; }
  cplx operator[](std::size_t i) const { return amps_[static_cast<Eigen::Index>(i)]; }
  double norm() const { return amps_.norm(); }
  StateVector normalized() const;

 private:
  ModeDims dims_;
  Vector amps_;
};

class DensityMatrix {
 public:
  DensityMatrix(ModeDims dims, Matrix elements);
  explicit DensityMatrix(const StateVector& pure);

  const ModeDims& dims() const { return dims_; }
  const Matrix& elements() const { return rho_; }
  cplx trace() const { return rho_.trace(); }

  // Hermitian, unit trace, smallest eigenvalue >= -tol_eig.
  bool is_valid(double tol = 1e-9, double tol_eig = 1e-8) const;

 private:
  ModeDims dims_;
  Matrix rho_;
};

class OperatorMatrix {
 public:
  OperatorMatrix(ModeDims dims, Matrix elements);

  const ModeDims& dims() const { return dims_; }
  const Matrix& elements() const { return m_; }

  OperatorMatrix adjoint() const;
  bool is_hermitian(double tol = 1e-12) const;

  OperatorMatrix operator+(const OperatorMatrix& rhs) const;
  OperatorMatrix operator-(const OperatorMatrix& rhs) const;
  OperatorMatrix operator*(const OperatorMatrix& rhs) const;
  OperatorMatrix operator*(cplx scale) const;
  StateVector operator*(const StateVector& psi) const;

 private:
  ModeDims dims_;
  Matrix m_;
};

OperatorMatrix operator*(cplx scale, const OperatorMatrix& op);
OperatorMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b);

// Single-mode lowering operator with <n-1|a|n> = sqrt(n).
OperatorMatrix annihilation_op(int n_levels);
OperatorMatrix creation_op(int n_levels);
OperatorMatrix number_op(int n_levels);
OperatorMatrix identity_op(const ModeDims& dims);

// Kronecker embedding of a single-mode operator into the full space.
OperatorMatrix embed_op(const OperatorMatrix& op, std::size_t mode, const ModeDims& dims);

// Sparse Kronecker embedding; the dense builders are thin wrappers over it.
SparseMatrix sparse_embed(const Matrix& single_mode, std::size_t mode, const ModeDims& dims);
SparseMatrix sparse_mode_annihilation(const ModeDims& dims, std::size_t mode);

// Convenience: a_j, a_j^dagger and n_j already embedded.
OperatorMatrix mode_annihilation(const ModeDims& dims, std::size_t mode);
OperatorMatrix mode_creation(const ModeDims& dims, std::size_t mode);
OperatorMatrix mode_number(const ModeDims& dims, std::size_t mode);

// |0><0| on `mode`, identity elsewhere.
OperatorMatrix vacuum_projector(const ModeDims& dims, std::size_t mode);
// Projector onto even (or odd) photon number of `mode`.
OperatorMatrix parity_projector(const ModeDims& dims, std::size_t mode, bool even);

StateVector fock_state(const ModeDims& dims, std::span<const int> occupations);
StateVector fock_state(const ModeDims& dims, std::initializer_list<int> occupations);

enum class BinomialLabel { ZeroL, OneL, PlusIL, ZeroE, PlusIE };

BinomialLabel parse_binomial_label(std::string_view text);
std::string_view to_string(BinomialLabel label);

// Single-mode binomial code words: 0L = (|0>+|4>)/sqrt2, 1L = |2>,
// +iL = (0L + i 1L)/sqrt2, 0E = |3>, +iE = (|1> + i|3>)/sqrt2.
StateVector binomial_code_state(BinomialLabel label, int n_levels);

// Place a single-mode state into `mode` with the other modes in vacuum.
StateVector product_state(const ModeDims& dims, std::span<const StateVector> per_mode);

// Trace out every mode not listed in `keep` (order of `keep` is preserved).
DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> keep);
DensityMatrix partial_trace(const DensityMatrix& rho, std::initializer_list<std::size_t> keep);
DensityMatrix partial_trace(const StateVector& psi, std::span<const std::size_t> keep);
DensityMatrix partial_trace(const StateVector& psi, std::initializer_list<std::size_t> keep);
// General operator version; used for channels acting on non-Hermitian inputs.
Matrix partial_trace(const Matrix& op, const ModeDims& dims, std::span<const std::size_t> keep);

// Mean photon number of each mode.
std::vector<double> mean_photon_numbers(const StateVector& psi);
std::vector<double> mean_photon_numbers(const DensityMatrix& rho);

// Photon-number distribution of one mode (length dims[mode]).
std::vector<double> mode_distribution(const StateVector& psi, std::size_t mode);
std::vector<double> mode_distribution(const DensityMatrix& rho, std::size_t mode);

// Probability of a joint occupation of the listed modes, summed over the rest.
double joint_population(const StateVector& psi, std::span<const std::size_t> modes,
                        std::span<const int> occupations);
double joint_population(const DensityMatrix& rho, std::span<const std::size_t> modes,
                        std::span<const int> occupations);

}  // namespace exfree
