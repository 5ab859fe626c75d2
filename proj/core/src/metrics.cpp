#include "exfree/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>
#include <boost/math/tools/minima.hpp>

#include "exfree/dynamics.hpp"
#include "exfree/errors.hpp"

namespace exfree {

namespace {

using std::numbers::pi;

void require_same(const ModeDims& a, const ModeDims& b, const char* what) {
  if (!(a == b)) throw InvalidDimension(std::string(what) + ": dimension mismatch");
}

Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()));
  const Eigen::VectorXd roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * roots.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

double clamp_unit(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

double state_fidelity(const StateVector& a, const StateVector& b) {
  require_same(a.dims(), b.dims(), "state_fidelity");
  return clamp_unit(std::norm(a.amplitudes().dot(b.amplitudes())));
}

double state_fidelity(const StateVector& target, const DensityMatrix& rho) {
  require_same(target.dims(), rho.dims(), "state_fidelity");
  const Vector& psi = target.amplitudes();
  return clamp_unit(psi.dot(rho.elements() * psi).real());
}

double state_fidelity(const DensityMatrix& rho, const StateVector& target) {
  return state_fidelity(target, rho);
}

double state_fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  require_same(a.dims(), b.dims(), "state_fidelity");
  const Matrix sa = psd_sqrt(a.elements());
  const Matrix inner = sa * b.elements() * sa;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (inner + inner.adjoint()), Eigen::EigenvaluesOnly);
  const double root_trace = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return clamp_unit(root_trace * root_trace);
}

PhaseOptimum phase_optimized_fidelity(const StateVector& target, const DensityMatrix& rho,
                                      std::size_t mode) {
  require_same(target.dims(), rho.dims(), "phase_optimized_fidelity");
  if (mode >= target.dims().modes()) throw InvalidDimension("phase_optimized_fidelity: bad mode");
  const auto& dims = target.dims();
  const Vector& psi = target.amplitudes();
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    if (psi[i] != cplx(0.0)) support.push_back(i);
  }
  // F(phi) = Re sum_k c_k e^{i k phi}, k = n_i - n_j over the target support.
  std::map<int, cplx> harmonics;
  for (auto i : support) {
    const int ni = dims.occupation(static_cast<std::size_t>(i), mode);
    for (auto j : support) {
      const int nj = dims.occupation(static_cast<std::size_t>(j), mode);
      harmonics[ni - nj] += std::conj(psi[i]) * psi[j] * rho.elements()(i, j);
    }
  }
  auto fidelity_at = [&](double phi) {
    cplx f = 0.0;
    for (const auto& [k, c] : harmonics) f += c * std::exp(cplx(0.0, k * phi));
    return f.real();
  };

  constexpr int kGrid = 720;
  double best_phi = 0.0;
  double best = fidelity_at(0.0);
  for (int s = 1; s < kGrid; ++s) {
    const double phi = 2.0 * pi * s / kGrid;
    const double f = fidelity_at(phi);
    if (f > best) {
      best = f;
      best_phi = phi;
    }
  }
  const double step = 2.0 * pi / kGrid;
  const auto refined = boost::math::tools::brent_find_minima(
      [&](double phi) { return -fidelity_at(phi); }, best_phi - step, best_phi + step, 52);
  PhaseOptimum out;
  if (-refined.second >= best) {
    out.phase = std::remainder(refined.first, 2.0 * pi);
    out.fidelity = clamp_unit(-refined.second);
  } else {
    out.phase = std::remainder(best_phi, 2.0 * pi);
    out.fidelity = clamp_unit(best);
  }
  return out;
}

bool ProcessMatrix::is_valid(double tol) const {
  if ((choi - choi.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(choi, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol && choi.trace().real() <= 1.0 + tol;
}

ProcessFidelity process_fidelity_qubit_subspace(const QubitChannel& channel,
                                                const ProcessOptions& options) {
  Eigen::Matrix4cd choi = Eigen::Matrix4cd::Zero();
  double trace_sum = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      Eigen::Matrix2cd input = Eigen::Matrix2cd::Zero();
      input(a, b) = 1.0;
      const Matrix out = channel(input);
      if (out.rows() < 2 || out.rows() != out.cols()) {
        throw InvalidDimension("process fidelity: channel output must be square with >= 2 levels");
      }
      if (a == b) {
        const double tr = out.trace().real();
        trace_sum += tr;
        if (!options.post_selected && std::abs(tr - 1.0) > options.trace_tolerance) {
          throw InvalidOperator("process fidelity: channel is not trace-preserving (trace " +
                                std::to_string(tr) + ")");
        }
      }
      for (int o = 0; o < 2; ++o) {
        for (int p = 0; p < 2; ++p) choi(2 * a + o, 2 * b + p) = 0.5 * out(o, p);
      }
    }
  }

  ProcessFidelity result;
  result.mean_trace = 0.5 * trace_sum;
  if (options.post_selected) {
    const double norm = choi.trace().real();
    if (norm <= kImpossibleOutcome) {
      throw DegenerateProjection("process fidelity: post-selected channel has zero weight");
    }
    choi /= norm;
  }
  if (options.optimize_phase) {
    // Rotating the output by exp(i phi n) multiplies coherences by e^{i phi (o - p)}.
    result.phase = std::arg(choi(0, 3));
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) {
        choi(r, c) *= std::exp(cplx(0.0, result.phase * ((r % 2) - (c % 2))));
      }
    }
  }
  result.process.choi = choi;
  const double overlap = 0.5 * (choi(0, 0) + choi(0, 3) + choi(3, 0) + choi(3, 3)).real();
  result.fidelity = clamp_unit(overlap);
  return result;
}

double depolarizing_budget(std::span<const double> infidelities) {
  double product = 1.0;
  for (double e : infidelities) {
    if (!(e >= 0.0 && e <= 1.0)) {
      throw InvalidParameter("depolarizing_budget: infidelity " + std::to_string(e) +
                             " outside [0, 1]");
    }
    product *= 1.0 - e;
  }
  return 0.25 + 0.75 * product;
}

double ablation_infidelity(double f_with_error, double f_without_error) {
  if (!(f_with_error > 0.25) || !(f_without_error > 0.25)) {
    throw BudgetUndefined("ablation fidelity <= 1/4; the depolarizing budget is undefined");
  }
  return 1.0 - (f_with_error - 0.25) / (f_without_error - 0.25);
}

double negativity(const Matrix& rho, int dim_a, int dim_b) {
  if (dim_a < 1 || dim_b < 1 || rho.rows() != dim_a * dim_b || rho.cols() != rho.rows()) {
    throw InvalidDimension("negativity: matrix size does not match the bipartition");
  }
  Matrix pt(rho.rows(), rho.cols());
  for (int i = 0; i < dim_a; ++i) {
    for (int k = 0; k < dim_b; ++k) {
      for (int j = 0; j < dim_a; ++j) {
        for (int l = 0; l < dim_b; ++l) pt(i * dim_b + k, j * dim_b + l) = rho(i * dim_b + l, j * dim_b + k);
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (pt + pt.adjoint()), Eigen::EigenvaluesOnly);
  double neg = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (es.eigenvalues()[i] < 0.0) neg -= es.eigenvalues()[i];
  }
  return neg;
}

double negativity(const DensityMatrix& rho) {
  if (rho.dims().modes() != 2) throw InvalidDimension("negativity: expected a two-mode state");
  return negativity(rho.elements(), rho.dims()[0], rho.dims()[1]);
}

QubitPair project_02(const DensityMatrix& two_mode) {
  const auto& dims = two_mode.dims();
  if (dims.modes() != 2 || dims[0] < 3 || dims[1] < 3) {
    throw InvalidDimension("project_02: expected two modes with at least 3 levels each");
  }
  std::array<Eigen::Index, 4> idx{};
  for (int q = 0; q < 4; ++q) {
    idx[static_cast<std::size_t>(q)] =
        static_cast<Eigen::Index>(dims.index({2 * (q / 2), 2 * (q % 2)}));
  }
  Eigen::Matrix4cd block;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      block(r, c) = two_mode.elements()(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]);
    }
  }
  QubitPair out;
  out.weight = std::max(0.0, block.trace().real());
  if (out.weight > kImpossibleOutcome) out.rho = block / out.weight;
  return out;
}

std::array<std::string_view, 15> PauliTable::labels() {
  return {"IX", "IY", "IZ", "XI", "XX", "XY", "XZ", "YI", "YX", "YY", "YZ", "ZI", "ZX", "ZY", "ZZ"};
}

double PauliTable::at(std::string_view label) const {
  const auto names = labels();
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == label) return values[k];
  }
  throw InvalidParameter("unknown Pauli label '" + std::string(label) + "'");
}

PauliTable pauli_table(const Eigen::Matrix4cd& two_qubit) {
  const cplx i(0.0, 1.0);
  std::array<Eigen::Matrix2cd, 4> sigma;
  sigma[0] << 1, 0, 0, 1;
  sigma[1] << 0, 1, 1, 0;
  sigma[2] << 0, -i, i, 0;
  sigma[3] << 1, 0, 0, -1;
  PauliTable table;
  table.weight = 1.0;
  std::size_t k = 0;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      if (a == 0 && b == 0) continue;
      Eigen::Matrix4cd op;
      for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) op(r, c) = sigma[static_cast<std::size_t>(a)](r / 2, c / 2) *
                                               sigma[static_cast<std::size_t>(b)](r % 2, c % 2);
      }
      table.values[k++] = std::clamp((two_qubit * op).trace().real(), -1.0, 1.0);
    }
  }
  return table;
}

PauliTable pauli_table_02(const DensityMatrix& two_mode) {
  const QubitPair pair = project_02(two_mode);
  if (pair.weight < 1e-6) {
    throw DegenerateProjection("pauli_table_02: weight in the {0,2} subspace is " +
                               std::to_string(pair.weight));
  }
  PauliTable table = pauli_table(pair.rho);
  table.weight = pair.weight;
  return table;
}

std::vector<double> wigner(const DensityMatrix& single_mode, std::span<const cplx> alphas, int guard) {
  if (single_mode.dims().modes() != 1) throw InvalidDimension("wigner: expected a single-mode state");
  if (guard < 0) throw InvalidParameter("wigner: guard band must be >= 0");
  const int n = single_mode.dims()[0];
  double r_max = 0.0;
  for (const cplx alpha : alphas) r_max = std::max(r_max, std::abs(alpha));
  // D(alpha)|k> for k < n spreads to about (|alpha| + sqrt(k))^2 photons.
  const double reach = r_max + std::sqrt(static_cast<double>(n));
  const int m = std::max(n + guard, static_cast<int>(std::ceil(reach * reach + 8.0 * reach + 8.0)));

  // D(r e^{i theta}) = R exp(r (a^dagger - a)) R^dagger with R = e^{i theta n}.
  const Matrix a = annihilation_op(m).elements();
  Eigen::SelfAdjointEigenSolver<Matrix> es(cplx(0.0, 1.0) * (a.adjoint() - a));
  const Matrix& v = es.eigenvectors();
  const Matrix v_top = v.topRows(n);
  const Matrix& rho = single_mode.elements();

  std::vector<double> out;
  out.reserve(alphas.size());
  for (const cplx alpha : alphas) {
    const double r = std::abs(alpha);
    const double theta = std::arg(alpha);
    const Vector phases = (es.eigenvalues().cast<cplx>() * cplx(0.0, -r)).array().exp().matrix();
    Matrix b = v_top * phases.asDiagonal() * v.adjoint();  // first n rows of exp(r (a^dagger - a))
    for (int row = 0; row < n; ++row) b.row(row) *= std::polar(1.0, theta * row);
    for (int col = 0; col < m; ++col) b.col(col) *= std::polar(1.0, -theta * col);
    const Matrix rb = rho * b;
    double w = 0.0;
    for (int col = 0; col < m; ++col) {
      const double diag = b.col(col).dot(rb.col(col)).real();
      w += (col % 2 == 0) ? diag : -diag;
    }
    out.push_back(2.0 / pi * w);
  }
  return out;
}

std::vector<cplx> wigner_grid(double extent, int points) {
  if (!(extent > 0.0) || points < 2) throw InvalidParameter("wigner_grid: need extent > 0 and >= 2 points");
  std::vector<cplx> grid;
  grid.reserve(static_cast<std::size_t>(points) * static_cast<std::size_t>(points));
  const double step = 2.0 * extent / (points - 1);
  for (int y = 0; y < points; ++y) {
    for (int x = 0; x < points; ++x) grid.emplace_back(-extent + step * x, -extent + step * y);
  }
  return grid;
}

ParitySplit parity_split(const DensityMatrix& rho, std::size_t mode) {
  if (mode >= rho.dims().modes()) throw InvalidDimension("parity_split: bad mode");
  auto even = post_select(rho, parity_projector(rho.dims(), mode, true));
  auto odd = post_select(rho, parity_projector(rho.dims(), mode, false));
  ParitySplit out;
  out.p_even = even.probability;
  out.p_odd = odd.probability;
  out.even = std::move(even.state);
  out.odd = std::move(odd.state);
  return out;
}

}  // namespace exfree
