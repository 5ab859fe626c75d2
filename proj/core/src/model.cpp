#include "exfree/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "exfree/errors.hpp"

namespace exfree {

SystemParams SystemParams::from_khz(double g_khz, double delta_khz, ModeDims dims) {
  SystemParams p;
  p.g1 = khz_to_angular(g_khz);
  p.g2 = p.g1;
  p.delta = khz_to_angular(delta_khz);
  p.dims = std::move(dims);
  return p;
}

void SystemParams::validate() const {
  if (!(g1 > 0.0) || !(g2 > 0.0)) throw InvalidParameter("couplings g1, g2 must be positive");
  if (!std::isfinite(delta)) throw InvalidParameter("detuning must be finite");
  if (dims.modes() != 3) throw InvalidDimension("the system has exactly three modes (S1, S2, S3)");
  for (std::size_t m = 0; m < 3; ++m) {
    const auto& c = coherence[m];
    if (c.t1 && !(*c.t1 > 0.0)) {
      throw InvalidParameter("T1 of mode S" + std::to_string(m + 1) + " must be positive");
    }
    if (c.tphi && !(*c.tphi > 0.0)) {
      throw InvalidParameter("Tphi of mode S" + std::to_string(m + 1) + " must be positive");
    }
    if (c.n_th < 0.0) {
      throw InvalidParameter("n_th of mode S" + std::to_string(m + 1) + " must be >= 0");
    }
  }
}

bool SystemParams::has_decoherence() const {
  return std::any_of(coherence.begin(), coherence.end(),
                     [](const ModeCoherence& c) { return c.t1.has_value() || c.tphi.has_value(); });
}

SystemParams SystemParams::without_decoherence() const {
  SystemParams p = *this;
  p.coherence = {};
  return p;
}

std::array<ModeCoherence, 3> measured_cavity_coherence(bool with_thermal) {
  std::array<ModeCoherence, 3> c{};
  c[kS1].t1 = 265.0;
  c[kS2].t1 = 300.0;
  c[kS3].t1 = 314.0;
  if (with_thermal) {
    c[kS1].n_th = 0.03;
    c[kS2].n_th = 0.02;
    c[kS3].n_th = 0.025;
  }
  return c;
}

RegimeFlag regime(const SystemParams& params) {
  const double g = std::max(params.g1, params.g2);
  RegimeFlag f;
  f.threshold = 2.0 * std::numbers::sqrt2 * g;
  f.oscillatory = params.delta > f.threshold;
  return f;
}

namespace {

void check_three_modes(const SystemParams& params) {
  if (params.dims.modes() != 3) {
    throw InvalidDimension("three-mode Hamiltonian requested on " +
                           std::to_string(params.dims.modes()) + " modes");
  }
}

SparseMatrix pair_term(const SparseMatrix& ax, const SparseMatrix& a2, bool squeezing) {
  const SparseMatrix lower = squeezing ? SparseMatrix(ax * a2) : SparseMatrix(SparseMatrix(ax.adjoint()) * a2);
  return SparseMatrix(lower.adjoint()) + lower;
}

OperatorMatrix dense(const ModeDims& dims, const SparseMatrix& m) { return {dims, Matrix(m)}; }

}  // namespace

SparseMatrix sparse_h_tms(const SystemParams& params, TmsPair pair) {
  check_three_modes(params);
  const auto& d = params.dims;
  const std::size_t x = pair == TmsPair::S1S2 ? kS1 : kS3;
  const double g = pair == TmsPair::S1S2 ? params.g1 : params.g2;
  return pair_term(sparse_mode_annihilation(d, x), sparse_mode_annihilation(d, kS2), true) * cplx(g);
}

SparseMatrix sparse_h_detune(const SystemParams& params) {
  check_three_modes(params);
  const SparseMatrix a2 = sparse_mode_annihilation(params.dims, kS2);
  return SparseMatrix(SparseMatrix(a2.adjoint()) * a2) * cplx(params.delta);
}

SparseMatrix sparse_h_full(const SystemParams& params) {
  return sparse_h_tms(params, TmsPair::S1S2) + sparse_h_tms(params, TmsPair::S3S2) +
         sparse_h_detune(params);
}

SparseMatrix sparse_h_eff(const SystemParams& params) {
  check_three_modes(params);
  if (params.delta == 0.0) throw InvalidParameter("effective coupling g1*g2/delta needs delta != 0");
  const double geff = params.g1 * params.g2 / params.delta;
  return pair_term(sparse_mode_annihilation(params.dims, kS1),
                   sparse_mode_annihilation(params.dims, kS3), false) *
         cplx(geff);
}

SparseMatrix sparse_h_bs_reference(const SystemParams& params) {
  check_three_modes(params);
  const auto& d = params.dims;
  const SparseMatrix a2 = sparse_mode_annihilation(d, kS2);
  return pair_term(sparse_mode_annihilation(d, kS1), a2, false) * cplx(params.g1) +
         pair_term(sparse_mode_annihilation(d, kS3), a2, false) * cplx(params.g2) +
         sparse_h_detune(params);
}

OperatorMatrix build_h_tms(const SystemParams& params, TmsPair pair) {
  return dense(params.dims, sparse_h_tms(params, pair));
}

OperatorMatrix build_h_detune(const SystemParams& params) {
  return dense(params.dims, sparse_h_detune(params));
}

OperatorMatrix build_h_full(const SystemParams& params) {
  return dense(params.dims, sparse_h_full(params));
}

OperatorMatrix build_h_eff(const SystemParams& params) {
  return dense(params.dims, sparse_h_eff(params));
}

OperatorMatrix build_h_bs_reference(const SystemParams& params) {
  return dense(params.dims, sparse_h_bs_reference(params));
}

OperatorMatrix build_h_tms_two_mode(double g, const ModeDims& dims) {
  if (dims.modes() != 2) throw InvalidDimension("two-mode squeezing needs exactly two modes");
  const auto pair_annihilate = mode_annihilation(dims, 0) * mode_annihilation(dims, 1);
  return (pair_annihilate.adjoint() + pair_annihilate) * cplx(g);
}

OperatorMatrix total_photon_number(const ModeDims& dims) {
  OperatorMatrix n = mode_number(dims, 0);
  for (std::size_t m = 1; m < dims.modes(); ++m) n = n + mode_number(dims, m);
  return n;
}

std::vector<OperatorMatrix> collapse_operators(const SystemParams& params) {
  params.validate();
  std::vector<OperatorMatrix> ops;
  for (std::size_t m = 0; m < 3; ++m) {
    const auto& c = params.coherence[m];
    if (c.t1) {
      const double down = std::sqrt((1.0 + c.n_th) / *c.t1);
      ops.push_back(mode_annihilation(params.dims, m) * cplx(down));
      if (c.n_th > 0.0) {
        ops.push_back(mode_creation(params.dims, m) * cplx(std::sqrt(c.n_th / *c.t1)));
      }
    }
    if (c.tphi) {
      ops.push_back(mode_number(params.dims, m) * cplx(std::sqrt(2.0 / *c.tphi)));
    }
  }
  return ops;
}

}  // namespace exfree
