#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "exfree/analytic.hpp"
#include "exfree/dynamics.hpp"
#include "exfree/errors.hpp"

using namespace exfree;

namespace {

SystemParams params_at(double delta_khz, ModeDims dims) { return SystemParams::from_khz(80, delta_khz, dims); }

double max_population_error(const SystemParams& p, double t_end, int samples) {
  const StateVector psi0 = fock_state(p.dims, {1, 0, 0});
  const UnitaryPropagator prop(sparse_h_full(p), psi0);
  double worst = 0.0;
  for (int k = 0; k <= samples; ++k) {
    const double t = t_end * k / samples;
    const auto num = mean_photon_numbers(prop.at(t));
    const auto ref = analytic::mean_photon_numbers(p, t, 1.0);
    for (int m = 0; m < 3; ++m) worst = std::max(worst, std::abs(num[m] - ref[m]));
  }
  return worst;
}

}  // namespace

TEST(Method, ParseAndPrint) {
  for (auto m : {Method::ExactUnitary, Method::Trotter, Method::Lindblad}) EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_EQ(parse_method("exact"), Method::ExactUnitary);
  EXPECT_THROW(parse_method("rk4"), InvalidParameter);
}

TEST(EvolutionSpec, ValidateChecksTimesAndSteps) {
  auto spec = EvolutionSpec::uniform(10.0, 11);
  EXPECT_NO_THROW(spec.validate());
  EXPECT_DOUBLE_EQ(spec.sample_times.front(), 0.0);
  EXPECT_DOUBLE_EQ(spec.sample_times.back(), 10.0);
  spec.method = Method::Trotter;
  spec.trotter_dt = 0.0;
  EXPECT_THROW(spec.validate(), InvalidParameter);
  spec = EvolutionSpec::uniform(10.0, 11);
  spec.sample_times.push_back(11.0);
  EXPECT_THROW(spec.validate(), InvalidParameter);
  spec = EvolutionSpec::uniform(10.0, 11);
  std::swap(spec.sample_times[2], spec.sample_times[3]);
  EXPECT_THROW(spec.validate(), InvalidParameter);
}

TEST(Unitary, PreservesNorm) {
  const auto p = params_at(475, ModeDims{5, 4, 5});
  const StateVector psi0(p.dims, (fock_state(p.dims, {1, 0, 0}).amplitudes() +
                                  fock_state(p.dims, {0, 1, 2}).amplitudes()) / std::sqrt(2.0));
  for (double t : {0.0, 1.0, 17.4, 100.0, 1000.0}) {
    EXPECT_NEAR(evolve_unitary(build_h_full(p), psi0, t).norm(), 1.0, 1e-9);
    EXPECT_NEAR(evolve_unitary(build_h_bs_reference(p), psi0, t).norm(), 1.0, 1e-9);
  }
}

TEST(Unitary, SubspacePropagatorMatchesDenseExponential) {
  const auto p = params_at(475, ModeDims{4, 3, 4});
  const Matrix h = build_h_full(p).elements();
  const StateVector psi0 = fock_state(p.dims, {1, 0, 0});
  const UnitaryPropagator prop(build_h_full(p), psi0);
  EXPECT_LT(prop.subspace_size(), p.dims.total());
  for (double t : {0.3, 5.0, 17.0}) {
    const Matrix u = (Matrix(cplx(0.0, -t) * h)).exp();
    const Vector ref = u * psi0.amplitudes();
    EXPECT_LT((prop.at(t).amplitudes() - ref).norm(), 1e-9);
  }
}

TEST(Unitary, RejectsNonHermitian) {
  const auto p = params_at(475, ModeDims{3, 3, 3});
  const OperatorMatrix bad = mode_annihilation(p.dims, 0);
  EXPECT_THROW(evolve_unitary(bad, fock_state(p.dims, {1, 0, 0}), 1.0), InvalidOperator);
}

TEST(Unitary, MatchesClosedFormAtConvergedTruncation) {
  for (double delta : {475.0, 675.0, 775.0}) {
    const auto p = params_at(delta, ModeDims{12, 12, 12});
    EXPECT_LT(max_population_error(p, 2.0 * analytic::tau_st(p), 400), 1e-4) << delta;
  }
}

TEST(Trotter, FirstOrderConvergence) {
  const auto p = params_at(475, ModeDims{6, 5, 6});
  const double t = analytic::tau_st(p);
  const StateVector psi0 = fock_state(p.dims, {1, 0, 0});
  const Vector exact = evolve_unitary(build_h_full(p), psi0, t).amplitudes();
  double previous = 0.0;
  for (int divisions : {250, 500, 1000, 2000, 4000}) {
    const double err = (evolve_trotter(p, psi0, t, t / divisions).amplitudes() - exact).norm();
    if (previous > 0.0) {
      EXPECT_GE(previous / err, 1.5) << divisions;
      EXPECT_LE(previous / err, 3.0) << divisions;
    }
    previous = err;
  }
}

TEST(Trotter, StepperIsUnitaryAndOrdersDiffer) {
  const auto p = params_at(475, ModeDims{4, 4, 4});
  const StateVector psi0 = fock_state(p.dims, {1, 0, 0});
  const auto a = evolve_trotter(p, psi0, 5.0, 0.05, TrotterOrder::Printed);
  const auto b = evolve_trotter(p, psi0, 5.0, 0.05, TrotterOrder::Reversed);
  EXPECT_NEAR(a.norm(), 1.0, 1e-12);
  EXPECT_NEAR(b.norm(), 1.0, 1e-12);
  EXPECT_GT((a.amplitudes() - b.amplitudes()).norm(), 1e-8);
}

TEST(Lindblad, TracePositivityAndUnitaryLimit) {
  auto p = params_at(475, ModeDims{3, 3, 3});
  const StateVector psi0 = fock_state(p.dims, {1, 0, 0});
  auto spec = EvolutionSpec::uniform(10.0, 21, Method::Lindblad);

  const auto closed = evolve_lindblad(build_h_full(p), {}, DensityMatrix(psi0), spec);
  const Vector ref = evolve_unitary(build_h_full(p), psi0, 10.0).amplitudes();
  EXPECT_LT((closed.back().elements() - ref * ref.adjoint()).norm(), 1e-6);

  p.coherence = measured_cavity_coherence(true);
  p.coherence[kS2].t1 = 5.0;  // strong bus loss so the dissipator matters
  const auto ops = collapse_operators(p);
  const auto rhos = evolve_lindblad(build_h_full(p), ops, DensityMatrix(psi0), spec);
  ASSERT_EQ(rhos.size(), spec.sample_times.size());
  for (const auto& r : rhos) {
    EXPECT_NEAR(r.trace().real(), 1.0, 1e-7);
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (r.elements() + r.elements().adjoint()));
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-6);
    EXPECT_LT((r.elements() - r.elements().adjoint()).norm(), 1e-9);
  }
}

TEST(Lindblad, PureDecayOfSingleMode) {
  const ModeDims dims{3, 2, 2};
  const OperatorMatrix h(dims, Matrix::Zero(dims.total(), dims.total()));
  const std::vector<OperatorMatrix> ops{std::sqrt(0.1) * mode_annihilation(dims, kS1)};
  auto spec = EvolutionSpec::uniform(20.0, 5, Method::Lindblad);
  const auto rhos = evolve_lindblad(h, ops, DensityMatrix(fock_state(dims, {1, 0, 0})), spec);
  for (std::size_t k = 0; k < rhos.size(); ++k) {
    EXPECT_NEAR(mean_photon_numbers(rhos[k])[0], std::exp(-spec.sample_times[k] / 10.0), 1e-7);
  }
}

TEST(Lindblad, OperatorEvolutionIsLinear) {
  auto p = params_at(475, ModeDims{3, 3, 3});
  p.coherence = measured_cavity_coherence();
  const auto ops = collapse_operators(p);
  auto spec = EvolutionSpec::uniform(5.0, 2, Method::Lindblad);
  const auto i0 = p.dims.index({0, 0, 0});
  const auto i1 = p.dims.index({1, 0, 0});
  Matrix x = Matrix::Zero(p.dims.total(), p.dims.total());
  x(i1, i0) = 1.0;
  const auto xs = evolve_lindblad_operator(build_h_full(p), ops, x, spec);
  const auto ys = evolve_lindblad_operator(build_h_full(p), ops, Matrix(x.adjoint()), spec);
  EXPECT_LT((xs.back().adjoint() - ys.back()).norm(), 1e-7);
}

TEST(PostSelection, ProbabilitiesAndImpossibleOutcomes) {
  const ModeDims dims{3, 3, 3};
  const StateVector psi(dims, (fock_state(dims, {1, 0, 0}).amplitudes() + fock_state(dims, {0, 1, 1}).amplitudes()) /
                                  std::sqrt(2.0));
  const auto kept = post_select(psi, vacuum_projector(dims, kS2));
  ASSERT_TRUE(kept.possible());
  EXPECT_NEAR(kept.probability, 0.5, 1e-14);
  EXPECT_NEAR(kept.state->norm(), 1.0, 1e-14);
  const auto mixed = post_select(DensityMatrix(psi), vacuum_projector(dims, kS2));
  EXPECT_NEAR(mixed.probability, 0.5, 1e-14);
  EXPECT_TRUE(mixed.state->is_valid());
  const auto none = post_select(fock_state(dims, {0, 2, 0}), vacuum_projector(dims, kS2));
  EXPECT_FALSE(none.possible());
}

TEST(Jump, AnnihilationWeightsByPhotonNumber) {
  const ModeDims dims{2, 2, 5};
  const StateVector psi(dims, (fock_state(dims, {0, 0, 0}).amplitudes() + fock_state(dims, {0, 0, 4}).amplitudes()) /
                                  std::sqrt(2.0));
  const auto j = apply_jump(psi, kS3);
  EXPECT_NEAR(j.probability, 2.0, 1e-14);  // <n> of the input
  EXPECT_NEAR(std::abs((*j.state)[dims.index({0, 0, 3})]), 1.0, 1e-14);
  EXPECT_FALSE(apply_jump(fock_state(dims, {0, 0, 0}), kS3).possible());
}

TEST(Convergence, DetectsTruncationEffects) {
  const auto p = SystemParams::from_khz(80, 475, ModeDims{6, 5, 6});
  const int occ[] = {1, 0, 0};
  const auto coarse = truncation_convergence_check(p, occ, analytic::tau_st(p), 1e-6);
  EXPECT_FALSE(coarse.passed);
  EXPECT_GT(coarse.max_population_difference, 1e-6);
  EXPECT_EQ(coarse.extended, p.dims.padded(2));

  const auto fine_params = SystemParams::from_khz(80, 475, ModeDims{14, 14, 14});
  const auto fine = truncation_convergence_check(fine_params, occ, analytic::tau_st(p), 1e-6);
  EXPECT_TRUE(fine.passed) << fine.max_population_difference;
}
