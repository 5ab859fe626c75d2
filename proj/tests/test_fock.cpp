#include <gtest/gtest.h>

#include "exfree/errors.hpp"
#include "exfree/fock.hpp"

using namespace exfree;

TEST(ModeDims, RejectsSingleLevelModes) {
  EXPECT_THROW(ModeDims({3, 1, 3}), InvalidDimension);
  EXPECT_THROW(ModeDims(std::vector<int>{}), InvalidDimension);
}

TEST(ModeDims, TotalIsProductAndIndexRoundTrips) {
  const ModeDims dims{6, 5, 6};
  EXPECT_EQ(dims.total(), 180u);
  for (std::size_t i = 0; i < dims.total(); ++i) {
    const auto occ = dims.occupations(i);
    EXPECT_EQ(dims.index(occ), i);
  }
  // S3 is the fastest index.
  EXPECT_EQ(dims.index({0, 0, 1}), 1u);
  EXPECT_EQ(dims.index({1, 0, 0}), 30u);
}

TEST(ModeDims, OccupationOutsideTruncationThrows) {
  const ModeDims dims{3, 3, 3};
  EXPECT_THROW(fock_state(dims, {3, 0, 0}), OutOfTruncation);
  EXPECT_THROW(fock_state(dims, {0, -1, 0}), OutOfTruncation);
}

TEST(Ladder, CanonicalCommutatorBelowTopLevel) {
  for (int n : {2, 3, 5, 8, 12}) {
    const auto a = annihilation_op(n);
    const auto ad = creation_op(n);
    const Matrix c = commutator(a, ad).elements();
    for (int k = 0; k <= n - 2; ++k) EXPECT_NEAR(std::abs(c(k, k) - 1.0), 0.0, 1e-14) << "n=" << n << " k=" << k;
  }
}

TEST(Ladder, NumberOperatorIsAdaggerA) {
  const int n = 7;
  const Matrix diff = (creation_op(n) * annihilation_op(n) - number_op(n)).elements();
  EXPECT_LT(diff.norm(), 1e-14);
}

TEST(Embed, OperatorsOnDistinctModesCommute) {
  const ModeDims dims{4, 3, 5};
  for (std::size_t m1 = 0; m1 < 3; ++m1) {
    for (std::size_t m2 = 0; m2 < 3; ++m2) {
      if (m1 == m2) continue;
      const auto x = embed_op(annihilation_op(dims[m1]), m1, dims);
      const auto y = embed_op(creation_op(dims[m2]), m2, dims);
      EXPECT_LT((x * y - y * x).elements().norm(), 1e-12);
    }
  }
}

TEST(Embed, SparseAndDenseAgree) {
  const ModeDims dims{3, 4, 2};
  for (std::size_t m = 0; m < 3; ++m) {
    const Matrix dense = mode_annihilation(dims, m).elements();
    const Matrix sparse = Matrix(sparse_mode_annihilation(dims, m));
    EXPECT_LT((dense - sparse).norm(), 1e-15);
  }
}

TEST(Embed, DimensionMismatchThrows) {
  const ModeDims dims{3, 3, 3};
  EXPECT_THROW(embed_op(annihilation_op(4), 0, dims), InvalidDimension);
  EXPECT_THROW(embed_op(annihilation_op(3), 3, dims), InvalidDimension);
}

TEST(FockState, Orthonormal) {
  const ModeDims dims{3, 2, 3};
  std::vector<StateVector> basis;
  for (std::size_t i = 0; i < dims.total(); ++i) {
    const auto occ = dims.occupations(i);
    basis.push_back(fock_state(dims, occ));
  }
  for (std::size_t i = 0; i < basis.size(); ++i) {
    for (std::size_t j = 0; j < basis.size(); ++j) {
      const cplx ip = basis[i].amplitudes().dot(basis[j].amplitudes());
      EXPECT_NEAR(std::abs(ip), i == j ? 1.0 : 0.0, 1e-15);
    }
  }
}

TEST(Binomial, UnitNormAndOrthogonalCodewords) {
  for (auto label : {BinomialLabel::ZeroL, BinomialLabel::OneL, BinomialLabel::PlusIL, BinomialLabel::ZeroE,
                     BinomialLabel::PlusIE}) {
    EXPECT_NEAR(binomial_code_state(label, 6).norm(), 1.0, 1e-12);
  }
  const auto zero = binomial_code_state(BinomialLabel::ZeroL, 6).amplitudes();
  const auto one = binomial_code_state(BinomialLabel::OneL, 6).amplitudes();
  EXPECT_NEAR(std::abs(zero.dot(one)), 0.0, 1e-15);
}

TEST(Binomial, NeedsFiveLevels) { EXPECT_THROW(binomial_code_state(BinomialLabel::ZeroL, 4), InvalidDimension); }

TEST(Binomial, LabelsRoundTrip) {
  for (auto label : {BinomialLabel::ZeroL, BinomialLabel::OneL, BinomialLabel::PlusIL, BinomialLabel::ZeroE,
                     BinomialLabel::PlusIE}) {
    EXPECT_EQ(parse_binomial_label(to_string(label)), label);
  }
  EXPECT_THROW(parse_binomial_label("2L"), InvalidParameter);
}

TEST(DensityMatrix, PureStateIsValid) {
  const ModeDims dims{3, 3};
  const StateVector psi(dims, (fock_state(dims, {0, 1}).amplitudes() + fock_state(dims, {2, 0}).amplitudes()) /
                                  std::sqrt(2.0));
  EXPECT_TRUE(DensityMatrix(psi).is_valid());
  Matrix bad = DensityMatrix(psi).elements();
  bad(0, 0) = -0.1;
  EXPECT_FALSE(DensityMatrix(dims, bad).is_valid());
}

TEST(PartialTrace, ProductStateFactorizes) {
  const ModeDims dims{3, 2, 4};
  const StateVector psi = fock_state(dims, {2, 1, 3});
  const DensityMatrix r3 = partial_trace(psi, {2});
  EXPECT_EQ(r3.dims().total(), 4u);
  EXPECT_NEAR(r3.elements()(3, 3).real(), 1.0, 1e-15);
  const DensityMatrix r13 = partial_trace(DensityMatrix(psi), {0, 2});
  EXPECT_NEAR(r13.elements()(2 * 4 + 3, 2 * 4 + 3).real(), 1.0, 1e-15);
}

TEST(PartialTrace, PureAndMixedPathsAgree) {
  const ModeDims dims{3, 2, 3};
  Vector v(dims.total());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = cplx(std::sin(1.3 * i), std::cos(0.7 * i));
  const StateVector psi(dims, v.normalized());
  for (auto keep : {std::vector<std::size_t>{0}, {1}, {2}, {0, 2}, {2, 0}}) {
    const Matrix a = partial_trace(psi, keep).elements();
    const Matrix b = partial_trace(DensityMatrix(psi), keep).elements();
    EXPECT_LT((a - b).norm(), 1e-13);
    EXPECT_TRUE(partial_trace(psi, keep).is_valid());
  }
}

TEST(PartialTrace, KeepOrderIsRespected) {
  const ModeDims dims{2, 3};
  const StateVector psi = fock_state(dims, {1, 2});
  const Matrix swapped = partial_trace(psi, {1, 0}).elements();
  EXPECT_NEAR(swapped(2 * 2 + 1, 2 * 2 + 1).real(), 1.0, 1e-15);
}

TEST(Observables, MeanPhotonNumbersAndDistribution) {
  const ModeDims dims{4, 3, 4};
  const StateVector psi(dims, (fock_state(dims, {1, 0, 2}).amplitudes() + fock_state(dims, {3, 2, 0}).amplitudes()) /
                                  std::sqrt(2.0));
  const auto n = mean_photon_numbers(psi);
  EXPECT_NEAR(n[0], 2.0, 1e-14);
  EXPECT_NEAR(n[1], 1.0, 1e-14);
  EXPECT_NEAR(n[2], 1.0, 1e-14);
  const auto nm = mean_photon_numbers(DensityMatrix(psi));
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(n[k], nm[k], 1e-14);
  const auto p = mode_distribution(psi, 2);
  EXPECT_NEAR(p[0], 0.5, 1e-14);
  EXPECT_NEAR(p[2], 0.5, 1e-14);
  const std::size_t modes[] = {0, 2};
  const int occ[] = {3, 0};
  EXPECT_NEAR(joint_population(psi, modes, occ), 0.5, 1e-14);
}

TEST(Projectors, ParityProjectorsSumToIdentity) {
  const ModeDims dims{5, 3, 5};
  const Matrix sum = (parity_projector(dims, 2, true) + parity_projector(dims, 2, false)).elements();
  EXPECT_LT((sum - Matrix::Identity(dims.total(), dims.total())).norm(), 1e-15);
  const Matrix v = vacuum_projector(dims, 1).elements();
  EXPECT_LT((v * v - v).norm(), 1e-15);
}
