#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "cvdiscord/fock.hpp"
#include "oracles.hpp"

using namespace cvdiscord;

namespace {

CMatrix random_unitary(int n, std::mt19937 &rng) {
  std::normal_distribution<double> g;
  CMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<CMatrix> qr(m);
  return qr.householderQ();
}

CMatrix random_state(int n, int rank, std::mt19937 &rng) {
  std::normal_distribution<double> g;
  CMatrix m(n, rank);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < rank; ++j) m(i, j) = cplx(g(rng), g(rng));
  CMatrix rho = m * m.adjoint();
  return rho / rho.trace().real();
}

double bulk_unitarity_error(const CMatrix &u, const HilbertSpec &space) {
  const CMatrix e = u * u.adjoint() - CMatrix::Identity(u.rows(), u.cols());
  double worst = 0.0;
  for (Index i = 0; i < e.rows(); ++i)
    for (Index j = 0; j < e.cols(); ++j) {
      bool bulk = true;
      for (int m = 0; m < space.modes(); ++m)
        bulk = bulk && space.digit(i, m) <= space.dim(m) - 5 && space.digit(j, m) <= space.dim(m) - 5;
      if (bulk) worst = std::max(worst, std::abs(e(i, j)));
    }
  return worst;
}

}  // namespace

TEST(HilbertSpec, RejectsSmallDimensions) {
  EXPECT_THROW(HilbertSpec({1, 3}), InvalidArgument);
  EXPECT_THROW(HilbertSpec(std::vector<int>{}), InvalidArgument);
  const HilbertSpec s({3, 4});
  EXPECT_EQ(s.total_dim(), 12);
  EXPECT_EQ(s.digit(7, 0), 1);
  EXPECT_EQ(s.digit(7, 1), 3);
}

TEST(Operators, CreationLadder) {
  const HilbertSpec s({3});
  const CMatrix ad = creation_op(s, 0).dense();
  EXPECT_NEAR(std::abs(ad(1, 0) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(ad(2, 1) - std::sqrt(2.0)), 0.0, 1e-15);
  EXPECT_EQ(ad.col(2).norm(), 0.0);
  const CMatrix n = number_op(s, 0).dense();
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(n(k, k).real(), k, 1e-15);
  EXPECT_THROW(creation_op(s, 1), InvalidArgument);
}

TEST(Operators, CreationActsOnSelectedModeOnly) {
  const HilbertSpec s({3, 4});
  const CMatrix bd = creation_op(s, 1).dense();
  // |1,0> -> |1,1>
  EXPECT_NEAR(std::abs(bd(1 * 4 + 1, 1 * 4 + 0) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(bd.cwiseAbs().sum(), 3 * (1 + std::sqrt(2.0) + std::sqrt(3.0)), 1e-12);
}

TEST(Displacement, CoherentStateAndInverse) {
  const int d = 30;
  const HilbertSpec s({d});
  const cplx alpha(0.8, -0.6);
  const CMatrix dm = displacement_op(s, 0, alpha).dense();
  const CVector ref = oracle::coherent(d, alpha);
  EXPECT_LT((dm.col(0) - ref).cwiseAbs().maxCoeff(), 1e-12);
  const CMatrix prod = dm * displacement_op(s, 0, -alpha).dense();
  EXPECT_LT((prod - CMatrix::Identity(d, d)).block(0, 0, d - 10, d - 10).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((displacement_op(s, 0, 0.0).dense() - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Displacement, UnitaryInverseAtAlphaOne) {
  const HilbertSpec s({30});
  const CMatrix p = displacement_op(s, 0, 1.0).dense() * displacement_op(s, 0, -1.0).dense();
  EXPECT_LT(bulk_unitarity_error(p, s), 1e-8);
}

TEST(Displacement, TruncationAdequacyCheck) {
  const HilbertSpec s({12});
  EXPECT_THROW(displacement_op(s, 0, 1.0), TruncationError);  // 1 + 6 + 10 > 12
  EXPECT_NO_THROW(displacement_op(s, 0, 0.3));
}

TEST(PhaseOperator, ActionOnFockAndCoherent) {
  const int d = 30;
  const HilbertSpec s({d});
  EXPECT_LT((phase_op(s, 0, 0.0).dense() - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(std::abs(phase_op(s, 0, std::numbers::pi).dense()(1, 1) + 1.0), 0.0, 1e-15);
  const cplx alpha = 1.2;
  const double phi = 0.7;
  const CVector rotated = phase_op(s, 0, phi).dense() * oracle::coherent(d, alpha);
  EXPECT_LT((rotated - oracle::coherent(d, alpha * std::polar(1.0, phi))).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Beamsplitter, IdentityAtZeroAngle) {
  const HilbertSpec s({6, 6});
  EXPECT_LT((beamsplitter_op(s, 0, 1, 0.0, 0.0, std::numbers::pi).dense() - CMatrix::Identity(36, 36))
                .cwiseAbs()
                .maxCoeff(),
            1e-14);
}

TEST(Beamsplitter, FiftyFiftySinglePhoton) {
  const HilbertSpec s({4, 4});
  const CMatrix b = beamsplitter_op(s, 0, 1, std::numbers::pi / 4, 0.0, std::numbers::pi).dense();
  const CVector out = b.col(1 * 4 + 0);  // |1,0>
  EXPECT_NEAR(std::abs(out(1 * 4 + 0) - 1.0 / std::sqrt(2.0)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(out(0 * 4 + 1) + 1.0 / std::sqrt(2.0)), 0.0, 1e-14);
  EXPECT_NEAR(out.norm(), 1.0, 1e-14);
}

TEST(Beamsplitter, ModeMatrixForArbitraryPhases) {
  const HilbertSpec s({5, 5});
  const double t = 0.37, pt = 0.9, pr = -1.3;
  const CMatrix b = beamsplitter_op(s, 0, 1, t, pt, pr).dense();
  const cplx i(0.0, 1.0);
  const cplx m11 = std::cos(t) * std::exp(i * pt), m12 = std::sin(t) * std::exp(i * pr);
  const cplx m21 = -std::sin(t) * std::exp(-i * pr), m22 = std::cos(t) * std::exp(-i * pt);
  // B a^dag B^dag = m11 a^dag + m12 b^dag, applied to vacuum.
  const CVector from_a = b.col(1 * 5 + 0), from_b = b.col(0 * 5 + 1);
  EXPECT_NEAR(std::abs(from_a(5) - m11), 0.0, 1e-13);
  EXPECT_NEAR(std::abs(from_a(1) - m12), 0.0, 1e-13);
  EXPECT_NEAR(std::abs(from_b(5) - m21), 0.0, 1e-13);
  EXPECT_NEAR(std::abs(from_b(1) - m22), 0.0, 1e-13);
}

TEST(Beamsplitter, TransmittedAmplitudeOfCoherentInput) {
  // |alpha>|0> -> |sqrt(eta) alpha>|-sqrt(1-eta) alpha>
  const int d = 25;
  const HilbertSpec s({d, d});
  const double eta = 0.64, alpha = 1.1;
  const CMatrix b = beamsplitter_op(s, 0, 1, std::acos(std::sqrt(eta)), 0.0, std::numbers::pi).dense();
  CVector vac = CVector::Zero(d);
  vac(0) = 1.0;
  const CVector in = Eigen::kroneckerProduct(oracle::coherent(d, alpha), vac).eval();
  const CVector expect = Eigen::kroneckerProduct(oracle::coherent(d, std::sqrt(eta) * alpha),
                                                 oracle::coherent(d, -std::sqrt(1 - eta) * alpha))
                             .eval();
  EXPECT_LT((b * in - expect).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Beamsplitter, Errors) {
  EXPECT_THROW(beamsplitter_op(HilbertSpec({4, 5}), 0, 1, 0.3, 0, 0), InvalidArgument);
  EXPECT_THROW(beamsplitter_op(HilbertSpec({4, 4}), 1, 1, 0.3, 0, 0), InvalidArgument);
}

TEST(Unitaries, BulkUnitarity) {
  const HilbertSpec s({14, 14});
  EXPECT_LT(bulk_unitarity_error(displacement_op(s, 1, cplx(0.4, 0.2)).dense(), s), 1e-8);
  EXPECT_LT(bulk_unitarity_error(phase_op(s, 0, 1.1).dense(), s), 1e-8);
  EXPECT_LT(bulk_unitarity_error(beamsplitter_op(s, 0, 1, 0.8, 0.4, 2.0).dense(), s), 1e-8);
}

TEST(PartialTrace, BellAndProduct) {
  const HilbertSpec s({2, 2});
  CVector psi = CVector::Zero(4);
  psi(1) = 1.0 / std::sqrt(2.0);
  psi(2) = -1.0 / std::sqrt(2.0);
  const DensityMatrix rho = DensityMatrix::from_ket(Ket(s, psi));
  const CMatrix ra = partial_trace(rho, {0}).matrix();
  EXPECT_LT((ra - 0.5 * CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(partial_trace(rho, {}), InvalidArgument);
  EXPECT_THROW(partial_trace(rho, {2}), InvalidArgument);
}

TEST(PartialTrace, InvertsTensorOnRandomProducts) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const DensityMatrix a(HilbertSpec({3}), random_state(3, 2, rng));
    const DensityMatrix b(HilbertSpec({4}), random_state(4, 3, rng));
    const DensityMatrix ab = tensor(a, b);
    EXPECT_LT((partial_trace(ab, {0}).matrix() - a.matrix()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((partial_trace(ab, {1}).matrix() - b.matrix()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_NEAR(partial_trace(ab, {1}).trace(), ab.trace(), 1e-12);
  }
}

TEST(PartialTrace, ThreeModesKeepsOrder) {
  std::mt19937 rng(3);
  const DensityMatrix a(HilbertSpec({2}), random_state(2, 2, rng));
  const DensityMatrix b(HilbertSpec({3}), random_state(3, 2, rng));
  const DensityMatrix c(HilbertSpec({2}), random_state(2, 1, rng));
  const DensityMatrix abc = tensor(tensor(a, b), c);
  EXPECT_LT((partial_trace(abc, {2, 0}).matrix() - tensor(a, c).matrix()).cwiseAbs().maxCoeff(), 1e-14);
  const Ket k(HilbertSpec({2, 3}), oracle::channel_ket(1.0, 0.0, 3).head(6).normalized());
  EXPECT_LT((partial_trace(k, {0}).matrix() - partial_trace(DensityMatrix::from_ket(k), {0}).matrix())
                .cwiseAbs()
                .maxCoeff(),
            1e-15);
}

TEST(Eigen, SpectrumAndReconstruction) {
  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = 0.3;
  d(1, 1) = 0.7;
  const Spectrum sp = eig_hermitian(d);
  EXPECT_NEAR(sp.values(0), 0.7, 1e-15);
  EXPECT_NEAR(sp.values(1), 0.3, 1e-15);
  std::mt19937 rng(11);
  const CMatrix r = random_state(8, 5, rng);
  const Spectrum s8 = eig_hermitian(r);
  for (int i = 1; i < 8; ++i) EXPECT_GE(s8.values(i - 1), s8.values(i));
  EXPECT_LT((r - s8.vectors * s8.values.cast<cplx>().asDiagonal() * s8.vectors.adjoint()).cwiseAbs().maxCoeff(), 1e-10);
  CMatrix bad = r;
  bad(0, 1) += 1e-6;
  EXPECT_THROW(eig_hermitian(bad), InvalidArgument);
}

TEST(Entropy, BasicValues) {
  CMatrix half = 0.5 * CMatrix::Identity(2, 2);
  EXPECT_NEAR(von_neumann_entropy(half), 1.0, 1e-15);
  CVector v = CVector::Zero(5);
  v(2) = 1.0;
  EXPECT_NEAR(von_neumann_entropy(CMatrix(v * v.adjoint())), 0.0, 1e-15);
  CMatrix neg = CMatrix::Zero(2, 2);
  neg(0, 0) = 1.0 + 1e-11;
  neg(1, 1) = -1e-11;
  EXPECT_NEAR(von_neumann_entropy(neg), 0.0, 1e-9);
  neg(1, 1) = -1e-8;
  EXPECT_THROW(von_neumann_entropy(neg), NumericalIntegrityError);
}

TEST(Entropy, UnitaryInvariance) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const CMatrix r = random_state(10, 4, rng);
    const CMatrix u = random_unitary(10, rng);
    EXPECT_NEAR(von_neumann_entropy(CMatrix(u * r * u.adjoint())), von_neumann_entropy(r), 1e-9);
  }
}

TEST(DensityMatrix, Invariants) {
  CMatrix m = CMatrix::Identity(2, 2) * 0.5;
  m(0, 1) = cplx(0.1, 0.2);
  EXPECT_THROW(DensityMatrix(HilbertSpec({2}), m), NumericalIntegrityError);
  EXPECT_THROW(DensityMatrix(HilbertSpec({3}), CMatrix::Identity(2, 2)), InvalidArgument);
  const DensityMatrix r(HilbertSpec({2}), CMatrix::Identity(2, 2) * 2.0);
  EXPECT_NEAR(r.normalized().trace(), 1.0, 1e-15);
  EXPECT_THROW(Ket(HilbertSpec({2}), CVector::Zero(2)).normalized(), NumericalIntegrityError);
}
