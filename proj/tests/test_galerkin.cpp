#include <gtest/gtest.h>

#include <algorithm>

#include "hillriesz/galerkin.hpp"

using namespace hillriesz;

namespace {

PotentialModel cos4() { return families::trig({{2, 1.0}, {-2, 1.0}}); }
PotentialModel exp4() { return families::trig({{2, 1.0}}); }

std::vector<double> sorted_real(const Eigen::VectorXcd& v) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i).real());
  std::sort(out.begin(), out.end());
  return out;
}

const SpectralPair& pair_at(const PairingResult& r, int m) {
  for (const auto& p : r.pairs)
    if (p.m == m) return p;
  throw std::out_of_range("no pair");
}

}  // namespace

TEST(BuildMatrix, ZeroPotentialIsDiagonal) {
  const auto A = build_matrix(families::zero(), Bc::periodic, 4);
  ASSERT_EQ(A.size(), 9);
  for (int k = -4; k <= 4; ++k)
    for (int l = -4; l <= 4; ++l)
      EXPECT_EQ(A.entries(A.index(k), A.index(l)), k == l ? cplx(std::pow(2.0 * k * pi, 2)) : cplx(0.0));
}

TEST(BuildMatrix, CosineCouplesBothSecondOffDiagonals) {
  const auto A = build_matrix(cos4(), Bc::periodic, 4);
  for (int k = -4; k <= 4; ++k)
    for (int l = -4; l <= 4; ++l) {
      const cplx expect = k == l ? cplx(free_eigenvalue(k, Bc::periodic)) : std::abs(k - l) == 2 ? cplx(1.0) : cplx(0.0);
      EXPECT_EQ(A.entries(A.index(k), A.index(l)), expect);
    }
}

TEST(BuildMatrix, OneSidedExponentialIsNonNormal) {
  const auto A = build_matrix(exp4(), Bc::periodic, 4);
  for (int k = -4; k <= 4; ++k)
    for (int l = -4; l <= 4; ++l)
      if (k != l) {
        EXPECT_EQ(A.entries(A.index(k), A.index(l)), k - l == 2 ? cplx(1.0) : cplx(0.0));
      }
  const Eigen::MatrixXcd commutator = A.entries * A.entries.adjoint() - A.entries.adjoint() * A.entries;
  EXPECT_GT(commutator.norm(), 1.0);
}

TEST(BuildMatrix, BandMirrorsFrequencySupport) {
  const auto q = families::trig({{3, 2.0}, {-5, cplx(0.0, 1.0)}});
  const auto A = build_matrix(q, Bc::antiperiodic, 12);
  for (int k = -12; k <= 12; ++k) {
    EXPECT_EQ(A.entries(A.index(k), A.index(k)).imag(), 0.0);
    EXPECT_EQ(A.entries(A.index(k), A.index(k)).real(), free_eigenvalue(k, Bc::antiperiodic));
    for (int l = -12; l <= 12; ++l) {
      if (k == l) continue;
      EXPECT_EQ(A.entries(A.index(k), A.index(l)), q.coefficient(k - l));
    }
  }
}

TEST(BuildMatrix, RejectsTruncationBelowSupport) {
  EXPECT_THROW(build_matrix(families::trig({{20, 1.0}}), Bc::periodic, 4), TruncationTooSmall);
  EXPECT_THROW(run_galerkin(families::trig({{20, 1.0}}), Bc::periodic, 2, 40), TruncationTooSmall);
}

TEST(SolveSpectrum, ZeroPotentialIsExact) {
  for (Bc bc : {Bc::periodic, Bc::antiperiodic}) {
    const auto s = solve_spectrum(build_matrix(families::zero(), bc, 8));
    std::vector<double> expect;
    for (int k = -8; k <= 8; ++k) expect.push_back(free_eigenvalue(k, bc));
    std::sort(expect.begin(), expect.end());
    const auto got = sorted_real(s.values);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expect[i], 1e-12 * std::max(1.0, expect[i]));
  }
}

TEST(SolveSpectrum, ConstantMeanShiftsTheFreeSpectrum) {
  const auto q = families::trig({{0, cplx(5.0, -2.0)}});
  const auto s = solve_spectrum(build_matrix(q, Bc::periodic, 8));
  EXPECT_EQ(s.shift, cplx(5.0, -2.0));
  for (Eigen::Index i = 0; i < s.values.size(); ++i) EXPECT_NEAR(s.values(i).imag(), -2.0, 1e-12);
  const auto got = sorted_real(s.values);
  EXPECT_NEAR(got.front(), 5.0, 1e-12);
}

TEST(SolveSpectrum, RejectsNonFiniteMatrix) {
  auto A = build_matrix(cos4(), Bc::periodic, 8);
  A.entries(3, 4) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(solve_spectrum(A), SolverFailure);
}

TEST(SolveSpectrum, ResidualContractHolds) {
  for (const auto& q : {cos4(), exp4(), families::asym_power(1.0, 2.0, 1.0, 20)}) {
    const auto A = build_matrix(q, Bc::periodic, 64);
    const auto s = solve_spectrum(A);
    EXPECT_LE(s.max_residual, 1e-10);
    for (Eigen::Index i = 0; i < s.values.size(); i += 7) {
      const auto w = s.vectors.col(i);
      EXPECT_NEAR(w.norm(), 1.0, 1e-13);
      EXPECT_LE((A.entries * w - (s.values(i) - s.shift) * w).norm(), 1e-10 * s.matrix_norm);
    }
  }
}

// 4 pi^2 times the Mathieu characteristic values b_m, a_m at q = 1/(4 pi^2), computed independently.
TEST(SolveSpectrum, CosineMatchesMathieuCharacteristicValues) {
  const std::map<int, std::array<double, 2>> mathieu{
      {1, {38.475261332038855, 40.475241281537954}},
      {2, {157.9115595653155, 157.92422381048416}},
      {3, {355.30733156777933, 355.3073516182746}},
      {4, {631.6555260069529, 631.655526021061}},
      {5, {986.960967823662, 986.9609678236677}}};
  const auto run = run_galerkin(cos4(), Bc::periodic, 10, 64);
  for (const auto& [m, ref] : mathieu) {
    const auto& p = pair_at(run.pairing, m);
    std::array<double, 2> got{p.lambda[0].real(), p.lambda[1].real()};
    std::sort(got.begin(), got.end());
    EXPECT_NEAR(got[0], ref[0], 1e-9 * ref[0]) << "m=" << m;
    EXPECT_NEAR(got[1], ref[1], 1e-9 * ref[1]) << "m=" << m;
    EXPECT_NEAR(p.lambda[0].imag(), 0.0, 1e-8);
  }
}

TEST(UvCoefficients, BasisVectorAndSymmetricCombination) {
  const int K = 6;
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(2 * K + 1);
  e(3 + K) = 1.0;
  auto c = uv_coefficients(e, 3, Bc::periodic);
  EXPECT_EQ(c.u, cplx(1.0));
  EXPECT_EQ(c.v, cplx(0.0));
  EXPECT_EQ(c.tail_norm, 0.0);
  e(-3 + K) = 1.0;
  e /= std::sqrt(2.0);
  c = uv_coefficients(e, 3, Bc::periodic);
  EXPECT_NEAR(c.u.real(), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(c.v.real(), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(c.tail_norm, 0.0, 1e-7);
}

TEST(UvCoefficients, AntiperiodicPartnerSlot) {
  const int K = 6;
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(2 * K + 1);
  e(-3 + K) = 1.0;  // frequency -(2*2+1) pi
  const auto c = uv_coefficients(e, 2, Bc::antiperiodic);
  EXPECT_EQ(c.u, cplx(0.0));
  EXPECT_EQ(c.v, cplx(1.0));
}

TEST(Pairing, ZeroPotentialGivesOrthonormalExponentials) {
  const auto run = run_galerkin(families::zero(), Bc::periodic, 5, 26);
  ASSERT_EQ(run.pairing.pairs.size(), 5u);
  const auto& p = pair_at(run.pairing, 3);
  EXPECT_EQ(p.cls, Multiplicity::double_geometric);
  EXPECT_NEAR(p.lambda[0].real(), 36.0 * pi * pi, 1e-10);
  EXPECT_NEAR(p.lambda[1].real(), 355.3057584392169, 1e-10);
  for (int j = 0; j < 2; ++j) {
    EXPECT_NEAR(std::norm(p.u[j]) + std::norm(p.v[j]), 1.0, 1e-12);
    EXPECT_NEAR(p.tail_norm[j], 0.0, 1e-6);
  }
  const auto ns = normal_system(run.pairing.pairs);
  EXPECT_EQ(ns.jordan_count, 0);
  const auto f = ns.root_functions();
  ASSERT_EQ(f.size(), 10u);
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t k = 0; k < f.size(); ++k) EXPECT_NEAR(std::abs(f[i].dot(f[k])), i == k ? 1.0 : 0.0, 1e-12);
  EXPECT_EQ(run.pairing.low_modes.size(), 1u);
  EXPECT_TRUE(run.pairing.anomalies.empty());
}

TEST(Pairing, CosineFirstOrderSplitAtFirstIndex) {
  // |q_2| = 1 couples slots 1 and -1 directly: split 2 at first order
  const auto run = run_galerkin(cos4(), Bc::periodic, 10, 64);
  const auto& p1 = pair_at(run.pairing, 1);
  EXPECT_EQ(p1.cls, Multiplicity::simple_pair);
  EXPECT_NEAR(p1.split, 2.0, 0.01);
  // m = 2 couples only at second order: split q_2^2/(free(2) - free(0)) = 1/(8 pi^2)
  const auto& p2 = pair_at(run.pairing, 2);
  EXPECT_EQ(p2.cls, Multiplicity::simple_pair);
  EXPECT_NEAR(p2.split, 0.012664, 1e-5);
  EXPECT_NEAR(0.5 * (p2.lambda[0] + p2.lambda[1]).real(), 16.0 * pi * pi, 0.01);
  for (int j = 0; j < 2; ++j) {
    EXPECT_NEAR(std::abs(p2.u[j]), 1.0 / std::sqrt(2.0), 1e-3);
    EXPECT_NEAR(std::abs(p2.v[j]), 1.0 / std::sqrt(2.0), 1e-3);
    EXPECT_LT(p2.tail_norm[j], 0.05);
  }
}

TEST(Pairing, OneSidedExponentialGivesJordanChains) {
  // the chain coupling of pair m is a product of m - 1 inverse level gaps; it drops below
  // the cluster tolerance from m = 3 on and those pairs read as double eigenvalues
  const auto run = run_galerkin(exp4(), Bc::periodic, 5, 26);
  for (const auto& p : run.pairing.pairs) {
    EXPECT_NEAR(p.lambda[0].real(), free_eigenvalue(p.m, Bc::periodic), 1e-9);
    if (p.m > 2) {
      EXPECT_EQ(p.cls, Multiplicity::double_geometric) << "m=" << p.m;
      continue;
    }
    EXPECT_EQ(p.cls, Multiplicity::jordan_chain) << "m=" << p.m;
    ASSERT_TRUE(p.associated_vector.has_value());
    EXPECT_NEAR(std::abs(p.vectors[0].dot(*p.associated_vector)), 0.0, 1e-10);
    EXPECT_LE(p.chain_residual, 1e-9);
  }
  const auto ns = normal_system(run.pairing.pairs);
  EXPECT_EQ(ns.jordan_count, 2);
  EXPECT_EQ(ns.jordan_count_from(2), 1);
}

TEST(Pairing, StrongPotentialIsAmbiguous) {
  const auto q = families::trig({{2, 400.0}, {-2, 400.0}});
  try {
    run_galerkin(q, Bc::periodic, 4);
    FAIL() << "expected PairingAmbiguity";
  } catch (const PairingAmbiguity& e) {
    EXPECT_FALSE(e.offending.empty());
  }
}

TEST(Pairing, RequiresTruncationMargin) {
  const auto A = build_matrix(cos4(), Bc::periodic, 30);
  const auto s = solve_spectrum(A);
  EXPECT_THROW(pair_eigenvalues(s, A, 10), TruncationTooSmall);
}

TEST(Pairing, GapAndTolerance) {
  EXPECT_DOUBLE_EQ(pairing_gap(3, Bc::periodic), 0.5 * (36.0 - 16.0) * pi * pi);
  EXPECT_DOUBLE_EQ(pairing_gap(0, Bc::periodic), 0.5 * 4.0 * pi * pi);
  EXPECT_DOUBLE_EQ(pairing_gap(1, Bc::antiperiodic), 0.5 * (9.0 - 1.0) * pi * pi);
  Thresholds th;
  EXPECT_NEAR(cluster_tolerance(1e4, th), 100.0 * std::sqrt(std::numeric_limits<double>::epsilon() * 1e4), 1e-18);
}

TEST(Pairing, EigenvaluesAreIsolatedFromOtherFreeLevels) {
  const auto q = families::asym_power(1.0, 2.0, 1.0, 10);
  for (Bc bc : {Bc::periodic, Bc::antiperiodic}) {
    const auto run = run_galerkin(q, bc, 12, 64);
    for (const auto& p : run.pairing.pairs)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k <= 40; ++k) {
          if (k == p.m) continue;
          EXPECT_GT(std::abs(p.lambda[j] - free_eigenvalue(k, bc)), pairing_gap(p.m, bc) / 2);
        }
  }
}

TEST(Pairing, UnitNormAndBalanceForEveryPair) {
  const auto q = families::asym_power(1.0, 2.0, 1.0, 10);
  const auto run = run_galerkin(q, Bc::periodic, 12, 64);
  for (const auto& p : run.pairing.pairs)
    for (int j = 0; j < 2; ++j) {
      EXPECT_NEAR(p.vectors[j].norm(), 1.0, 1e-12);
      EXPECT_NEAR(std::norm(p.u[j]) + std::norm(p.v[j]) + p.tail_norm[j] * p.tail_norm[j], 1.0, 1e-12);
    }
}

TEST(Pairing, TailNormDecaysForTrigPotentials) {
  for (const auto& q : {cos4(), families::trig({{2, 1.0}, {-2, 1.0}, {4, 0.5}, {-6, cplx(0.0, 0.3)}})}) {
    const auto run = run_galerkin(q, Bc::periodic, 20, 64);
    std::map<int, double> tails;
    for (const auto& p : run.pairing.pairs)
      if (p.m >= 5) tails[p.m] = std::max(p.tail_norm[0], p.tail_norm[1]);
    EXPECT_LE(loglog_slope(tails), -0.8);
  }
}

TEST(Pairing, StableUnderDoubledTruncation) {
  const auto q = families::asym_power(1.0, 2.0, 1.0, 12);
  const auto a = run_galerkin(q, Bc::periodic, 20, 64);
  const auto b = run_galerkin(q, Bc::periodic, 20, 128);
  for (int m = 1; m <= 10; ++m) {
    const auto& p = pair_at(a.pairing, m);
    const auto& r = pair_at(b.pairing, m);
    const double direct = std::max(std::abs(p.lambda[0] - r.lambda[0]), std::abs(p.lambda[1] - r.lambda[1]));
    const double crossed = std::max(std::abs(p.lambda[0] - r.lambda[1]), std::abs(p.lambda[1] - r.lambda[0]));
    EXPECT_LE(std::min(direct, crossed), 1e-8) << "m=" << m;
  }
}

TEST(Pairing, NonSimpleVectorsAreOrthogonal) {
  for (const auto& q : {families::zero(), exp4(), families::one_sided(1.0, 1.0, 12)}) {
    const auto run = run_galerkin(q, Bc::periodic, 10, 96);
    const auto ns = normal_system(run.pairing.pairs);
    for (const auto& p : ns.pairs) {
      if (p.cls == Multiplicity::simple_pair) continue;
      EXPECT_LE(std::abs(p.vectors[0].dot(p.vectors[1])), 1e-10) << "m=" << p.m;
    }
  }
}

TEST(Pairing, OneSidedJordanBalance) {
  const auto run = run_galerkin(families::one_sided(1.0, 1.0, 12), Bc::periodic, 10, 96);
  std::map<int, double> scaled;
  for (const auto& p : run.pairing.pairs) {
    ASSERT_EQ(p.cls, Multiplicity::jordan_chain) << "m=" << p.m;
    scaled[p.m] = std::abs(p.u[0] * p.v[0]) * p.m * p.m;
  }
  for (auto [m, v] : scaled) EXPECT_LT(v, 1.0) << "m=" << m;
}

TEST(Classification, NearDegeneracyOfTheWholeSpectrumIsIndeterminate) {
  // an exactly repeated eigenvalue outside the pair makes the invariant subspace ill-posed
  GalerkinMatrix A;
  A.K = 2;
  A.entries = Eigen::MatrixXcd::Zero(5, 5);
  A.entries.diagonal() << 1.0, 4.0, 4.0, 4.0, 9.0;
  const auto s = solve_spectrum(A);
  std::vector<int> at4;
  for (int i = 0; i < 5; ++i)
    if (std::abs(s.values(i) - 4.0) < 1e-9) at4.push_back(i);
  ASSERT_EQ(at4.size(), 3u);
  const auto p = classify_multiplicity(s, A, 1, at4[0], at4[1]);
  EXPECT_TRUE(p.indeterminate);
  EXPECT_FALSE(p.is_simple());
  const auto ns = normal_system({p});
  EXPECT_EQ(ns.excluded, std::vector<int>{1});
  EXPECT_EQ(ns.warnings.size(), 1u);
  EXPECT_TRUE(ns.pairs.empty());
}
