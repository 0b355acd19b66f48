#include <gtest/gtest.h>

#include <random>

#include "qcest/qmath.hpp"

using namespace qcest;

namespace {

double max_diff(const ComplexMatrix& a, const ComplexMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

ComplexMatrix diag(std::initializer_list<double> v) {
  ComplexMatrix m = ComplexMatrix::Zero(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) m(i, i) = x, ++i;
  return m;
}

} // namespace

TEST(StateVector, CanonicalPhaseAndNorm) {
  ComplexVector v(2);
  v << cplx(0, 1) / std::sqrt(2.0), cplx(1, 0) / std::sqrt(2.0);
  const StateVector s(v);
  EXPECT_DOUBLE_EQ(s(0).imag(), 0.0);
  EXPECT_GT(s(0).real(), 0.0);
  EXPECT_NEAR(std::abs(s(1) - cplx(0, -1) / std::sqrt(2.0)), 0.0, 1e-15);

  // amplitudes below 1e-12 do not fix the phase
  ComplexVector tiny(2);
  tiny << 1e-13, cplx(0.0, 1.0);
  const StateVector t = StateVector::normalized(tiny);
  EXPECT_EQ(t(1).imag(), 0.0);
  EXPECT_GT(t(1).real(), 0.0);

  ComplexVector bad(2);
  bad << 0.9, 0.0;
  EXPECT_THROW(StateVector{bad}, InvariantError);
}

TEST(HermitianOperator, DriftIsSymmetrizedOrRejected) {
  ComplexMatrix m(2, 2);
  m << 1.0, cplx(0.5, 1e-13), cplx(0.5, 0.0), 2.0;
  const HermitianOperator h(m);
  EXPECT_EQ(h(0, 1), std::conj(h(1, 0)));
  m(0, 1) = cplx(0.5, 1e-6);
  EXPECT_THROW(HermitianOperator{m}, InvariantError);
  EXPECT_THROW(HermitianOperator{ComplexMatrix::Zero(2, 3)}, DimensionError);
}

TEST(DimsLayout, StripsUnitFactors) {
  const DimsLayout l({2, 1, 3});
  EXPECT_EQ(l.size(), 2);
  EXPECT_EQ(l.dim(), 6);
  EXPECT_THROW(DimsLayout({0, 2}), DimensionError);
}

TEST(Kron, Examples) {
  EXPECT_LT(max_diff(kron(diag({1, 2}), ComplexMatrix::Identity(2, 2)), diag({1, 1, 2, 2})), 1e-15);
  ComplexVector psi(2);
  psi << 1, 0;
  ComplexVector expect(4);
  expect << 1, 0, 0, 0;
  EXPECT_EQ(kron(psi, psi), expect);

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const ComplexMatrix a = random_hermitian(3, rng);
    const ComplexMatrix b = random_hermitian(3, rng);
    EXPECT_NEAR(std::abs(kron(a, b).trace() - a.trace() * b.trace()), 0.0, 1e-12);
  }
}

TEST(PartialTrace, Examples) {
  const ComplexMatrix phi = max_entangled(2).projector();
  EXPECT_LT(max_diff(partial_trace(phi, DimsLayout({2, 2}), {0}), 0.5 * ComplexMatrix::Identity(2, 2)), 1e-15);

  std::mt19937_64 rng(2);
  const ComplexMatrix a = random_hermitian(3, rng);
  const ComplexMatrix b = random_hermitian(2, rng);
  EXPECT_LT(max_diff(partial_trace(kron(a, b), DimsLayout({3, 2}), {0}), b.trace() * a), 1e-12);
  EXPECT_LT(max_diff(partial_trace(kron(a, b), DimsLayout({3, 2}), {1}), a.trace() * b), 1e-12);
  EXPECT_THROW(partial_trace(kron(a, b), DimsLayout({3, 2}), {2}), DimensionError);
}

TEST(PartialTrace, ExtensionOfSeparableState) {
  // sum_i q_i alpha_i (x) gamma_i^{(x)3} traced down to one gamma copy.
  std::mt19937_64 rng(3);
  const double q[2] = {0.3, 0.7};
  ComplexMatrix ext = ComplexMatrix::Zero(16, 16);
  ComplexMatrix expect = ComplexMatrix::Zero(4, 4);
  for (double qi : q) {
    const ComplexMatrix alpha = random_density(2, rng);
    const ComplexMatrix gamma = random_density(2, rng);
    ext += qi * kron(alpha, kron_power(gamma, 3));
    expect += qi * kron(alpha, gamma);
  }
  EXPECT_LT(max_diff(partial_trace(ext, DimsLayout({2, 2, 2, 2}), {0, 1}), expect), 1e-12);
}

TEST(PartialTrace, OverAllFactorsIsTrace) {
  std::mt19937_64 rng(4);
  const ComplexMatrix x = random_hermitian(12, rng);
  const ComplexMatrix s = partial_trace(x, DimsLayout({2, 3, 2}), {});
  ASSERT_EQ(s.rows(), 1);
  EXPECT_NEAR(std::abs(s(0, 0) - x.trace()), 0.0, 1e-12);
}

TEST(PartialTranspose, Examples) {
  std::mt19937_64 rng(5);
  const ComplexMatrix x = random_hermitian(4, rng);
  const DimsLayout l({2, 2});
  EXPECT_LT(max_diff(partial_transpose(partial_transpose(x, l, 0), l, 0), x), 1e-12);

  const ComplexMatrix a = random_hermitian(2, rng);
  const ComplexMatrix b = random_hermitian(2, rng);
  EXPECT_LT(max_diff(partial_transpose(kron(a, b), l, 0), kron(ComplexMatrix(a.transpose()), b)), 1e-15);

  const ComplexMatrix pt = partial_transpose(max_entangled(2).projector(), l, 0);
  // Oracle: PT of |Phi+><Phi+| is SWAP/2 with eigenvalues {1/2 x3, -1/2}.
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(pt);
  EXPECT_NEAR(es.eigenvalues()(0), -0.5, 1e-12);
  EXPECT_NEAR(min_eigenvalue(pt), -0.5, 1e-12);

  const ComplexMatrix y = random_hermitian(6, rng);
  const ComplexMatrix yt = partial_transpose(y, DimsLayout({2, 3}), 1);
  EXPECT_NEAR(std::abs(yt.trace() - y.trace()), 0.0, 1e-12);
  EXPECT_LT(max_diff(yt, yt.adjoint()), 1e-12);
  EXPECT_THROW(partial_transpose(y, DimsLayout({2, 3}), 2), DimensionError);
}

TEST(MaxEntangled, Examples) {
  const StateVector p = max_entangled(2);
  const double h = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(p(0) - h), 0.0, 1e-15);
  EXPECT_EQ(p(1), cplx(0.0));
  EXPECT_EQ(p(2), cplx(0.0));
  EXPECT_NEAR(std::abs(p(3) - h), 0.0, 1e-15);
  for (int d : {2, 3, 4}) EXPECT_NEAR(max_entangled(d).amplitudes().norm(), 1.0, 1e-15);
  EXPECT_LT(max_diff(partial_trace(max_entangled(3).projector(), DimsLayout({3, 3}), {0}),
                     ComplexMatrix::Identity(3, 3) / 3.0),
            1e-15);
  EXPECT_THROW(max_entangled(1), DimensionError);
}

TEST(Eigh, Examples) {
  const auto d = eigh(diag({3, 1, 2}));
  EXPECT_NEAR(d.values(0), 1, 1e-15);
  EXPECT_NEAR(d.values(1), 2, 1e-15);
  EXPECT_NEAR(d.values(2), 3, 1e-15);

  ComplexMatrix x(2, 2);
  x << 0, 1, 1, 0;
  const auto dx = eigh(x);
  EXPECT_NEAR(dx.values(0), -1, 1e-15);
  EXPECT_NEAR(dx.values(1), 1, 1e-15);

  std::mt19937_64 rng(6);
  const ComplexMatrix h = random_hermitian(6, rng);
  const auto dh = eigh(h);
  const ComplexMatrix rebuilt = dh.vectors * dh.values.asDiagonal() * dh.vectors.adjoint();
  EXPECT_LT(max_diff(rebuilt, h), 1e-11);

  ComplexMatrix nh(2, 2);
  nh << 0, 1, 0, 0;
  EXPECT_THROW(eigh(nh), InvariantError);
}

TEST(Eigh, PsdSpectrumIsNonNegative) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) EXPECT_GE(eigh(random_density(5, rng)).values(0), -1e-11);
}

TEST(SymIsometry, Examples) {
  const ComplexMatrix v = sym_isometry(2, 2);
  ASSERT_EQ(v.rows(), 4);
  ASSERT_EQ(v.cols(), 3);
  ComplexMatrix expect = ComplexMatrix::Zero(4, 3);
  expect(0, 0) = 1;
  expect(1, 1) = expect(2, 1) = 1 / std::sqrt(2.0);
  expect(3, 2) = 1;
  EXPECT_LT(max_diff(v, expect), 1e-15);

  const ComplexMatrix v5 = sym_isometry(2, 5);
  EXPECT_LT(max_diff(v5.adjoint() * v5, ComplexMatrix::Identity(6, 6)), 1e-12);
  const ComplexMatrix v3 = sym_isometry(2, 3);
  EXPECT_NEAR((v3 * v3.adjoint()).trace().real(), 4.0, 1e-12);
  EXPECT_EQ(binomial(3 + 2 - 1, 2 - 1), 4u);
}

TEST(SymIsometry, ImageIsPermutationInvariant) {
  for (auto [d, n] : {std::pair{2, 3}, std::pair{3, 3}, std::pair{2, 4}}) {
    const ComplexMatrix v = sym_isometry(d, n);
    const ComplexMatrix proj = v * v.adjoint();
    for (int a = 0; a + 1 < n; ++a) {
      Permutation t(static_cast<std::size_t>(n));
      std::iota(t.begin(), t.end(), 0);
      std::swap(t[static_cast<std::size_t>(a)], t[static_cast<std::size_t>(a + 1)]);
      const ComplexMatrix p = perm_operator(d, n, t);
      EXPECT_LT(max_diff(p * proj * p.adjoint(), proj), 1e-12);
    }
  }
}

TEST(SymIsometry, CapIsEnforced) {
  EXPECT_THROW(sym_isometry(2, 13), CapExceeded);
  EXPECT_THROW(SymmetricSubspace(1, 2), DimensionError);
}

TEST(SymReduce, MatchesExplicitPartialTrace) {
  // Oracle: embed through the isometry, then trace all copies but the first.
  std::mt19937_64 rng(8);
  for (auto [d, n] : {std::pair{2, 2}, std::pair{2, 4}, std::pair{3, 3}}) {
    const SymmetricSubspace sym(d, n);
    const ComplexMatrix v = sym.isometry();
    const int d_ref = 2;
    const ComplexMatrix x = random_hermitian(d_ref * sym.dim(), rng);
    const ComplexMatrix big = kron(ComplexMatrix::Identity(d_ref, d_ref), v) * x *
                              kron(ComplexMatrix::Identity(d_ref, d_ref), v).adjoint();
    std::vector<int> f{d_ref};
    f.insert(f.end(), static_cast<std::size_t>(n), d);
    const ComplexMatrix expect = partial_trace(big, DimsLayout(f), {0, 1});
    EXPECT_LT(max_diff(sym_reduce_one(x, d_ref, sym), expect), 1e-12);

    const ComplexMatrix w = random_hermitian(d_ref * d, rng);
    const cplx lhs = (w * sym_reduce_one(x, d_ref, sym)).trace();
    const cplx rhs = (sym_reduce_one_adjoint(w, d_ref, sym) * x).trace();
    EXPECT_NEAR(std::abs(lhs - rhs), 0.0, 1e-11);
  }
}

TEST(PermOperator, Examples) {
  const ComplexMatrix swap = perm_operator(2, 2, {1, 0});
  ComplexVector e01 = ComplexVector::Zero(4), e10 = ComplexVector::Zero(4);
  e01(1) = 1;
  e10(2) = 1;
  EXPECT_EQ(swap * e01, e10);
  EXPECT_THROW(perm_operator(2, 2, {0, 0}), DimensionError);
  EXPECT_THROW(perm_operator(2, 3, {0, 1}), DimensionError);
}

TEST(PermOperator, RepresentationAndUnitarity) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 6; ++trial) {
    Permutation p{0, 1, 2}, s{0, 1, 2};
    std::shuffle(p.begin(), p.end(), rng);
    std::shuffle(s.begin(), s.end(), rng);
    const ComplexMatrix pp = perm_operator(2, 3, p);
    EXPECT_LT(max_diff(pp * perm_operator(2, 3, s), perm_operator(2, 3, compose(p, s))), 1e-15);
    EXPECT_LT(max_diff(pp * pp.adjoint(), ComplexMatrix::Identity(8, 8)), 1e-12);

    // factor k moves to slot p[k]
    const StateVector f[3] = {random_state(2, rng), random_state(2, rng), random_state(2, rng)};
    const ComplexVector in = kron(kron(f[0].amplitudes(), f[1].amplitudes()), f[2].amplitudes());
    ComplexVector slots[3];
    for (int k = 0; k < 3; ++k) slots[p[static_cast<std::size_t>(k)]] = f[k].amplitudes();
    const ComplexVector out = kron(kron(slots[0], slots[1]), slots[2]);
    EXPECT_LT((pp * in - out).cwiseAbs().maxCoeff(), 1e-14);
  }
}
