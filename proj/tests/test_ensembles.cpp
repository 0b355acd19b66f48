#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "qcest/ensembles.hpp"
#include "support.hpp"

using namespace qcest;

namespace {

double max_diff(const ComplexMatrix& a, const ComplexMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

ComplexMatrix first_moment(const Ensemble& e) {
  ComplexMatrix m = ComplexMatrix::Zero(e.d_target(), e.d_target());
  for (const auto& it : e.items()) m += it.weight * it.target.projector();
  return m;
}

const char* kBuiltins[] = {"orthogonal", "pair", "bb84", "tetra", "octa", "equator"};

} // namespace

TEST(Builtins, Orthogonal) {
  const auto e = make_builtin("orthogonal");
  ASSERT_EQ(e.items().size(), 2u);
  EXPECT_DOUBLE_EQ(e.items()[0].weight, 0.5);
  EXPECT_EQ(e.items()[0].target.amplitudes().dot(e.items()[1].target.amplitudes()), cplx(0.0));
}

TEST(Builtins, DesignFirstMoment) {
  for (const char* name : {"tetra", "octa"})
    EXPECT_LT(max_diff(first_moment(make_builtin(name)), 0.5 * ComplexMatrix::Identity(2, 2)), 1e-12) << name;
}

TEST(Builtins, TetraGeometry) {
  // Oracle: tetrahedron vertices have pairwise Bloch angle with cos = -1/3,
  // so |<a|b>|^2 = (1 - 1/3)/2 = 1/3.
  const auto e = make_builtin("tetra");
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = a + 1; b < 4; ++b)
      EXPECT_NEAR(std::norm(e.items()[a].target.amplitudes().dot(e.items()[b].target.amplitudes())), 1.0 / 3, 1e-12);
}

TEST(Builtins, OctaThirdMoment) {
  // Oracle: symmetric projector as the average of all factor permutations.
  ComplexMatrix sym = ComplexMatrix::Zero(8, 8);
  Permutation p{0, 1, 2};
  int count = 0;
  do {
    sym += perm_operator(2, 3, p);
    ++count;
  } while (std::next_permutation(p.begin(), p.end()));
  sym /= count;
  ComplexMatrix third = ComplexMatrix::Zero(8, 8);
  const auto octa = make_builtin("octa");
  for (const auto& it : octa.items()) third += it.weight * kron_power(it.target.projector(), 3);
  EXPECT_LT(max_diff(third, sym / 4.0), 1e-12);
}

TEST(Builtins, EquatorOverlaps) {
  const auto e = make_builtin("equator", {{"M", 3}});
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = a + 1; b < 3; ++b)
      EXPECT_NEAR(std::norm(e.items()[a].target.amplitudes().dot(e.items()[b].target.amplitudes())), 0.25, 1e-12);
  EXPECT_EQ(e.label(), "equator:3");
}

TEST(Builtins, EquatorFidelityOperatorIndependentOfM) {
  const auto a = fidelity_operator(make_builtin_from_spec("equator:3")).matrix();
  const auto b = fidelity_operator(make_builtin_from_spec("equator:8")).matrix();
  EXPECT_LT(max_diff(a, b), 1e-12);
}

TEST(Builtins, PairOverlap) {
  for (double c : {0.0, 0.3, 0.5, 0.9}) {
    const auto e = make_builtin("pair", {{"c", c}});
    const auto& it = e.items();
    EXPECT_NEAR(std::abs(it[0].target.amplitudes().dot(it[1].target.amplitudes())), c, 1e-12);
    EXPECT_EQ(it[0].target.amplitudes().imag().cwiseAbs().maxCoeff(), 0.0);
  }
  EXPECT_EQ(make_builtin_from_spec("pair:0.3").label(), "pair:0.3");
}

TEST(Builtins, Errors) {
  EXPECT_THROW(make_builtin("nosuch"), UsageError);
  EXPECT_THROW(make_builtin("equator", {{"M", 2}}), UsageError);
  EXPECT_THROW(make_builtin("equator", {{"M", 3.5}}), UsageError);
  EXPECT_THROW(make_builtin("pair", {{"c", 1.0}}), UsageError);
  EXPECT_THROW(make_builtin("pair", {{"c", -0.1}}), UsageError);
  EXPECT_THROW(make_builtin_from_spec("tetra:3"), UsageError);
  EXPECT_THROW(make_builtin_from_spec("pair:x"), UsageError);
  try {
    make_builtin_from_spec("nosuch");
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown builtin"), std::string::npos);
  }
}

TEST(LiftCopies, Examples) {
  const auto tetra = make_builtin("tetra");
  EXPECT_EQ(lift_copies(tetra, 1), tetra);

  const auto o2 = lift_copies(make_builtin("orthogonal"), 2);
  ComplexVector e00 = ComplexVector::Zero(4), e11 = ComplexVector::Zero(4);
  e00(0) = 1;
  e11(3) = 1;
  EXPECT_EQ(o2.items()[0].input.amplitudes(), e00);
  EXPECT_EQ(o2.items()[1].input.amplitudes(), e11);
  EXPECT_EQ(o2.d_in(), 4);
  EXPECT_EQ(o2.d_target(), 2);

  const auto t2 = lift_copies(tetra, 2);
  for (std::size_t a = 0; a < 4; ++a) {
    EXPECT_NEAR(t2.items()[a].input.amplitudes().norm(), 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(t2.items()[a].weight, tetra.items()[a].weight);
    for (std::size_t b = 0; b < 4; ++b) {
      const double lifted = std::abs(t2.items()[a].input.amplitudes().dot(t2.items()[b].input.amplitudes()));
      const double single = std::abs(tetra.items()[a].target.amplitudes().dot(tetra.items()[b].target.amplitudes()));
      EXPECT_NEAR(lifted, single * single, 1e-12);
    }
  }
  EXPECT_THROW(lift_copies(t2, 2), InvariantError);
  EXPECT_THROW(lift_copies(tetra, 13), CapExceeded);
}

TEST(FidelityOperator, UnitTracePsdAndIdentityChannel) {
  for (const char* name : kBuiltins) {
    const auto e = make_builtin(name);
    const auto omega = fidelity_operator(e).matrix();
    EXPECT_NEAR(omega.trace().real(), 1.0, 1e-12) << name;
    EXPECT_GE(min_eigenvalue(omega), -1e-12) << name;
    const ComplexMatrix phi = max_entangled(2).projector();
    EXPECT_NEAR(2.0 * (omega * phi).trace().real(), 1.0, 1e-12) << name;
  }
  EXPECT_NEAR(fidelity_operator(lift_copies(make_builtin("octa"), 2)).trace(), 1.0, 1e-12);
}

TEST(FidelityOperator, TetraClosedForm) {
  const ComplexMatrix expect = (ComplexMatrix::Identity(4, 4) + 2.0 * max_entangled(2).projector()) / 6.0;
  EXPECT_LT(max_diff(fidelity_operator(make_builtin("tetra")).matrix(), expect), 1e-12);
}

TEST(BlindGuess, Examples) {
  EXPECT_NEAR(blind_guess_value(make_builtin("orthogonal")), 0.5, 1e-12);
  EXPECT_NEAR(blind_guess_value(make_builtin("tetra")), 0.5, 1e-12);
  EXPECT_NEAR(blind_guess_value(make_builtin("pair", {{"c", 0.5}})), 0.75, 1e-12);
}

TEST(EnsembleInvariants, Rejected) {
  const auto s0 = StateVector::basis(2, 0);
  EXPECT_THROW(Ensemble("x", {{0.5, s0, s0}, {0.6, s0, s0}}), InvariantError);
  EXPECT_THROW(Ensemble("x", {{1.0, s0, s0}, {0.0, s0, s0}}), InvariantError);
  EXPECT_THROW(Ensemble("x", {{0.5, s0, s0}, {0.5, StateVector::basis(3, 0), s0}}), DimensionError);
}

TEST(EnsembleFiles, RoundTrip) {
  for (const char* spec : {"tetra", "octa", "equator:5", "pair:0.3", "bb84"}) {
    const auto e = make_builtin_from_spec(spec);
    std::string file = spec;
    std::replace(file.begin(), file.end(), ':', '_');
    const auto path = qcest::testing::temp_path(file + ".json");
    save_ensemble(e, path);
    EXPECT_EQ(load_ensemble(path), e) << spec;
  }
  const auto lifted = lift_copies(make_builtin("octa"), 2);
  const auto path = qcest::testing::temp_path("octa2.json");
  save_ensemble(lifted, path);
  EXPECT_EQ(load_ensemble(path), lifted);
  const auto text = qcest::testing::slurp(path);
  EXPECT_NE(text.find("\"input\""), std::string::npos);
}

TEST(EnsembleFiles, SchemaErrors) {
  const auto path = qcest::testing::temp_path("bad.json");
  qcest::testing::spit(path, R"({"label":"w","d_in":2,"d_target":2,"states":[
    {"p":0.5,"target":[[1,0],[0,0]]},{"p":0.6,"target":[[0,0],[1,0]]}]})");
  EXPECT_THROW(load_ensemble(path), SchemaError);
  qcest::testing::spit(path, R"({"label":"n","d_in":2,"d_target":2,"states":[
    {"p":0.5,"target":[[0.9,0],[0,0]]},{"p":0.5,"target":[[0,0],[1,0]]}]})");
  EXPECT_THROW(load_ensemble(path), SchemaError);
  qcest::testing::spit(path, R"({"label":"d","d_in":4,"d_target":2,"states":[{"p":1,"target":[[1,0],[0,0]]}]})");
  EXPECT_THROW(load_ensemble(path), SchemaError);
  qcest::testing::spit(path, "{not json");
  EXPECT_THROW(load_ensemble(path), SchemaError);
  EXPECT_THROW(load_ensemble(qcest::testing::temp_path("missing.json")), SchemaError);
}

TEST(EnsembleFiles, SmallNormDriftIsRepaired) {
  const auto path = qcest::testing::temp_path("drift.json");
  qcest::testing::spit(path, R"({"label":"d","d_in":2,"d_target":2,"states":[
    {"p":0.5,"target":[[1.0000000001,0],[0,0]]},{"p":0.5,"target":[[0,0],[1,0]]}]})");
  const auto e = load_ensemble(path);
  EXPECT_NEAR(e.items()[0].target.amplitudes().norm(), 1.0, 1e-15);
}
