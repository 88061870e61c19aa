#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "pepakit/ptnet.hpp"

using namespace pepakit;

namespace {

// y^T C computed directly from the matrix entries.
bool annihilates(const IntMatrix& c, const std::vector<std::int64_t>& y) {
  for (std::size_t t = 0; t < c.cols(); ++t) {
    std::int64_t s = 0;
    for (std::size_t p = 0; p < c.rows(); ++p) s += y[p] * c(p, t);
    if (s != 0) return false;
  }
  return true;
}

bool contains(const std::vector<PInvariant>& invs, const std::vector<std::int64_t>& y) {
  for (const auto& i : invs)
    if (i.y == y) return true;
  return false;
}

}  // namespace

TEST(PTNet, Model1Shape) {
  const PTSystem net = to_ptnet(parse_model(fixtures::model1(2, 2)));
  EXPECT_EQ(net.places.size(), 4u);
  EXPECT_EQ(net.transitions.size(), 3u);
  EXPECT_EQ(net.m0, (NumericalState{2, 0, 2, 0}));
  const Derivation d = fixtures::derive(fixtures::model1(2, 2));
  EXPECT_EQ(net.incidence(), d.matrices.c);
}

TEST(PTNet, Model2Shape) {
  const PTSystem net = to_ptnet(parse_model(fixtures::model2(1, 1)));
  EXPECT_EQ(net.places.size(), 5u);
  EXPECT_EQ(net.transitions.size(), 6u);
}

TEST(PTNet, SelfLoop) {
  const PTSystem net = to_ptnet(parse_model(fixtures::kSelfLoop));
  EXPECT_EQ(net.pre(0, 0), 1);
  EXPECT_EQ(net.post(0, 0), 1);
}

TEST(PTNet, FiringMatchesRateSupport) {
  for (const std::string& text : {fixtures::model1(2, 2), fixtures::model2(2, 2)}) {
    const Derivation d = fixtures::derive(text);
    const PTSystem net = to_ptnet(d.matrices, initial_state(d.matrices.derivatives));
    const TransitionSystem ts = reachable(d.matrices, d.rates, net.m0);
    for (const auto& m : ts.states) {
      for (std::size_t t = 0; t < net.transitions.size(); ++t) {
        std::vector<double> x(m.begin(), m.end());
        const bool positive = rate_function(d.matrices, d.rates, x, t) > 0.0;
        EXPECT_EQ(net.enabled(m, t), positive);
        if (positive) EXPECT_TRUE(ts.find(net.fire(m, t)));
      }
    }
  }
}

TEST(PInvariants, Model1) {
  const PTSystem net = to_ptnet(parse_model(fixtures::model1(2, 3)));
  const auto invs = p_invariants(net);
  ASSERT_EQ(invs.size(), 2u);
  EXPECT_EQ(invs[0].y, (std::vector<std::int64_t>{1, 1, 0, 0}));
  EXPECT_EQ(invs[0].value, 2);
  EXPECT_EQ(invs[1].y, (std::vector<std::int64_t>{0, 0, 1, 1}));
  EXPECT_EQ(invs[1].value, 3);
  for (const auto& i : invs) EXPECT_TRUE(annihilates(net.incidence(), i.y));
}

TEST(PInvariants, Model2) {
  const PTSystem net = to_ptnet(parse_model(fixtures::model2(2, 2)));
  const auto invs = p_invariants(net);
  EXPECT_TRUE(contains(invs, {1, 1, 1, 0, 0}));
  EXPECT_TRUE(contains(invs, {0, 0, 0, 1, 1}));
  for (const auto& i : invs) EXPECT_TRUE(annihilates(net.incidence(), i.y));
}

TEST(PInvariants, ZeroColumnsGiveUnitVectors) {
  const PTSystem net = to_ptnet(parse_model("P = (a, 1).P;\nQ = (b, 1).Q;\nsystem P[1] || Q[2];\n"));
  const auto invs = p_invariants(net);
  ASSERT_EQ(invs.size(), 2u);
  EXPECT_EQ(invs[0].y, (std::vector<std::int64_t>{1, 0}));
  EXPECT_EQ(invs[1].y, (std::vector<std::int64_t>{0, 1}));
}

// Two places that only move together give the combined invariant, and no
// non-minimal combinations survive.
TEST(PInvariants, MinimalSupport) {
  const PTSystem net =
      to_ptnet(parse_model("A = (x, 1).B;\nB = (y, 1).C;\nC = (z, 1).A + (w, 1).B;\nsystem A[2];\n"));
  const auto invs = p_invariants(net);
  ASSERT_EQ(invs.size(), 1u);
  EXPECT_EQ(invs[0].y, (std::vector<std::int64_t>{1, 1, 1}));
  EXPECT_EQ(invs[0].value, 2);
}

TEST(PInvariants, TypeIndicatorsAlwaysPresent) {
  const PepaModel m = parse_model(fixtures::kPassive);
  const PTSystem net = to_ptnet(m);
  const auto invs = p_invariants(net);
  EXPECT_TRUE(contains(invs, {1, 1, 0}));
  EXPECT_TRUE(contains(invs, {0, 0, 1}));
}

TEST(PInvariants, RowCap) {
  const PTSystem net = to_ptnet(parse_model(fixtures::model2(1, 1)));
  EXPECT_THROW(p_invariants(net, 1), AnalysisError);
}

TEST(CheckInvariants, HoldOnReachableStates) {
  const Derivation d = fixtures::derive(fixtures::model1(2, 2));
  const PTSystem net = to_ptnet(d.matrices, initial_state(d.matrices.derivatives));
  const TransitionSystem ts = reachable(d.matrices, d.rates, net.m0);
  const auto report = check_invariants(ts, p_invariants(net));
  EXPECT_TRUE(report.ok());
  EXPECT_EQ(report.states_checked, 9u);
  EXPECT_TRUE(check_invariants(ts, {}).ok());
}

TEST(CheckInvariants, PerturbedMatrixDetected) {
  const Derivation d = fixtures::derive(fixtures::model1(2, 2));
  const PTSystem net = to_ptnet(d.matrices, initial_state(d.matrices.derivatives));
  const auto invs = p_invariants(net);
  // task1 now consumes a server without producing Sever2.
  ActivityMatrices broken = d.matrices;
  broken.c(3, 0) = 0;
  broken.c_post(3, 0) = 0;
  const TransitionSystem ts = reachable(broken, d.rates, net.m0);
  const auto report = check_invariants(ts, invs);
  ASSERT_FALSE(report.ok());
  EXPECT_EQ(report.violations.front().invariant, 1u);
}
