#include <gtest/gtest.h>

#include <cmath>
#include <deque>
#include <set>

#include "fixtures.hpp"
#include "pepakit/semantics.hpp"
#include "pepakit/statespace.hpp"

using namespace pepakit;

namespace {

// Reachable set computed from the interpreter alone.
std::set<NumericalState> semantic_reachable(const PepaModel& m, const NumericalState& x0) {
  const DerivativeTable t = local_derivatives(m);
  std::set<NumericalState> seen{x0};
  std::deque<NumericalState> queue{x0};
  while (!queue.empty()) {
    const NumericalState x = queue.front();
    queue.pop_front();
    for (const auto& s : semantic_transitions(m, t, x))
      if (seen.insert(s.target).second) queue.push_back(s.target);
  }
  return seen;
}

// Number of vectors with the given block sums.
std::size_t compositions(std::int64_t total, std::size_t parts) {
  if (parts == 1) return 1;
  std::size_t n = 0;
  for (std::int64_t k = 0; k <= total; ++k) n += compositions(total - k, parts - 1);
  return n;
}

}  // namespace

TEST(Reachability, Model1NineStates) {
  const Derivation d = fixtures::derive(fixtures::model1(2, 2));
  const TransitionSystem ts = reachable(d.matrices, d.rates, initial_state(d.matrices.derivatives));
  EXPECT_EQ(ts.states.size(), 9u);
  EXPECT_EQ(ts.states[0], (NumericalState{2, 0, 2, 0}));
  ASSERT_TRUE(ts.find({1, 1, 1, 1}));
  bool found = false;
  for (const auto& e : ts.edges)
    if (e.src == 0 && e.activity == 0 && ts.states[e.dst] == NumericalState{1, 1, 1, 1}) found = true;
  EXPECT_TRUE(found);
  EXPECT_EQ(state_space_bound(d.matrices.derivatives, 1), 9);
}

TEST(Reachability, MatchesInterpreterClosure) {
  for (int m = 1; m <= 3; ++m) {
    for (int n = 1; n <= 3; ++n) {
      for (const std::string& text : {fixtures::model1(m, n), fixtures::model2(m, n)}) {
        const PepaModel model = parse_model(text);
        const Derivation d = derive_all(model);
        const NumericalState x0 = initial_state(d.matrices.derivatives);
        const TransitionSystem ts = reachable(d.matrices, d.rates, x0);
        const std::set<NumericalState> got(ts.states.begin(), ts.states.end());
        EXPECT_EQ(got, semantic_reachable(model, x0));
      }
    }
  }
}

TEST(Reachability, Model1IsFullSimplexProduct) {
  const Derivation d = fixtures::derive(fixtures::model1(3, 2));
  const TransitionSystem ts = reachable(d.matrices, d.rates, initial_state(d.matrices.derivatives));
  EXPECT_EQ(ts.states.size(), compositions(3, 2) * compositions(2, 2));
}

TEST(Reachability, SmallModel1FourStates) {
  const Derivation d = fixtures::derive(fixtures::model1(1, 1));
  const TransitionSystem ts = reachable(d.matrices, d.rates, initial_state(d.matrices.derivatives));
  ASSERT_EQ(ts.states.size(), 4u);
  EXPECT_EQ(ts.states[1], (NumericalState{0, 1, 0, 1}));
  EXPECT_EQ(ts.states[2], (NumericalState{1, 0, 0, 1}));
  EXPECT_EQ(ts.states[3], (NumericalState{0, 1, 1, 0}));
}

TEST(Reachability, CapExceeded) {
  const Derivation d = fixtures::derive(fixtures::model2(3, 3));
  EXPECT_THROW(reachable(d.matrices, d.rates, initial_state(d.matrices.derivatives), 5),
               AnalysisError);
}

TEST(Reachability, DeadlockDetected) {
  const Derivation d = fixtures::derive("P = (a, 1).P2;\nP2 = (b, 1).P;\nR = (b, 1).R2;\nR2 = (a, 1).R;\n"
                                        "system P[1] <a, b> R[1];\n");
  const TransitionSystem ts = reachable(d.matrices, d.rates, initial_state(d.matrices.derivatives));
  EXPECT_EQ(ts.states.size(), 1u);
  EXPECT_EQ(deadlocks(ts), std::vector<std::size_t>{0});
}

TEST(Bound, Binomials) {
  const Derivation d1 = fixtures::derive(fixtures::model1(2, 2));
  EXPECT_EQ(state_space_bound(d1.matrices.derivatives, 1), 9);
  EXPECT_EQ(state_space_bound(d1.matrices.derivatives, 5), 121);
  const Derivation d2 = fixtures::derive(fixtures::model2(2, 2));
  EXPECT_EQ(state_space_bound(d2.matrices.derivatives, 1), 18);
  // C(1000 + 2, 2) * C(1000 + 1, 1)
  EXPECT_EQ(state_space_bound(d2.matrices.derivatives, 500),
            boost::multiprecision::cpp_int(501501) * 1001);
}

TEST(Generator, RowsSumToZeroAndSelfLoopsDropped) {
  const Derivation d = fixtures::derive(fixtures::model2(2, 2));
  const TransitionSystem ts = reachable(d.matrices, d.rates, initial_state(d.matrices.derivatives));
  const Generator g = build_generator(ts);
  for (int i = 0; i < g.q.outerSize(); ++i) {
    double sum = 0.0;
    for (SparseGenerator::InnerIterator it(g.q, i); it; ++it) sum += it.value();
    EXPECT_NEAR(sum, 0.0, 1e-12);
  }
  const Derivation loop = fixtures::derive(fixtures::kSelfLoop);
  const TransitionSystem lts =
      reachable(loop.matrices, loop.rates, initial_state(loop.matrices.derivatives));
  const Generator lg = build_generator(lts);
  EXPECT_EQ(lg.q.nonZeros(), 0);
}

// Exact solution with a=b=d=1, M=N=1: pi = (2/5, 1/5, 1/5, 1/5) in BFS order.
TEST(SteadyState, ExactModel1Small) {
  const Derivation d = fixtures::derive(fixtures::model1(1, 1));
  const TransitionSystem ts = reachable(d.matrices, d.rates, initial_state(d.matrices.derivatives));
  const Generator g = build_generator(ts);
  const double expected[4] = {0.4, 0.2, 0.2, 0.2};
  for (SteadyMethod method :
       {SteadyMethod::Auto, SteadyMethod::DenseLU, SteadyMethod::SparseLU, SteadyMethod::Power}) {
    const auto pi = steady_state(g, method);
    ASSERT_EQ(pi.size(), 4u);
    for (std::size_t s = 0; s < 4; ++s) EXPECT_NEAR(pi[s], expected[s], 1e-10);
    EXPECT_LE(balance_residual(g, pi), 1e-10);
  }
}

TEST(SteadyState, PingPong) {
  const double p = 2.0, q = 3.0;
  const Derivation d = fixtures::derive(fixtures::pingpong(p, q));
  const TransitionSystem ts = reachable(d.matrices, d.rates, initial_state(d.matrices.derivatives));
  const auto pi = steady_state(build_generator(ts));
  EXPECT_NEAR(pi[0], q / (p + q), 1e-12);
  EXPECT_NEAR(pi[1], p / (p + q), 1e-12);
}

TEST(SteadyState, Model2ResidualAndMethodsAgree) {
  const Derivation d = fixtures::derive(fixtures::model2(3, 3));
  const TransitionSystem ts = reachable(d.matrices, d.rates, initial_state(d.matrices.derivatives));
  const Generator g = build_generator(ts);
  const auto dense = steady_state(g, SteadyMethod::DenseLU);
  const auto sparse = steady_state(g, SteadyMethod::SparseLU);
  const auto power = steady_state(g, SteadyMethod::Power);
  EXPECT_LE(balance_residual(g, dense), 1e-10);
  for (std::size_t s = 0; s < dense.size(); ++s) {
    EXPECT_NEAR(dense[s], sparse[s], 1e-10);
    EXPECT_NEAR(dense[s], power[s], 1e-8);
    EXPECT_GE(dense[s], 0.0);
  }
}

TEST(SteadyState, ReducibleRejected) {
  const Derivation d = fixtures::derive("P = (a, 1).Q;\nQ = (b, 1).R;\nR = (c, 1).Q;\nsystem P[1];\n");
  const TransitionSystem ts = reachable(d.matrices, d.rates, initial_state(d.matrices.derivatives));
  const Generator g = build_generator(ts);
  std::size_t count = 0;
  strongly_connected_components(g, &count);
  EXPECT_EQ(count, 2u);
  EXPECT_THROW(steady_state(g), AnalysisError);
}

// pi(t) for a two-state chain has the closed form
// pi_1(t) = p/(p+q) (1 - exp(-(p+q) t)) from pi(0) = (1, 0).
TEST(Transient, TwoStateClosedForm) {
  const double p = 2.0, q = 3.0;
  const Derivation d = fixtures::derive(fixtures::pingpong(p, q));
  const TransitionSystem ts = reachable(d.matrices, d.rates, initial_state(d.matrices.derivatives));
  const TransientResult r = transient(build_generator(ts), {1.0, 0.0}, 3.0, 0.25);
  ASSERT_EQ(r.times.size(), 13u);
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    const double t = r.times[k];
    const double expected = p / (p + q) * (1.0 - std::exp(-(p + q) * t));
    EXPECT_NEAR(r.distributions[k][1], expected, 1e-6);
    EXPECT_NEAR(r.distributions[k][0] + r.distributions[k][1], 1.0, 1e-12);
  }
}

TEST(Transient, ConvergesToSteadyState) {
  const Derivation d = fixtures::derive(fixtures::model1(1, 1));
  const TransitionSystem ts = reachable(d.matrices, d.rates, initial_state(d.matrices.derivatives));
  const Generator g = build_generator(ts);
  const TransientResult r = transient(g, {1, 0, 0, 0}, 60.0, 1.0);
  const auto pi = steady_state(g);
  for (std::size_t s = 0; s < 4; ++s) EXPECT_NEAR(r.distributions.back()[s], pi[s], 1e-9);
}

TEST(Transient, BadArguments) {
  const Derivation d = fixtures::derive(fixtures::pingpong(1, 1));
  const TransitionSystem ts = reachable(d.matrices, d.rates, initial_state(d.matrices.derivatives));
  const Generator g = build_generator(ts);
  EXPECT_THROW(transient(g, {1.0, 0.0}, 1.0, 0.0), AnalysisError);
  EXPECT_THROW(transient(g, {0.5, 0.2}, 1.0, 0.1), AnalysisError);
}

// q^{(n)}_{x, x+l} = n f(x/n, l) for every enumerated edge.
TEST(DensityDependence, ScaledGenerators) {
  for (std::int64_t n = 1; n <= 3; ++n) {
    const Derivation d = fixtures::derive(fixtures::model1(1, 1));
    const TransitionSystem ts =
        reachable(d.matrices, d.rates, initial_state(d.matrices.derivatives, n));
    for (const auto& e : ts.edges) {
      std::vector<double> scaled(ts.states[e.src].begin(), ts.states[e.src].end());
      for (auto& v : scaled) v /= static_cast<double>(n);
      EXPECT_DOUBLE_EQ(e.rate, static_cast<double>(n) *
                                   rate_function(d.matrices, d.rates, scaled, e.activity));
    }
  }
}
