#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <set>

#include "fixtures.hpp"
#include "pepakit/simulate.hpp"
#include "pepakit/statespace.hpp"

using namespace pepakit;

namespace {

std::vector<std::int64_t> block_sums(const DerivativeTable& t, const NumericalState& x) {
  std::vector<std::int64_t> out;
  for (const auto& type : t.types()) {
    std::int64_t s = 0;
    for (std::size_t i = type.first; i < type.first + type.size; ++i) s += x[i];
    out.push_back(s);
  }
  return out;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST(Rng, UniformInHalfOpenUnitInterval) {
  Rng rng(3);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    EXPECT_GT(u, 0.0);
    EXPECT_LE(u, 1.0);
  }
}

TEST(SsaStep, FormulaInversion) {
  const std::vector<double> rates{0.0, 2.0, 0.0};
  const SsaStep s = select_step(rates, 2.0, std::exp(-1.0), 0.3);
  EXPECT_DOUBLE_EQ(s.tau, 0.5);
  EXPECT_EQ(s.activity, 1u);
  EXPECT_EQ(select_step(rates, 2.0, 0.5, 1.0).activity, 1u);
}

TEST(SsaStep, CumulativeSelection) {
  const std::vector<double> rates{1.0, 0.0, 3.0};
  EXPECT_EQ(select_step(rates, 4.0, 0.5, 0.0).activity, 0u);
  EXPECT_EQ(select_step(rates, 4.0, 0.5, 0.2499).activity, 0u);
  EXPECT_EQ(select_step(rates, 4.0, 0.5, 0.25).activity, 2u);
  EXPECT_EQ(select_step(rates, 4.0, 0.5, 0.99).activity, 2u);
}

TEST(SsaStep, Model1OnlyTask1Enabled) {
  const Derivation d = fixtures::derive(fixtures::model1(2, 2));
  const Simulator sim(d.matrices, d.rates);
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const auto s = sim.step({2, 0, 2, 0}, rng);
    ASSERT_TRUE(s);
    EXPECT_EQ(s->activity, 0u);
  }
}

TEST(SsaStep, NoStepWhenDeadlocked) {
  Rng a(5), b(5);
  // The deadlock check draws nothing: both streams stay aligned.
  const Derivation dl = fixtures::derive(
      "P = (a, 1).P2;\nP2 = (b, 1).P;\nR = (b, 1).R2;\nR2 = (a, 1).R;\nsystem P[1] <a, b> R[1];\n");
  const Simulator dead(dl.matrices, dl.rates);
  EXPECT_FALSE(dead.step({1, 0, 1, 0}, a));
  EXPECT_EQ(a.uniform(), b.uniform());
}

TEST(Simulate, ZeroRewardIsZero) {
  const Derivation d = fixtures::derive(fixtures::model1(2, 2));
  const Simulator sim(d.matrices, d.rates);
  const auto reward = parse_reward("state:User1=0", d.matrices);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SimConfig cfg;
    cfg.seed = seed;
    cfg.t_max = 100;
    EXPECT_EQ(sim.run({2, 0, 2, 0}, {reward}, cfg).averages[0], 0.0);
  }
}

TEST(Simulate, Deterministic) {
  const Derivation d = fixtures::derive(fixtures::model2(3, 3));
  const Simulator sim(d.matrices, d.rates);
  const std::vector<RewardSpec> rewards{parse_reward("state:P1=1,Q2=0.5", d.matrices),
                                        parse_reward("throughput:alpha", d.matrices)};
  SimConfig cfg;
  cfg.seed = 42;
  cfg.t_max = 500;
  cfg.sample_dt = 1.0;
  const NumericalState x0 = initial_state(d.matrices.derivatives);
  const SimResult a = sim.run(x0, rewards, cfg);
  const SimResult b = sim.run(x0, rewards, cfg);
  EXPECT_EQ(a.steps, b.steps);
  EXPECT_EQ(a.final_state, b.final_state);
  for (std::size_t r = 0; r < rewards.size(); ++r) EXPECT_TRUE(same_bits(a.averages[r], b.averages[r]));
  ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
  EXPECT_EQ(a.trajectory.size(), 501u);
  for (std::size_t k = 1; k < a.trajectory.size(); ++k)
    EXPECT_LT(a.trajectory[k - 1].t, a.trajectory[k].t);
}

TEST(Simulate, RewardParsing) {
  const Derivation d = fixtures::derive(fixtures::model2(1, 1));
  const auto r = parse_reward("state:P1=2,P3=0.5", d.matrices);
  const auto& c = std::get<StateLinearReward>(r.kind).coefficients;
  EXPECT_EQ(c, (std::vector<double>{2, 0, 0.5, 0, 0}));
  const auto t = parse_reward("throughput:alpha", d.matrices);
  EXPECT_EQ(std::get<ThroughputReward>(t.kind).activities, (std::vector<std::size_t>{0, 1}));
  const auto one = parse_reward("throughput:alpha{P1->P3,Q1->Q2}", d.matrices);
  EXPECT_EQ(std::get<ThroughputReward>(one.kind).activities, (std::vector<std::size_t>{1}));
  EXPECT_THROW(parse_reward("state:Nope=1", d.matrices), std::invalid_argument);
  EXPECT_THROW(parse_reward("state:P1=x", d.matrices), std::invalid_argument);
  EXPECT_THROW(parse_reward("volume:P1", d.matrices), std::invalid_argument);
  EXPECT_THROW(parse_reward("throughput:delta", d.matrices), std::invalid_argument);
}

TEST(Simulate, BadConfig) {
  const Derivation d = fixtures::derive(fixtures::model1(1, 1));
  const Simulator sim(d.matrices, d.rates);
  SimConfig cfg;
  cfg.t_max = 0;
  EXPECT_THROW(sim.run({1, 0, 1, 0}, {}, cfg), AnalysisError);
  cfg.t_max = 10;
  cfg.warmup_fraction = 1.0;
  EXPECT_THROW(sim.run({1, 0, 1, 0}, {}, cfg), AnalysisError);
}

TEST(Simulate, DeadlockHandling) {
  // After `a` fires nothing is enabled.
  const Derivation d =
      fixtures::derive("P = (a, 1).Q;\nQ = (b, 1).Q;\nR = (c, 1).R;\nsystem P[1] <b, c> R[1];\n");
  const Simulator sim(d.matrices, d.rates);
  const NumericalState x0 = initial_state(d.matrices.derivatives);
  SimConfig cfg;
  cfg.t_max = 1e6;
  cfg.warmup_fraction = 0.5;
  EXPECT_THROW(sim.run(x0, {}, cfg), AnalysisError);
  cfg.warmup_fraction = 0.0;
  const SimResult r = sim.run(x0, {parse_reward("state:P=1", d.matrices)}, cfg);
  EXPECT_TRUE(r.deadlocked);
  EXPECT_EQ(r.steps, 1u);
  EXPECT_LT(r.total_time, cfg.t_max);
  EXPECT_EQ(r.final_state, (NumericalState{0, 1, 1}));
  // Averages cover the elapsed time only, all of it spent in P.
  EXPECT_EQ(r.averages[0], 1.0);
}

TEST(Simulate, EarlyStop) {
  const Derivation d = fixtures::derive(fixtures::pingpong(2, 3));
  const Simulator sim(d.matrices, d.rates);
  SimConfig cfg;
  cfg.t_max = 1e5;
  cfg.checkpoint_rel_tol = 0.05;
  const SimResult r = sim.run({1, 0}, {parse_reward("state:Ping=1", d.matrices)}, cfg);
  EXPECT_TRUE(r.early_stopped);
  EXPECT_LT(r.total_time, cfg.t_max);
}

TEST(Simulate, Conservation) {
  const Derivation d = fixtures::derive(fixtures::model2(3, 2));
  const Simulator sim(d.matrices, d.rates);
  const DerivativeTable& t = d.matrices.derivatives;
  NumericalState x = initial_state(t);
  const auto sums = block_sums(t, x);
  const TransitionSystem ts = reachable(d.matrices, d.rates, x);
  Rng rng(2024);
  for (int i = 0; i < 100000; ++i) {
    const auto s = sim.step(x, rng);
    ASSERT_TRUE(s);
    sim.apply(x, s->activity);
    ASSERT_EQ(block_sums(t, x), sums);
    ASSERT_TRUE(ts.find(x));
  }
}

TEST(Simulate, HoldingTimeAtPinnedState) {
  const Derivation d = fixtures::derive(fixtures::model2(2, 2));
  const Simulator sim(d.matrices, d.rates);
  const NumericalState pinned{1, 1, 0, 1, 1};
  std::vector<double> rates(d.matrices.activities.size());
  const double total = sim.rates().evaluate_all(std::span<const std::int64_t>(pinned), rates);
  NumericalState x = initial_state(d.matrices.derivatives);
  Rng rng(77);
  double sum = 0.0;
  std::size_t visits = 0;
  while (visits < 20000) {
    const auto s = sim.step(x, rng);
    ASSERT_TRUE(s);
    if (x == pinned) {
      sum += s->tau;
      ++visits;
    }
    sim.apply(x, s->activity);
  }
  const double mean = sum / static_cast<double>(visits);
  const double sigma = (1.0 / total) / std::sqrt(static_cast<double>(visits));
  EXPECT_NEAR(mean, 1.0 / total, 3.0 * sigma);
}

TEST(Replications, SingleMatchesRun) {
  const Derivation d = fixtures::derive(fixtures::model1(2, 2));
  const Simulator sim(d.matrices, d.rates);
  const std::vector<RewardSpec> rewards{parse_reward("state:User1=1", d.matrices)};
  SimConfig cfg;
  cfg.seed = 9;
  cfg.t_max = 200;
  const auto rep = replications(sim, {2, 0, 2, 0}, rewards, cfg, 1);
  const auto run = sim.run({2, 0, 2, 0}, rewards, cfg);
  ASSERT_EQ(rep.runs.size(), 1u);
  EXPECT_TRUE(same_bits(rep.runs[0].averages[0], run.averages[0]));
  EXPECT_EQ(rep.stddev[0], 0.0);
  EXPECT_THROW(replications(sim, {2, 0, 2, 0}, rewards, cfg, 0), AnalysisError);
}

TEST(Replications, ForcedEqualSeedsHaveNoVariance) {
  const Derivation d = fixtures::derive(fixtures::model1(2, 2));
  const Simulator sim(d.matrices, d.rates);
  SimConfig cfg;
  cfg.seed = 4;
  cfg.t_max = 100;
  const auto rep = replications(sim, {2, 0, 2, 0}, {parse_reward("state:User1=1", d.matrices)},
                                cfg, 5, false);
  EXPECT_EQ(rep.stddev[0], 0.0);
}

TEST(Replications, OrderedBySeed) {
  const Derivation d = fixtures::derive(fixtures::model1(2, 2));
  const Simulator sim(d.matrices, d.rates);
  const std::vector<RewardSpec> rewards{parse_reward("state:User1=1", d.matrices)};
  SimConfig cfg;
  cfg.seed = 100;
  cfg.t_max = 100;
  const auto rep = replications(sim, {2, 0, 2, 0}, rewards, cfg, 6);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(rep.seeds[i], 100 + i);
    SimConfig one = cfg;
    one.seed = 100 + i;
    EXPECT_TRUE(same_bits(rep.runs[i].averages[0], sim.run({2, 0, 2, 0}, rewards, one).averages[0]));
  }
}

TEST(Replications, PingPongAnalyticMean) {
  const double p = 2.0, q = 3.0;
  const Derivation d = fixtures::derive(fixtures::pingpong(p, q));
  const Simulator sim(d.matrices, d.rates);
  SimConfig cfg;
  cfg.seed = 1;
  cfg.t_max = 2000;
  const auto rep =
      replications(sim, {1, 0}, {parse_reward("state:Ping=1", d.matrices)}, cfg, 20);
  EXPECT_NEAR(rep.mean[0], q / (p + q), 3.0 * rep.stddev[0]);
}

namespace {

// |running average - exact| of x[User1] at t = 1e3, 1e4, 1e5 for one seed.
// Warm-up is off so the three values come from one trajectory.
std::vector<double> running_errors(const Simulator& sim, const RewardSpec& reward,
                                   std::uint64_t seed, double exact) {
  std::vector<double> out;
  for (double t : {1e3, 1e4, 1e5}) {
    SimConfig cfg;
    cfg.seed = seed;
    cfg.t_max = t;
    cfg.warmup_fraction = 0.0;
    out.push_back(std::abs(sim.run({1, 0, 1, 0}, {reward}, cfg).averages[0] - exact));
  }
  return out;
}

}  // namespace

// Literal property: errors strictly decrease in at least 18 of 20 seeds.
TEST(Convergence, ErrorsDecreaseInMostReplications) {
  const Derivation d = fixtures::derive(fixtures::model1(1, 1));
  const Simulator sim(d.matrices, d.rates);
  const auto reward = parse_reward("state:User1=1", d.matrices);
  int decreasing = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto e = running_errors(sim, reward, seed, 0.6);
    if (e[0] > e[1] && e[1] > e[2]) ++decreasing;
  }
  EXPECT_GE(decreasing, 18) << decreasing << " of 20 replications had decreasing errors";
}

// Ensemble form: the root-mean-square error over the 20 seeds decreases.
TEST(Convergence, RmsErrorDecreases) {
  const Derivation d = fixtures::derive(fixtures::model1(1, 1));
  const Simulator sim(d.matrices, d.rates);
  const auto reward = parse_reward("state:User1=1", d.matrices);
  std::vector<double> ss(3, 0.0);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto e = running_errors(sim, reward, seed, 0.6);
    for (std::size_t k = 0; k < 3; ++k) ss[k] += e[k] * e[k];
  }
  EXPECT_GT(ss[0], ss[1]);
  EXPECT_GT(ss[1], ss[2]);
}
