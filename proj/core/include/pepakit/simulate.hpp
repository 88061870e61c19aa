#pragma once

// Gillespie simulation of the aggregated CTMC driven by the activity matrix
// and the transition rate functions, with reward accumulation.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pepakit/derivation.hpp"
#include "pepakit/model.hpp"

namespace pepakit {

/// std::mt19937_64 seeded directly with the 64-bit seed. Uniform draws take
/// the top 53 bits of one engine output: ((u >> 11) + 1) * 2^-53, which lies
/// in (0, 1] so log(r) is always finite.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform();

 private:
  std::mt19937_64 engine_;
};

/// rho(x) = sum_U c_U x[U]
struct StateLinearReward {
  std::vector<double> coefficients;  // one per derivative
};

/// Reward rate sum_{l in activities} f(x, l).
struct ThroughputReward {
  std::vector<std::size_t> activities;
};

struct RewardSpec {
  std::string name;
  std::variant<StateLinearReward, ThroughputReward> kind;
};

/// Parses "state:U1=1.0,U2=0.5", "throughput:<label>" or
/// "throughput:<action>" (all labelled activities of the action).
RewardSpec parse_reward(std::string_view text, const ActivityMatrices& matrices);

struct SimConfig {
  std::uint64_t seed = 0;
  double t_max = 1000.0;
  double warmup_fraction = 0.1;
  /// Stop once the averages of two consecutive checkpoint windows (t_max/20
  /// apart) differ by less than this relative tolerance.
  std::optional<double> checkpoint_rel_tol;
  /// Record (t, x) every sample_dt time units.
  std::optional<double> sample_dt;
};

struct TrajectorySample {
  double t = 0.0;
  NumericalState x;
};

struct SimResult {
  std::vector<double> averages;  // PerMeasure / t per reward, warm-up excluded
  double total_time = 0.0;       // simulated time at stop
  double measured_time = 0.0;    // post-warm-up time the averages cover
  std::uint64_t steps = 0;
  NumericalState final_state;
  bool deadlocked = false;
  bool early_stopped = false;
  std::vector<TrajectorySample> trajectory;
};

struct SsaStep {
  double tau = 0.0;
  std::size_t activity = 0;
};

/// Inverts the two uniforms: tau = -ln(r1)/total, and the activity mu with
/// sum_{j<mu} f_j <= r2*total < sum_{j<=mu} f_j.
SsaStep select_step(std::span<const double> rates, double total, double r1, double r2);

class Simulator {
 public:
  Simulator(const ActivityMatrices& matrices, const RateSpec& spec);

  std::size_t activity_count() const { return columns_.size(); }
  const RateFunction& rates() const { return rates_; }

  /// One SSA step from x; exactly two uniforms are drawn. Returns nullopt,
  /// drawing nothing, when no activity is enabled.
  std::optional<SsaStep> step(const NumericalState& x, Rng& rng) const;

  /// x += C[:, activity]
  void apply(NumericalState& x, std::size_t activity) const;

  SimResult run(const NumericalState& x0, const std::vector<RewardSpec>& rewards,
                const SimConfig& cfg) const;

 private:
  RateFunction rates_;
  std::vector<std::vector<std::pair<std::size_t, int>>> columns_;  // sparse C columns
};

struct ReplicationSummary {
  std::vector<SimResult> runs;  // ordered by replication index
  std::vector<std::uint64_t> seeds;
  std::vector<double> mean;    // per reward
  std::vector<double> stddev;  // sample standard deviation, 0 for n = 1
};

/// n independent runs with seeds base.seed + i (or base.seed for all when
/// vary_seed is false), executed concurrently.
ReplicationSummary replications(const Simulator& sim, const NumericalState& x0,
                                const std::vector<RewardSpec>& rewards, const SimConfig& base,
                                std::size_t n, bool vary_seed = true);

}  // namespace pepakit
