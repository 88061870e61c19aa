#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "pepakit/parallel.hpp"
#include "pepakit/simulate.hpp"

namespace pepakit {

double Rng::uniform() {
  const std::uint64_t u = engine_();
  return static_cast<double>((u >> 11) + 1) * 0x1.0p-53;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return s;
}

double reward_value(const RewardSpec& r, const NumericalState& x, std::span<const double> rates) {
  if (const auto* s = std::get_if<StateLinearReward>(&r.kind)) {
    double v = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) v += s->coefficients[i] * static_cast<double>(x[i]);
    return v;
  }
  double v = 0.0;
  for (std::size_t j : std::get<ThroughputReward>(r.kind).activities) v += rates[j];
  return v;
}

}  // namespace

RewardSpec parse_reward(std::string_view text, const ActivityMatrices& matrices) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos)
    throw std::invalid_argument("reward must be state:... or throughput:...");
  const std::string_view kind = trim(text.substr(0, colon));
  const std::string_view body = trim(text.substr(colon + 1));
  RewardSpec spec;
  spec.name = std::string(text);
  if (kind == "state") {
    StateLinearReward r{std::vector<double>(matrices.derivatives.size(), 0.0)};
    std::size_t start = 0;
    while (start <= body.size()) {
      const auto comma = body.find(',', start);
      const std::string_view item =
          trim(body.substr(start, comma == std::string_view::npos ? body.size() - start
                                                                   : comma - start));
      const auto eq = item.find('=');
      const std::string_view name = trim(item.substr(0, eq));
      double coef = 1.0;
      if (eq != std::string_view::npos) {
        const std::string_view num = trim(item.substr(eq + 1));
        auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), coef);
        if (ec != std::errc() || ptr != num.data() + num.size() || !std::isfinite(coef))
          throw std::invalid_argument("bad reward coefficient '" + std::string(num) + "'");
      }
      const auto idx = matrices.derivatives.find(name);
      if (!idx) throw std::invalid_argument("unknown local derivative '" + std::string(name) + "'");
      r.coefficients[*idx] += coef;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    spec.kind = std::move(r);
    return spec;
  }
  if (kind == "throughput") {
    ThroughputReward r;
    for (std::size_t j = 0; j < matrices.activities.size(); ++j) {
      const auto& a = matrices.activities[j];
      if (a.display_name == body || a.action.display() == body) r.activities.push_back(j);
    }
    if (r.activities.empty())
      throw std::invalid_argument("unknown activity '" + std::string(body) + "'");
    spec.kind = std::move(r);
    return spec;
  }
  throw std::invalid_argument("unknown reward kind '" + std::string(kind) + "'");
}

SsaStep select_step(std::span<const double> rates, double total, double r1, double r2) {
  SsaStep s;
  s.tau = -std::log(r1) / total;
  const double target = r2 * total;
  double cumulative = 0.0;
  std::size_t last_enabled = rates.size();
  for (std::size_t j = 0; j < rates.size(); ++j) {
    if (rates[j] <= 0.0) continue;
    last_enabled = j;
    cumulative += rates[j];
    if (target < cumulative) {
      s.activity = j;
      return s;
    }
  }
  // r2 == 1 (or rounding at the top end) selects the last enabled activity.
  s.activity = last_enabled;
  return s;
}

Simulator::Simulator(const ActivityMatrices& matrices, const RateSpec& spec)
    : rates_(matrices, spec) {
  columns_.resize(matrices.activities.size());
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    for (std::size_t i = 0; i < matrices.c.rows(); ++i) {
      if (matrices.c(i, j) != 0) columns_[j].emplace_back(i, matrices.c(i, j));
    }
  }
}

std::optional<SsaStep> Simulator::step(const NumericalState& x, Rng& rng) const {
  std::vector<double> rates(columns_.size());
  const double total = rates_.evaluate_all(std::span<const std::int64_t>(x), rates);
  if (!(total > 0.0)) return std::nullopt;
  const double r1 = rng.uniform();
  const double r2 = rng.uniform();
  return select_step(rates, total, r1, r2);
}

void Simulator::apply(NumericalState& x, std::size_t activity) const {
  for (const auto& [i, delta] : columns_[activity]) x[i] += delta;
}

SimResult Simulator::run(const NumericalState& x0, const std::vector<RewardSpec>& rewards,
                         const SimConfig& cfg) const {
  if (!(cfg.t_max > 0.0)) throw AnalysisError("t_max must be positive");
  if (!(cfg.warmup_fraction >= 0.0 && cfg.warmup_fraction < 1.0))
    throw AnalysisError("warm-up fraction must lie in [0, 1)");
  if (cfg.sample_dt && !(*cfg.sample_dt > 0.0))
    throw AnalysisError("sampling interval must be positive");

  Rng rng(cfg.seed);
  const double warm = cfg.warmup_fraction * cfg.t_max;
  const double window = cfg.t_max / 20.0;
  std::vector<double> accumulated(rewards.size(), 0.0);
  std::vector<double> rates(columns_.size());
  std::vector<double> previous_checkpoint;
  double next_checkpoint = warm + window;
  double next_sample = 0.0;
  std::uint64_t sample_index = 0;

  SimResult result;
  NumericalState x = x0;
  double t = 0.0;
  while (true) {
    const double total = rates_.evaluate_all(std::span<const std::int64_t>(x), rates);
    if (!(total > 0.0)) {
      result.deadlocked = true;
      if (t <= warm) {
        std::string state;
        for (std::size_t i = 0; i < x.size(); ++i) state += (i ? "," : "") + std::to_string(x[i]);
        throw AnalysisError("deadlock at t=" + std::to_string(t) + " in state (" + state +
                            ") before any post-warm-up accumulation");
      }
      break;
    }
    const double r1 = rng.uniform();
    const double r2 = rng.uniform();
    const SsaStep s = select_step(rates, total, r1, r2);
    const double t_next = t + s.tau;

    const double lo = std::max(t, warm);
    const double hi = std::min(t_next, cfg.t_max);
    if (hi > lo) {
      for (std::size_t r = 0; r < rewards.size(); ++r)
        accumulated[r] += reward_value(rewards[r], x, rates) * (hi - lo);
    }
    if (cfg.sample_dt) {
      // X is right-continuous: a sample at exactly t_next sees the new state.
      while (next_sample < t_next && next_sample <= cfg.t_max) {
        result.trajectory.push_back({next_sample, x});
        next_sample = static_cast<double>(++sample_index) * *cfg.sample_dt;
      }
    }
    if (t_next >= cfg.t_max) {
      t = cfg.t_max;
      break;
    }
    t = t_next;
    apply(x, s.activity);
    ++result.steps;

    if (cfg.checkpoint_rel_tol && t >= next_checkpoint) {
      std::vector<double> current(rewards.size());
      for (std::size_t r = 0; r < rewards.size(); ++r) current[r] = accumulated[r] / (t - warm);
      if (!previous_checkpoint.empty()) {
        bool settled = true;
        for (std::size_t r = 0; r < rewards.size(); ++r) {
          const double scale = std::max(std::abs(current[r]), 1e-300);
          if (std::abs(current[r] - previous_checkpoint[r]) / scale >= *cfg.checkpoint_rel_tol)
            settled = false;
        }
        if (settled) {
          result.early_stopped = true;
          break;
        }
      }
      previous_checkpoint = std::move(current);
      while (next_checkpoint <= t) next_checkpoint += window;
    }
  }
  if (cfg.sample_dt) {
    while (next_sample <= t) {
      result.trajectory.push_back({next_sample, x});
      next_sample = static_cast<double>(++sample_index) * *cfg.sample_dt;
    }
  }
  result.total_time = t;
  result.measured_time = t - warm;
  result.averages.resize(rewards.size());
  for (std::size_t r = 0; r < rewards.size(); ++r)
    result.averages[r] = result.measured_time > 0.0 ? accumulated[r] / result.measured_time : 0.0;
  result.final_state = std::move(x);
  return result;
}

ReplicationSummary replications(const Simulator& sim, const NumericalState& x0,
                                const std::vector<RewardSpec>& rewards, const SimConfig& base,
                                std::size_t n, bool vary_seed) {
  if (n == 0) throw AnalysisError("replication count must be at least 1");
  ReplicationSummary out;
  out.runs.resize(n);
  out.seeds.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.seeds[i] = vary_seed ? base.seed + i : base.seed;
  parallel_for(n, [&](std::size_t i) {
    SimConfig cfg = base;
    cfg.seed = out.seeds[i];
    out.runs[i] = sim.run(x0, rewards, cfg);
  });
  out.mean.assign(rewards.size(), 0.0);
  out.stddev.assign(rewards.size(), 0.0);
  for (std::size_t r = 0; r < rewards.size(); ++r) {
    double sum = 0.0;
    for (const auto& run : out.runs) sum += run.averages[r];
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& run : out.runs) ss += (run.averages[r] - mean) * (run.averages[r] - mean);
    out.mean[r] = mean;
    out.stddev[r] = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  }
  return out;
}

}  // namespace pepakit
