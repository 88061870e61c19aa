#include <algorithm>
#include <cmath>
#include <numeric>

#include "pepakit/fluid.hpp"
#include "pepakit/parallel.hpp"
#include "pepakit/simulate.hpp"

namespace pepakit {

VectorField::VectorField(const ActivityMatrices& matrices, const RateSpec& spec)
    : rates_(matrices, spec), dimension_(matrices.derivatives.size()) {
  columns_.resize(matrices.activities.size());
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    for (std::size_t i = 0; i < matrices.c.rows(); ++i) {
      if (matrices.c(i, j) != 0) columns_[j].emplace_back(i, matrices.c(i, j));
    }
  }
}

std::vector<double> VectorField::operator()(const std::vector<double>& x) const {
  std::vector<double> dx(dimension_, 0.0);
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    const double f = rates_(std::span<const double>(x), j);
    if (f == 0.0) continue;
    for (const auto& [i, c] : columns_[j]) dx[i] += c * f;
  }
  return dx;
}

OdeTrajectory integrate(const VectorField& field, const std::vector<double>& x0, double t_end,
                        double dt) {
  if (!(dt > 0.0)) throw AnalysisError("time step must be positive");
  if (t_end < 0.0) throw AnalysisError("end time must be nonnegative");
  if (x0.size() != field.dimension()) throw AnalysisError("initial state has wrong size");
  for (double v : x0) {
    if (!(v >= 0.0)) throw AnalysisError("initial state must be nonnegative");
  }

  OdeTrajectory out;
  out.dt = dt;
  out.times.push_back(0.0);
  out.values.push_back(x0);
  std::vector<double> x = x0;
  const std::size_t d = x.size();
  auto axpy = [d](const std::vector<double>& a, double h, const std::vector<double>& b) {
    std::vector<double> r(d);
    for (std::size_t i = 0; i < d; ++i) r[i] = a[i] + h * b[i];
    return r;
  };
  const auto steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  double t = 0.0;
  for (long k = 1; k <= steps; ++k) {
    const double t_next = std::min(t_end, static_cast<double>(k) * dt);
    const double h = t_next - t;
    const auto k1 = field(x);
    const auto k2 = field(axpy(x, 0.5 * h, k1));
    const auto k3 = field(axpy(x, 0.5 * h, k2));
    const auto k4 = field(axpy(x, h, k3));
    for (std::size_t i = 0; i < d; ++i) {
      x[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (!std::isfinite(x[i]))
        throw AnalysisError("non-finite ODE state at t=" + std::to_string(t_next));
      if (x[i] < 0.0) {
        x[i] = 0.0;
        ++out.clipped;
      }
    }
    t = t_next;
    out.times.push_back(t);
    out.values.push_back(x);
  }
  return out;
}

std::vector<KurtzRow> kurtz_harness(const ActivityMatrices& matrices, const RateSpec& spec,
                                    const NumericalState& x0, const KurtzConfig& cfg) {
  if (cfg.replications == 0) throw AnalysisError("replication count must be at least 1");
  if (cfg.grid_points == 0) throw AnalysisError("grid needs at least one interval");
  for (std::size_t i = 1; i < cfg.n_list.size(); ++i) {
    if (cfg.n_list[i] <= cfg.n_list[i - 1]) throw AnalysisError("n list must be increasing");
  }
  for (auto n : cfg.n_list) {
    if (n < 1) throw AnalysisError("scaling factors must be positive");
  }

  std::vector<KurtzRow> rows;
  if (cfg.t_end == 0.0) {
    for (auto n : cfg.n_list) rows.push_back({n, 0.0, 0.0, cfg.replications});
    return rows;
  }

  const VectorField field(matrices, spec);
  const double grid_dt = cfg.t_end / static_cast<double>(cfg.grid_points);
  const std::vector<double> x0_real(x0.begin(), x0.end());
  const OdeTrajectory ode = integrate(field, x0_real, cfg.t_end, grid_dt);

  const Simulator sim(matrices, spec);
  for (auto n : cfg.n_list) {
    NumericalState start = x0;
    for (auto& v : start) v *= n;
    std::vector<double> errors(cfg.replications);
    parallel_for(cfg.replications, [&](std::size_t r) {
      SimConfig sc;
      sc.seed = cfg.seed + r;
      sc.t_max = cfg.t_end;
      sc.warmup_fraction = 0.0;
      sc.sample_dt = grid_dt;
      SimResult res;
      try {
        res = sim.run(start, {}, sc);
      } catch (const AnalysisError&) {
        // Deadlock at t = 0: the path is constant.
        res.trajectory.clear();
        for (std::size_t k = 0; k <= cfg.grid_points; ++k)
          res.trajectory.push_back({static_cast<double>(k) * grid_dt, start});
      }
      double worst = 0.0;
      const std::size_t m = std::min(res.trajectory.size(), ode.values.size());
      for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t i = 0; i < start.size(); ++i) {
          const double scaled = static_cast<double>(res.trajectory[k].x[i]) / static_cast<double>(n);
          worst = std::max(worst, std::abs(scaled - ode.values[k][i]));
        }
      }
      errors[r] = worst;
    });
    const double mean =
        std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
    double ss = 0.0;
    for (double e : errors) ss += (e - mean) * (e - mean);
    const double sd =
        errors.size() > 1 ? std::sqrt(ss / static_cast<double>(errors.size() - 1)) : 0.0;
    rows.push_back({n, mean, sd, cfg.replications});
  }
  return rows;
}

}  // namespace pepakit
