#pragma once

// Fluid approximation: dx/dt = sum_l C[:,l] f(x, l), fixed-step RK4, and the
// population-scaling harness comparing X_n(t)/n against the ODE solution.

#include <cstdint>
#include <vector>

#include "pepakit/derivation.hpp"
#include "pepakit/model.hpp"

namespace pepakit {

class VectorField {
 public:
  VectorField(const ActivityMatrices& matrices, const RateSpec& spec);

  std::size_t dimension() const { return dimension_; }

  /// dx/dt at a real-valued state.
  std::vector<double> operator()(const std::vector<double>& x) const;

 private:
  RateFunction rates_;
  std::size_t dimension_;
  std::vector<std::vector<std::pair<std::size_t, int>>> columns_;
};

struct OdeTrajectory {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<std::vector<double>> values;
  std::size_t clipped = 0;  // negative undershoots reset to 0
};

/// Fixed-step RK4 on the grid 0, dt, ..., t_end (the last step is shortened
/// when t_end is not a multiple of dt).
OdeTrajectory integrate(const VectorField& field, const std::vector<double>& x0, double t_end,
                        double dt);

struct KurtzRow {
  std::int64_t n = 0;
  double mean_sup_error = 0.0;
  double stddev = 0.0;
  std::size_t replications = 0;
};

struct KurtzConfig {
  std::vector<std::int64_t> n_list;
  double t_end = 10.0;
  std::size_t replications = 20;
  std::uint64_t seed = 0;
  std::size_t grid_points = 1000;  // uniform grid intervals on [0, t_end]
};

/// For each n: ODE from x0 = initial state, SSA from n*x0, and the mean over
/// replications of max over grid times and derivatives of |X_n(u)/n - x(u)|.
std::vector<KurtzRow> kurtz_harness(const ActivityMatrices& matrices, const RateSpec& spec,
                                    const NumericalState& x0, const KurtzConfig& cfg);

}  // namespace pepakit
