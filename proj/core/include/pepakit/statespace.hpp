#pragma once

// Aggregated state space in numerical vector form, the CTMC generator and
// its steady-state and transient solutions.

#include <Eigen/SparseCore>
#include <boost/multiprecision/cpp_int.hpp>
#include <cstddef>
#include <optional>
#include <unordered_map>
#include <vector>

#include "pepakit/derivation.hpp"
#include "pepakit/model.hpp"

namespace pepakit {

struct StateHash {
  std::size_t operator()(const NumericalState& s) const noexcept;
};

/// Every component on its initial derivative, multiplied by `scale`.
NumericalState initial_state(const DerivativeTable& table, std::int64_t scale = 1);
NumericalState initial_state(const PepaModel& model, std::int64_t scale = 1);

struct Edge {
  std::size_t src = 0;
  std::size_t activity = 0;  // column of the activity matrix
  double rate = 0.0;
  std::size_t dst = 0;
};

struct TransitionSystem {
  std::vector<NumericalState> states;  // BFS discovery order
  std::vector<Edge> edges;             // grouped by src, columns ascending
  std::size_t initial = 0;

  std::optional<std::size_t> find(const NumericalState& s) const;
  std::unordered_map<NumericalState, std::size_t, StateHash> index;
};

inline constexpr std::size_t kDefaultStateCap = 1'000'000;

/// Breadth-first exploration from `initial`; x --l--> x + C[:,l] whenever
/// f(x, l) > 0. Throws AnalysisError once more than `cap` states are found.
TransitionSystem reachable(const ActivityMatrices& matrices, const RateSpec& spec,
                           const NumericalState& initial, std::size_t cap = kDefaultStateCap);

/// Product over component types of C(M_i + d_i - 1, d_i - 1).
boost::multiprecision::cpp_int state_space_bound(const DerivativeTable& table,
                                                 std::int64_t scale = 1);

/// Absorbing states (no outgoing edge, self-loops excluded).
std::vector<std::size_t> deadlocks(const TransitionSystem& ts);

using SparseGenerator = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Generator {
  SparseGenerator q;
  std::size_t size() const { return static_cast<std::size_t>(q.rows()); }
};

/// Off-diagonals sum edge rates per (i, j); self-loops are dropped.
Generator build_generator(const TransitionSystem& ts);

/// Strongly connected components of the generator graph (Tarjan); component
/// ids are assigned in reverse topological order.
std::vector<std::size_t> strongly_connected_components(const Generator& g,
                                                       std::size_t* count = nullptr);

enum class SteadyMethod { Auto, DenseLU, SparseLU, Power };

inline constexpr std::size_t kDenseSteadyLimit = 2000;

/// Solves pi Q = 0, sum(pi) = 1. Auto picks dense LU up to kDenseSteadyLimit
/// states and sparse LU above. Reducible chains are rejected.
std::vector<double> steady_state(const Generator& g, SteadyMethod method = SteadyMethod::Auto);

/// max_j |(pi Q)_j|
double balance_residual(const Generator& g, const std::vector<double>& pi);

struct TransientResult {
  std::vector<double> times;
  std::vector<std::vector<double>> distributions;
  double max_drift = 0.0;  // largest |sum(pi) - 1| seen before renormalising
};

/// pi(t) on the grid 0, dt, 2dt, ..., t_end by uniformisation; the Poisson
/// series is cut once its remaining mass is below 1e-14.
TransientResult transient(const Generator& g, const std::vector<double>& pi0, double t_end,
                          double dt);

}  // namespace pepakit
