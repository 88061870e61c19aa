#pragma once

// Direct interpreter of the PEPA cooperation semantics over aggregated
// states. It walks the system equation, computing apparent rates per subtree,
// and never looks at activity matrices; it serves as the reference the
// matrix-driven transition system is checked against.

#include <utility>
#include <vector>

#include "pepakit/model.hpp"

namespace pepakit {

struct SemanticTransition {
  ActionType action;
  /// (pre, post) derivative indices, one pair per participating component
  /// type, sorted by pre index.
  std::vector<std::pair<std::size_t, std::size_t>> moves;
  double rate = 0.0;
  NumericalState target;
};

/// All one-step successors of `state`, duplicates (same action and moves)
/// merged by summing rates. Sorted by action display name, then moves.
/// Throws AnalysisError when a synchronisation has only passive participants.
std::vector<SemanticTransition> semantic_transitions(const PepaModel& model,
                                                     const DerivativeTable& table,
                                                     const NumericalState& state);

}  // namespace pepakit
