#pragma once

// Place/transition view of a derived model and its P-invariants.

#include <cstdint>
#include <string>
#include <vector>

#include "pepakit/derivation.hpp"
#include "pepakit/statespace.hpp"

namespace pepakit {

struct PTSystem {
  std::vector<LocalDerivative> places;
  std::vector<LabelledActivity> transitions;
  IntMatrix pre;   // |P| x |T|
  IntMatrix post;  // |P| x |T|
  NumericalState m0;

  IntMatrix incidence() const;  // post - pre
  bool enabled(const NumericalState& m, std::size_t t) const;
  NumericalState fire(const NumericalState& m, std::size_t t) const;
};

PTSystem to_ptnet(const ActivityMatrices& matrices, const NumericalState& m0);
PTSystem to_ptnet(const PepaModel& model);

struct PInvariant {
  std::vector<std::int64_t> y;
  std::int64_t value = 0;  // y . m0
};

inline constexpr std::size_t kDefaultInvariantRowCap = 100000;

/// Minimal-support nonnegative integer solutions of y^T C = 0 by Farkas
/// elimination. Each vector has gcd 1; the list is sorted in descending
/// lexicographic order. Throws AnalysisError if the intermediate tableau
/// grows past `row_cap` rows or an entry overflows.
std::vector<PInvariant> p_invariants(const PTSystem& net,
                                     std::size_t row_cap = kDefaultInvariantRowCap);

struct InvariantViolation {
  std::size_t invariant = 0;
  std::size_t state = 0;
  std::int64_t expected = 0;
  std::int64_t actual = 0;
};

struct InvariantReport {
  std::size_t states_checked = 0;
  std::vector<InvariantViolation> violations;
  bool ok() const { return violations.empty(); }
};

InvariantReport check_invariants(const TransitionSystem& ts, const std::vector<PInvariant>& invs);

}  // namespace pepakit
