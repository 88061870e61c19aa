#pragma once

// Labelled activities, activity matrices and transition rate functions.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pepakit/model.hpp"

namespace pepakit {

enum class ActivityKind { Individual, Shared };

/// One participant's local move in a labelled activity.
struct Transfer {
  std::size_t pre = 0;
  std::size_t post = 0;

  auto operator<=>(const Transfer&) const = default;
};

struct LabelledActivity {
  ActionType action;
  ActivityKind kind = ActivityKind::Individual;
  /// One transfer per participating component type, in component-type order.
  std::vector<Transfer> label;
  /// Canonical `action{U1->V1,U2->V2}` form.
  std::string display_name;
};

/// Pre set and per-derivative post sets of one action.
struct PrePostSets {
  std::vector<std::size_t> pre;
  std::map<std::size_t, std::vector<std::size_t>> post;  // U -> post(U, l)
};

/// Dense row-major integer matrix.
class IntMatrix {
 public:
  IntMatrix() = default;
  IntMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  int& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  int operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::vector<int> column(std::size_t c) const;

  bool operator==(const IntMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<int> data_;
};

struct ActivityMatrices {
  DerivativeTable derivatives;               // rows
  std::vector<LabelledActivity> activities;  // columns
  IntMatrix c;
  IntMatrix c_pre;
  IntMatrix c_post;
};

struct ParticipantRate {
  RateValue branch = RateValue::passive();  // r_l^{U->V}
  RateValue total = RateValue::passive();   // r_l(U)
  std::size_t branches = 1;                 // #post(U, l)
};

/// Per labelled activity (same order as ActivityMatrices::activities), one
/// entry per participant.
struct RateSpec {
  std::vector<std::vector<ParticipantRate>> activities;
};

std::map<ActionType, PrePostSets> pre_post_sets(const PepaModel& model);

std::vector<LabelledActivity> label_activities(const PepaModel& model);

ActivityMatrices build_matrices(const PepaModel& model);

struct Derivation {
  ActivityMatrices matrices;
  RateSpec rates;
};

/// Labelled activities, matrices and rate data in one pass.
Derivation derive_all(const PepaModel& model);

/// Evaluates f(x, l) for every labelled activity of a derivation. Works on
/// integer and real-valued states.
class RateFunction {
 public:
  RateFunction(const ActivityMatrices& matrices, const RateSpec& spec);

  std::size_t size() const { return activities_.size(); }

  double operator()(std::span<const double> x, std::size_t activity) const;
  double operator()(std::span<const std::int64_t> x, std::size_t activity) const;

  /// Fills `out` with f(x, l) for all activities; returns the total.
  double evaluate_all(std::span<const double> x, std::span<double> out) const;
  double evaluate_all(std::span<const std::int64_t> x, std::span<double> out) const;

 private:
  template <class T>
  double eval(std::span<const T> x, std::size_t activity) const;

  struct Participant {
    std::size_t pre;
    bool passive;
    double total;   // r_l(U), finite participants only
    double branch;  // r_l^{U->V}, finite participants only
    double weight;  // branch probability r_l^{U->V} / r_l(U)
  };
  struct Compiled {
    bool shared;
    double factor;  // product of branch probabilities
    std::vector<Participant> participants;
    std::string name;
  };
  std::vector<Compiled> activities_;
};

/// Single evaluation of f(x, l).
double rate_function(const ActivityMatrices& matrices, const RateSpec& spec,
                     std::span<const double> x, std::size_t activity);

/// The min{A*infty, rB} rule: passive side with A > 0 defers to the finite
/// side, A == 0 disables.
double passive_min(double passive_count, double finite_rate);

/// 0 * infty = 0; otherwise the product is unbounded.
double times_infinity(double count);

}  // namespace pepakit
