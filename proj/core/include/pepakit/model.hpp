#pragma once

// PEPA model syntax tree, parser, printer and derivative discovery.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pepakit {

struct SourcePos {
  int line = 0;
  int column = 0;
};

/// Raised for syntax and validation failures. what() is "line:col: message"
/// when a position is known, otherwise just the message.
class ModelError : public std::runtime_error {
 public:
  explicit ModelError(const std::string& message);
  ModelError(SourcePos pos, const std::string& message);

  std::optional<SourcePos> pos() const { return pos_; }
  const std::string& message() const { return message_; }

 private:
  std::optional<SourcePos> pos_;
  std::string message_;
};

/// Raised by numerical analyses (state-space limits, reducible chains,
/// deadlocks, undefined synchronisation rates).
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ActionType {
  std::string name;
  bool hidden = false;

  /// Hidden actions render as "tau:<name>".
  std::string display() const;

  auto operator<=>(const ActionType&) const = default;
};

/// A finite positive rate or the passive (unspecified) rate.
class RateValue {
 public:
  static RateValue finite(double value);
  static RateValue passive() { return RateValue(); }

  bool is_passive() const { return passive_; }
  /// Only meaningful for finite rates.
  double value() const { return value_; }

  bool operator==(const RateValue&) const = default;

 private:
  RateValue() = default;
  RateValue(double v, bool p) : value_(v), passive_(p) {}

  double value_ = 0.0;
  bool passive_ = true;
};

/// Rate as written at a prefix: either a literal or a binding name, always
/// resolved to a value after parsing.
struct RateTerm {
  std::string symbol;  // empty for literals
  RateValue value = RateValue::passive();

  bool operator==(const RateTerm&) const = default;
};

struct SeqExpr;
using SeqPtr = std::shared_ptr<const SeqExpr>;

struct Prefix {
  std::string action;
  RateTerm rate;
  SeqPtr next;
};

struct Choice {
  SeqPtr left;
  SeqPtr right;
};

struct Const {
  std::string name;
};

struct SeqExpr {
  std::variant<Prefix, Choice, Const> node;
  SourcePos pos;
};

struct SystemExpr;
using SystemPtr = std::shared_ptr<const SystemExpr>;

struct Group {
  std::string component;
  std::int64_t count = 1;
};

struct Coop {
  SystemPtr left;
  std::set<std::string> actions;
  SystemPtr right;
};

struct Hide {
  SystemPtr inner;
  std::set<std::string> actions;
};

struct SystemExpr {
  std::variant<Group, Coop, Hide> node;
  SourcePos pos;
};

struct Definition {
  std::string name;
  SeqPtr body;
  SourcePos pos;
};

struct RateBinding {
  std::string name;
  RateTerm value;  // symbol set when the binding aliases another rate
  SourcePos pos;
};

/// A validated PEPA model. Definitions and bindings keep source order.
class PepaModel {
 public:
  PepaModel(std::vector<RateBinding> rates, std::vector<Definition> definitions,
            SystemPtr system);

  const std::vector<RateBinding>& rate_bindings() const { return rates_; }
  const std::vector<Definition>& definitions() const { return definitions_; }
  const SystemExpr& system() const { return *system_; }
  SystemPtr system_ptr() const { return system_; }

  const Definition* find_definition(std::string_view name) const;
  std::optional<RateValue> find_rate(std::string_view name) const;

  /// Action names in order of first appearance across the definitions.
  const std::vector<std::string>& action_order() const { return action_order_; }
  std::size_t action_rank(std::string_view action) const;

  /// Position of a definition in source order (tie-breaker for derivative
  /// discovery).
  std::size_t definition_rank(std::string_view name) const;

 private:
  std::vector<RateBinding> rates_;
  std::vector<Definition> definitions_;
  SystemPtr system_;
  std::map<std::string, std::size_t, std::less<>> def_index_;
  std::map<std::string, std::size_t, std::less<>> rate_index_;
  std::vector<std::string> action_order_;
  std::map<std::string, std::size_t, std::less<>> action_rank_;
};

PepaModel parse_model(std::string_view text);

/// Renders a model in the concrete syntax accepted by parse_model.
std::string print_model(const PepaModel& model);

/// Deep structural comparison (ignores source positions).
bool same_structure(const PepaModel& a, const PepaModel& b);

/// One syntactic transition of a sequential constant, duplicates preserved.
struct LocalTransition {
  std::string action;
  RateValue rate;
  std::string target;
};

/// Transitions of a constant in left-to-right syntactic order, looking
/// through constant aliases.
std::vector<LocalTransition> local_transitions(const PepaModel& model,
                                               std::string_view constant);

struct LocalDerivative {
  std::string component_type;
  std::string name;
  std::size_t index = 0;
};

struct ComponentType {
  std::string name;  // the constant named in the system equation
  std::int64_t population = 0;
  std::size_t first = 0;  // first derivative index of the block
  std::size_t size = 0;   // d_i
};

/// Global derivative ordering: component types in order of first appearance
/// in the system equation, derivatives within a type in breadth-first order
/// from the initial constant.
class DerivativeTable {
 public:
  DerivativeTable() = default;
  DerivativeTable(std::vector<LocalDerivative> derivatives,
                  std::vector<ComponentType> types);

  const std::vector<LocalDerivative>& derivatives() const { return derivatives_; }
  const std::vector<ComponentType>& types() const { return types_; }
  std::size_t size() const { return derivatives_.size(); }
  const LocalDerivative& operator[](std::size_t i) const { return derivatives_[i]; }

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;  // throws if absent
  std::size_t type_of(std::size_t derivative) const { return type_of_[derivative]; }
  std::optional<std::size_t> find_type(std::string_view component) const;

 private:
  std::vector<LocalDerivative> derivatives_;
  std::vector<ComponentType> types_;
  std::vector<std::size_t> type_of_;
  std::map<std::string, std::size_t, std::less<>> by_name_;
};

DerivativeTable local_derivatives(const PepaModel& model);

/// Counts of components per local derivative, in DerivativeTable order.
using NumericalState = std::vector<std::int64_t>;

}  // namespace pepakit
