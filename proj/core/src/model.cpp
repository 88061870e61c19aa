#include <algorithm>
#include <charconv>
#include <deque>
#include <sstream>

#include "pepakit/model.hpp"

namespace pepakit {

namespace {

std::string format_pos(SourcePos pos, const std::string& message) {
  return std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": " + message;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, ptr);
  // Keep literals lexically numeric for the parser ("1e-05" is fine, "1" too).
  return s;
}

void collect_actions(const SeqPtr& e, std::vector<std::string>& order,
                     std::map<std::string, std::size_t, std::less<>>& rank) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Prefix>) {
          if (rank.emplace(n.action, order.size()).second) order.push_back(n.action);
          collect_actions(n.next, order, rank);
        } else if constexpr (std::is_same_v<T, Choice>) {
          collect_actions(n.left, order, rank);
          collect_actions(n.right, order, rank);
        }
      },
      e->node);
}

void check_constants(const SeqPtr& e, const PepaModel& model) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Prefix>) {
          check_constants(n.next, model);
        } else if constexpr (std::is_same_v<T, Choice>) {
          check_constants(n.left, model);
          check_constants(n.right, model);
        } else {
          if (!model.find_definition(n.name)) {
            if (model.find_rate(n.name))
              throw ModelError(e->pos, n.name + " is a rate, not a component");
            throw ModelError(e->pos, "undefined constant " + n.name);
          }
        }
      },
      e->node);
}

// Returns the actions hidden somewhere inside `e`.
std::set<std::string> check_system(const SystemExpr& e, const PepaModel& model,
                                   std::set<std::string>& components) {
  return std::visit(
      [&](const auto& n) -> std::set<std::string> {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Group>) {
          if (!model.find_definition(n.component))
            throw ModelError(e.pos, "undefined constant " + n.component);
          if (!components.insert(n.component).second)
            throw ModelError(e.pos, "duplicate component " + n.component + " in system equation");
          return {};
        } else if constexpr (std::is_same_v<T, Coop>) {
          auto hidden = check_system(*n.left, model, components);
          auto right = check_system(*n.right, model, components);
          hidden.insert(right.begin(), right.end());
          for (const auto& a : n.actions) {
            if (hidden.count(a))
              throw ModelError(e.pos, "hidden action " + a + " in cooperation set");
          }
          return hidden;
        } else {
          auto hidden = check_system(*n.inner, model, components);
          hidden.insert(n.actions.begin(), n.actions.end());
          return hidden;
        }
      },
      e.node);
}

void collect_transitions(const PepaModel& model, const SeqPtr& e,
                         std::vector<std::string>& unguarded,
                         std::vector<LocalTransition>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Prefix>) {
          // The continuation of a prefix is a single derivative; a non-constant
          // continuation is named by its source text.
          const auto* target = std::get_if<Const>(&n.next->node);
          if (!target)
            throw ModelError(n.next->pos,
                             "prefix continuation must be a named constant");
          out.push_back({n.action, n.rate.value, target->name});
        } else if constexpr (std::is_same_v<T, Choice>) {
          collect_transitions(model, n.left, unguarded, out);
          collect_transitions(model, n.right, unguarded, out);
        } else {
          if (std::find(unguarded.begin(), unguarded.end(), n.name) != unguarded.end())
            throw ModelError(e->pos, "unguarded recursion through " + n.name);
          const Definition* def = model.find_definition(n.name);
          if (!def) throw ModelError(e->pos, "undefined constant " + n.name);
          unguarded.push_back(n.name);
          collect_transitions(model, def->body, unguarded, out);
          unguarded.pop_back();
        }
      },
      e->node);
}

std::vector<std::string> reachable_constants(const PepaModel& model, const std::string& initial) {
  std::vector<std::string> order{initial};
  std::set<std::string> seen{initial};
  std::deque<std::string> queue{initial};
  while (!queue.empty()) {
    const std::string current = queue.front();
    queue.pop_front();
    std::vector<std::string> fresh;
    for (const auto& t : local_transitions(model, current)) {
      if (seen.insert(t.target).second) fresh.push_back(t.target);
    }
    std::stable_sort(fresh.begin(), fresh.end(), [&](const auto& a, const auto& b) {
      return model.definition_rank(a) < model.definition_rank(b);
    });
    for (auto& f : fresh) {
      order.push_back(f);
      queue.push_back(f);
    }
  }
  return order;
}

void collect_groups(const SystemExpr& e, std::vector<std::pair<const Group*, SourcePos>>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Group>) {
          out.emplace_back(&n, e.pos);
        } else if constexpr (std::is_same_v<T, Coop>) {
          collect_groups(*n.left, out);
          collect_groups(*n.right, out);
        } else {
          collect_groups(*n.inner, out);
        }
      },
      e.node);
}

}  // namespace

ModelError::ModelError(const std::string& message)
    : std::runtime_error(message), message_(message) {}

ModelError::ModelError(SourcePos pos, const std::string& message)
    : std::runtime_error(format_pos(pos, message)), pos_(pos), message_(message) {}

std::string ActionType::display() const { return hidden ? "tau:" + name : name; }

RateValue RateValue::finite(double value) {
  if (!(value > 0.0)) throw std::invalid_argument("finite rate must be positive");
  return RateValue(value, false);
}

PepaModel::PepaModel(std::vector<RateBinding> rates, std::vector<Definition> definitions,
                     SystemPtr system)
    : rates_(std::move(rates)), definitions_(std::move(definitions)), system_(std::move(system)) {
  for (std::size_t i = 0; i < rates_.size(); ++i) {
    if (!rate_index_.emplace(rates_[i].name, i).second)
      throw ModelError(rates_[i].pos, "duplicate definition of " + rates_[i].name);
  }
  for (std::size_t i = 0; i < definitions_.size(); ++i) {
    if (rate_index_.count(definitions_[i].name) ||
        !def_index_.emplace(definitions_[i].name, i).second)
      throw ModelError(definitions_[i].pos, "duplicate definition of " + definitions_[i].name);
  }
  if (!system_) throw ModelError("missing system equation");
  for (const auto& d : definitions_) {
    check_constants(d.body, *this);
    collect_actions(d.body, action_order_, action_rank_);
  }
  std::set<std::string> components;
  check_system(*system_, *this, components);

  // Every definition must have well-formed, guarded transitions, and no two
  // component types may share a derivative.
  for (const auto& d : definitions_) local_transitions(*this, d.name);
  std::vector<std::pair<const Group*, SourcePos>> groups;
  collect_groups(*system_, groups);
  std::map<std::string, std::string> owner;
  for (const auto& [g, pos] : groups) {
    for (const auto& c : reachable_constants(*this, g->component)) {
      auto [it, fresh] = owner.emplace(c, g->component);
      if (!fresh)
        throw ModelError(pos, "component types " + it->second + " and " + g->component +
                                  " share derivative " + c);
    }
  }
}

const Definition* PepaModel::find_definition(std::string_view name) const {
  auto it = def_index_.find(name);
  return it == def_index_.end() ? nullptr : &definitions_[it->second];
}

std::optional<RateValue> PepaModel::find_rate(std::string_view name) const {
  auto it = rate_index_.find(name);
  if (it == rate_index_.end()) return std::nullopt;
  return rates_[it->second].value.value;
}

std::size_t PepaModel::action_rank(std::string_view action) const {
  auto it = action_rank_.find(action);
  return it == action_rank_.end() ? action_order_.size() : it->second;
}

std::size_t PepaModel::definition_rank(std::string_view name) const {
  auto it = def_index_.find(name);
  return it == def_index_.end() ? definitions_.size() : it->second;
}

std::vector<LocalTransition> local_transitions(const PepaModel& model, std::string_view constant) {
  const Definition* def = model.find_definition(constant);
  if (!def) throw ModelError("undefined constant " + std::string(constant));
  std::vector<std::string> unguarded{def->name};
  std::vector<LocalTransition> out;
  collect_transitions(model, def->body, unguarded, out);
  return out;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

void print_rate(std::ostream& os, const RateTerm& r) {
  if (!r.symbol.empty()) {
    os << r.symbol;
  } else if (r.value.is_passive()) {
    os << "infty";
  } else {
    os << format_double(r.value.value());
  }
}

void print_seq(std::ostream& os, const SeqExpr& e, bool parenthesize_choice) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Prefix>) {
          os << "(" << n.action << ", ";
          print_rate(os, n.rate);
          os << ").";
          print_seq(os, *n.next, true);
        } else if constexpr (std::is_same_v<T, Choice>) {
          if (parenthesize_choice) os << "(";
          print_seq(os, *n.left, false);
          os << " + ";
          print_seq(os, *n.right, true);
          if (parenthesize_choice) os << ")";
        } else {
          os << n.name;
        }
      },
      e.node);
}

void print_actions(std::ostream& os, const std::set<std::string>& actions) {
  bool first = true;
  for (const auto& a : actions) {
    if (!first) os << ", ";
    os << a;
    first = false;
  }
}

void print_system(std::ostream& os, const SystemExpr& e, bool parenthesize_coop) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Group>) {
          os << n.component << "[" << n.count << "]";
        } else if constexpr (std::is_same_v<T, Coop>) {
          if (parenthesize_coop) os << "(";
          print_system(os, *n.left, false);
          os << " <";
          print_actions(os, n.actions);
          os << "> ";
          print_system(os, *n.right, true);
          if (parenthesize_coop) os << ")";
        } else {
          print_system(os, *n.inner, true);
          os << " / {";
          print_actions(os, n.actions);
          os << "}";
        }
      },
      e.node);
}

bool same_seq(const SeqExpr& a, const SeqExpr& b) {
  if (a.node.index() != b.node.index()) return false;
  if (const auto* pa = std::get_if<Prefix>(&a.node)) {
    const auto& pb = std::get<Prefix>(b.node);
    return pa->action == pb.action && pa->rate == pb.rate && same_seq(*pa->next, *pb.next);
  }
  if (const auto* ca = std::get_if<Choice>(&a.node)) {
    const auto& cb = std::get<Choice>(b.node);
    return same_seq(*ca->left, *cb.left) && same_seq(*ca->right, *cb.right);
  }
  return std::get<Const>(a.node).name == std::get<Const>(b.node).name;
}

bool same_system(const SystemExpr& a, const SystemExpr& b) {
  if (a.node.index() != b.node.index()) return false;
  if (const auto* ga = std::get_if<Group>(&a.node)) {
    const auto& gb = std::get<Group>(b.node);
    return ga->component == gb.component && ga->count == gb.count;
  }
  if (const auto* ca = std::get_if<Coop>(&a.node)) {
    const auto& cb = std::get<Coop>(b.node);
    return ca->actions == cb.actions && same_system(*ca->left, *cb.left) &&
           same_system(*ca->right, *cb.right);
  }
  const auto& ha = std::get<Hide>(a.node);
  const auto& hb = std::get<Hide>(b.node);
  return ha.actions == hb.actions && same_system(*ha.inner, *hb.inner);
}

}  // namespace

std::string print_model(const PepaModel& model) {
  std::ostringstream os;
  for (const auto& r : model.rate_bindings()) {
    os << r.name << " = ";
    print_rate(os, r.value);
    os << ";\n";
  }
  if (!model.rate_bindings().empty()) os << "\n";
  for (const auto& d : model.definitions()) {
    os << d.name << " = ";
    print_seq(os, *d.body, false);
    os << ";\n";
  }
  os << "\nsystem ";
  print_system(os, model.system(), false);
  os << ";\n";
  return os.str();
}

bool same_structure(const PepaModel& a, const PepaModel& b) {
  if (a.rate_bindings().size() != b.rate_bindings().size() ||
      a.definitions().size() != b.definitions().size())
    return false;
  for (std::size_t i = 0; i < a.rate_bindings().size(); ++i) {
    const auto& ra = a.rate_bindings()[i];
    const auto& rb = b.rate_bindings()[i];
    if (ra.name != rb.name || !(ra.value == rb.value)) return false;
  }
  for (std::size_t i = 0; i < a.definitions().size(); ++i) {
    const auto& da = a.definitions()[i];
    const auto& db = b.definitions()[i];
    if (da.name != db.name || !same_seq(*da.body, *db.body)) return false;
  }
  return same_system(a.system(), b.system());
}

// ---------------------------------------------------------------------------
// Derivatives

DerivativeTable::DerivativeTable(std::vector<LocalDerivative> derivatives,
                                 std::vector<ComponentType> types)
    : derivatives_(std::move(derivatives)), types_(std::move(types)) {
  type_of_.resize(derivatives_.size());
  for (std::size_t t = 0; t < types_.size(); ++t) {
    for (std::size_t i = 0; i < types_[t].size; ++i) type_of_[types_[t].first + i] = t;
  }
  for (const auto& d : derivatives_) by_name_.emplace(d.name, d.index);
}

std::optional<std::size_t> DerivativeTable::find(std::string_view name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

std::size_t DerivativeTable::index_of(std::string_view name) const {
  auto i = find(name);
  if (!i) throw std::out_of_range("unknown local derivative " + std::string(name));
  return *i;
}

std::optional<std::size_t> DerivativeTable::find_type(std::string_view component) const {
  for (std::size_t t = 0; t < types_.size(); ++t) {
    if (types_[t].name == component) return t;
  }
  return std::nullopt;
}

DerivativeTable local_derivatives(const PepaModel& model) {
  std::vector<std::pair<const Group*, SourcePos>> groups;
  collect_groups(model.system(), groups);
  std::vector<LocalDerivative> derivatives;
  std::vector<ComponentType> types;
  for (const auto& [g, pos] : groups) {
    ComponentType type{g->component, g->count, derivatives.size(), 0};
    for (const auto& c : reachable_constants(model, g->component)) {
      derivatives.push_back({g->component, c, derivatives.size()});
      ++type.size;
    }
    types.push_back(type);
  }
  return DerivativeTable(std::move(derivatives), std::move(types));
}

}  // namespace pepakit
