#include <algorithm>
#include <map>

#include "pepakit/semantics.hpp"

namespace pepakit {

namespace {

// Rate of a move: a finite value, or a weight w standing for w * infty.
struct Rate {
  double value = 0.0;
  bool passive = false;
};

struct Move {
  ActionType action;
  std::vector<std::pair<std::size_t, std::size_t>> moves;
  Rate rate;
};

Rate apparent(const std::vector<const Move*>& moves, const ActionType& action) {
  Rate total;
  bool first = true;
  for (const Move* m : moves) {
    if (first) {
      total.passive = m->rate.passive;
      first = false;
    } else if (total.passive != m->rate.passive) {
      throw AnalysisError("mixed passive and active rates for action " + action.display());
    }
    total.value += m->rate.value;
  }
  return total;
}

Rate minimum(Rate a, Rate b) {
  if (a.passive && b.passive) return {std::min(a.value, b.value), true};
  if (a.passive) return b;
  if (b.passive) return a;
  return {std::min(a.value, b.value), false};
}

class Interpreter {
 public:
  Interpreter(const PepaModel& model, const DerivativeTable& table, const NumericalState& x)
      : model_(model), table_(table), x_(x) {}

  std::vector<Move> moves(const SystemExpr& e) const {
    return std::visit([&](const auto& n) { return moves_of(n); }, e.node);
  }

 private:
  std::vector<Move> moves_of(const Group& g) const {
    const auto type = table_.find_type(g.component);
    const ComponentType& ct = table_.types()[*type];
    std::vector<Move> out;
    for (std::size_t u = ct.first; u < ct.first + ct.size; ++u) {
      if (x_[u] <= 0) continue;
      // Syntactic duplicates U -a-> V are one transition with summed rate.
      std::vector<std::pair<std::string, std::size_t>> keys;
      std::vector<Rate> rates;
      for (const auto& t : local_transitions(model_, table_[u].name)) {
        const std::size_t v = table_.index_of(t.target);
        const auto key = std::make_pair(t.action, v);
        auto it = std::find(keys.begin(), keys.end(), key);
        Rate r{t.rate.is_passive() ? 1.0 : t.rate.value(), t.rate.is_passive()};
        if (it == keys.end()) {
          keys.push_back(key);
          rates.push_back(r);
        } else {
          Rate& acc = rates[it - keys.begin()];
          if (acc.passive != r.passive)
            throw AnalysisError("mixed passive and active rates for action " + t.action);
          if (!acc.passive) acc.value += r.value;
        }
      }
      const double n = static_cast<double>(x_[u]);
      for (std::size_t k = 0; k < keys.size(); ++k) {
        out.push_back({ActionType{keys[k].first, false},
                       {{u, keys[k].second}},
                       Rate{n * rates[k].value, rates[k].passive}});
      }
    }
    return out;
  }

  std::vector<Move> moves_of(const Coop& c) const {
    const auto left = moves(*c.left);
    const auto right = moves(*c.right);
    auto synchronised = [&](const ActionType& a) { return !a.hidden && c.actions.count(a.name); };
    std::vector<Move> out;
    for (const auto& m : left)
      if (!synchronised(m.action)) out.push_back(m);
    for (const auto& m : right)
      if (!synchronised(m.action)) out.push_back(m);
    for (const auto& name : c.actions) {
      const ActionType action{name, false};
      std::vector<const Move*> l;
      std::vector<const Move*> r;
      for (const auto& m : left)
        if (m.action == action) l.push_back(&m);
      for (const auto& m : right)
        if (m.action == action) r.push_back(&m);
      if (l.empty() || r.empty()) continue;
      const Rate ra_l = apparent(l, action);
      const Rate ra_r = apparent(r, action);
      const Rate shared = minimum(ra_l, ra_r);
      for (const Move* ml : l) {
        for (const Move* mr : r) {
          Move m{action, ml->moves, {}};
          m.moves.insert(m.moves.end(), mr->moves.begin(), mr->moves.end());
          std::sort(m.moves.begin(), m.moves.end());
          const double p = (ml->rate.value / ra_l.value) * (mr->rate.value / ra_r.value);
          m.rate = Rate{p * shared.value, shared.passive};
          out.push_back(std::move(m));
        }
      }
    }
    return out;
  }

  std::vector<Move> moves_of(const Hide& h) const {
    auto out = moves(*h.inner);
    for (auto& m : out) {
      if (!m.action.hidden && h.actions.count(m.action.name)) m.action.hidden = true;
    }
    return out;
  }

  const PepaModel& model_;
  const DerivativeTable& table_;
  const NumericalState& x_;
};

}  // namespace

std::vector<SemanticTransition> semantic_transitions(const PepaModel& model,
                                                     const DerivativeTable& table,
                                                     const NumericalState& state) {
  Interpreter interp(model, table, state);
  using Key = std::pair<std::string, std::vector<std::pair<std::size_t, std::size_t>>>;
  std::map<Key, SemanticTransition> merged;
  for (auto& m : interp.moves(model.system())) {
    if (m.rate.passive)
      throw AnalysisError("unspecified synchronisation rate for action " + m.action.display());
    Key key{m.action.display(), m.moves};
    auto it = merged.find(key);
    if (it != merged.end()) {
      it->second.rate += m.rate.value;
      continue;
    }
    SemanticTransition t{m.action, m.moves, m.rate.value, state};
    for (const auto& [pre, post] : m.moves) {
      --t.target[pre];
      ++t.target[post];
    }
    merged.emplace(std::move(key), std::move(t));
  }
  std::vector<SemanticTransition> out;
  out.reserve(merged.size());
  for (auto& [k, t] : merged) out.push_back(std::move(t));
  return out;
}

}  // namespace pepakit
