#include <algorithm>
#include <limits>

#include "pepakit/derivation.hpp"

namespace pepakit {

namespace {

// Merged local transitions of one derivative for one action: post derivative
// (in derivative order) -> summed rate.
using BranchMap = std::map<std::size_t, RateValue>;

// A synchronisation pattern: the component types that jointly perform an
// action. Size one means an individual activity.
using Pattern = std::vector<std::size_t>;

struct Context {
  const PepaModel& model;
  DerivativeTable table;
  // derivative -> action name -> branches
  std::vector<std::map<std::string, BranchMap>> branches;
};

Context make_context(const PepaModel& model) {
  Context ctx{model, local_derivatives(model), {}};
  ctx.branches.resize(ctx.table.size());
  for (std::size_t u = 0; u < ctx.table.size(); ++u) {
    for (const auto& t : local_transitions(model, ctx.table[u].name)) {
      const std::size_t v = ctx.table.index_of(t.target);
      auto& bm = ctx.branches[u][t.action];
      auto it = bm.find(v);
      if (it == bm.end()) {
        bm.emplace(v, t.rate);
        continue;
      }
      if (it->second.is_passive() != t.rate.is_passive())
        throw ModelError("derivative " + ctx.table[u].name + " mixes passive and active rates on " +
                         t.action);
      if (!t.rate.is_passive()) it->second = RateValue::finite(it->second.value() + t.rate.value());
    }
    for (const auto& [action, bm] : ctx.branches[u]) {
      bool any_passive = false;
      bool any_finite = false;
      for (const auto& [v, r] : bm) (r.is_passive() ? any_passive : any_finite) = true;
      if (any_passive && any_finite)
        throw ModelError("derivative " + ctx.table[u].name + " mixes passive and active rates on " +
                         action);
    }
  }
  return ctx;
}

using PatternMap = std::map<ActionType, std::vector<Pattern>>;

PatternMap patterns(const Context& ctx, const SystemExpr& e) {
  return std::visit(
      [&](const auto& n) -> PatternMap {
        using T = std::decay_t<decltype(n)>;
        PatternMap out;
        if constexpr (std::is_same_v<T, Group>) {
          const std::size_t type = *ctx.table.find_type(n.component);
          const auto& ct = ctx.table.types()[type];
          for (std::size_t u = ct.first; u < ct.first + ct.size; ++u) {
            for (const auto& [action, bm] : ctx.branches[u]) {
              auto& list = out[ActionType{action, false}];
              if (list.empty()) list.push_back({type});
            }
          }
        } else if constexpr (std::is_same_v<T, Coop>) {
          PatternMap left = patterns(ctx, *n.left);
          PatternMap right = patterns(ctx, *n.right);
          std::set<ActionType> actions;
          for (const auto& [a, p] : left) actions.insert(a);
          for (const auto& [a, p] : right) actions.insert(a);
          for (const auto& a : actions) {
            const auto& l = left[a];
            const auto& r = right[a];
            if (a.hidden || !n.actions.count(a.name)) {
              auto& list = out[a];
              list.insert(list.end(), l.begin(), l.end());
              list.insert(list.end(), r.begin(), r.end());
              continue;
            }
            if (l.empty() || r.empty()) continue;  // blocked: no partner ever
            if (l.size() > 1 || r.size() > 1)
              throw ModelError(e.pos, "action " + a.name +
                                          " is synchronised with independent concurrent "
                                          "enablers on one side; unsupported");
            Pattern joined = l.front();
            joined.insert(joined.end(), r.front().begin(), r.front().end());
            std::sort(joined.begin(), joined.end());
            out[a].push_back(std::move(joined));
          }
        } else {
          for (auto& [a, list] : patterns(ctx, *n.inner)) {
            ActionType renamed = a;
            if (!a.hidden && n.actions.count(a.name)) renamed.hidden = true;
            auto& dst = out[renamed];
            dst.insert(dst.end(), list.begin(), list.end());
          }
        }
        return out;
      },
      e.node);
}

// Pre derivatives of `action` within a component type, in derivative order.
std::vector<std::size_t> enablers(const Context& ctx, std::size_t type, const std::string& action) {
  const auto& ct = ctx.table.types()[type];
  std::vector<std::size_t> out;
  for (std::size_t u = ct.first; u < ct.first + ct.size; ++u) {
    if (ctx.branches[u].count(action)) out.push_back(u);
  }
  return out;
}

std::string label_string(const Context& ctx, const ActionType& action,
                         const std::vector<Transfer>& label) {
  std::string s = action.display() + "{";
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (i) s += ",";
    s += ctx.table[label[i].pre].name + "->" + ctx.table[label[i].post].name;
  }
  return s + "}";
}

struct Labelled {
  LabelledActivity activity;
  std::vector<ParticipantRate> rates;
};

std::vector<Labelled> derive_labelled(const Context& ctx) {
  const PatternMap all = patterns(ctx, ctx.model.system());

  std::vector<std::pair<ActionType, const std::vector<Pattern>*>> actions;
  for (const auto& [a, list] : all) actions.emplace_back(a, &list);
  std::stable_sort(actions.begin(), actions.end(), [&](const auto& x, const auto& y) {
    const auto rx = ctx.model.action_rank(x.first.name);
    const auto ry = ctx.model.action_rank(y.first.name);
    if (rx != ry) return rx < ry;
    return x.first.hidden < y.first.hidden;
  });

  auto participant_rate = [&](std::size_t u, std::size_t v, const std::string& action) {
    const BranchMap& bm = ctx.branches[u].at(action);
    ParticipantRate pr;
    pr.branch = bm.at(v);
    pr.branches = bm.size();
    if (pr.branch.is_passive()) {
      pr.total = RateValue::passive();
    } else {
      double total = 0.0;
      for (const auto& [w, r] : bm) total += r.value();
      pr.total = RateValue::finite(total);
    }
    return pr;
  };

  std::vector<Labelled> out;
  for (const auto& [action, list] : actions) {
    std::vector<Labelled> group;
    for (const Pattern& pattern : *list) {
      if (pattern.size() == 1) {
        for (std::size_t u : enablers(ctx, pattern.front(), action.name)) {
          for (const auto& [v, r] : ctx.branches[u].at(action.name)) {
            if (r.is_passive())
              throw ModelError("passive action " + action.display() + " in " + ctx.table[u].name +
                               " is never synchronised");
            Labelled l;
            l.activity.action = action;
            l.activity.kind = ActivityKind::Individual;
            l.activity.label = {{u, v}};
            l.rates = {participant_rate(u, v, action.name)};
            group.push_back(std::move(l));
          }
        }
        continue;
      }
      std::vector<std::size_t> pre;
      for (std::size_t type : pattern) {
        const auto e = enablers(ctx, type, action.name);
        if (e.size() != 1)
          throw ModelError("shared action " + action.name + " is enabled by " +
                           std::to_string(e.size()) + " local derivatives of component type " +
                           ctx.table.types()[type].name + "; unsupported");
        pre.push_back(e.front());
      }
      bool all_passive = true;
      for (std::size_t u : pre) {
        if (!ctx.branches[u].at(action.name).begin()->second.is_passive()) all_passive = false;
      }
      if (all_passive)
        throw ModelError("unspecified synchronisation rate: every participant of " + action.name +
                         " is passive");
      // Cartesian product of post sets, first participant most significant.
      std::vector<std::vector<std::size_t>> posts;
      for (std::size_t u : pre) {
        std::vector<std::size_t> p;
        for (const auto& [v, r] : ctx.branches[u].at(action.name)) p.push_back(v);
        posts.push_back(std::move(p));
      }
      std::vector<std::size_t> cursor(pre.size(), 0);
      while (true) {
        Labelled l;
        l.activity.action = action;
        l.activity.kind = ActivityKind::Shared;
        for (std::size_t i = 0; i < pre.size(); ++i) {
          const std::size_t v = posts[i][cursor[i]];
          l.activity.label.push_back({pre[i], v});
          l.rates.push_back(participant_rate(pre[i], v, action.name));
        }
        group.push_back(std::move(l));
        std::size_t i = pre.size();
        while (i > 0) {
          --i;
          if (++cursor[i] < posts[i].size()) break;
          cursor[i] = 0;
          if (i == 0) goto done;
        }
      }
    done:;
    }
    std::stable_sort(group.begin(), group.end(), [](const Labelled& a, const Labelled& b) {
      return a.activity.label < b.activity.label;
    });
    for (auto& l : group) {
      l.activity.display_name = label_string(ctx, l.activity.action, l.activity.label);
      out.push_back(std::move(l));
    }
  }
  return out;
}

}  // namespace

std::vector<int> IntMatrix::column(std::size_t c) const {
  std::vector<int> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

std::map<ActionType, PrePostSets> pre_post_sets(const PepaModel& model) {
  const Context ctx = make_context(model);
  const PatternMap all = patterns(ctx, model.system());
  std::map<ActionType, PrePostSets> out;
  for (const auto& [action, list] : all) {
    std::set<std::size_t> types;
    for (const auto& p : list) types.insert(p.begin(), p.end());
    PrePostSets sets;
    for (std::size_t type : types) {
      for (std::size_t u : enablers(ctx, type, action.name)) {
        sets.pre.push_back(u);
        auto& post = sets.post[u];
        for (const auto& [v, r] : ctx.branches[u].at(action.name)) post.push_back(v);
      }
    }
    std::sort(sets.pre.begin(), sets.pre.end());
    out.emplace(action, std::move(sets));
  }
  return out;
}

std::vector<LabelledActivity> label_activities(const PepaModel& model) {
  std::vector<LabelledActivity> out;
  for (auto& l : derive_labelled(make_context(model))) out.push_back(std::move(l.activity));
  return out;
}

namespace {

ActivityMatrices assemble(DerivativeTable table, std::vector<LabelledActivity> activities) {
  const std::size_t rows = table.size();
  const std::size_t cols = activities.size();
  ActivityMatrices m{std::move(table), std::move(activities), IntMatrix(rows, cols),
                     IntMatrix(rows, cols), IntMatrix(rows, cols)};
  for (std::size_t j = 0; j < cols; ++j) {
    for (const auto& t : m.activities[j].label) {
      m.c_pre(t.pre, j) = 1;
      m.c_post(t.post, j) = 1;
    }
    for (std::size_t i = 0; i < rows; ++i) m.c(i, j) = m.c_post(i, j) - m.c_pre(i, j);
  }
  return m;
}

}  // namespace

ActivityMatrices build_matrices(const PepaModel& model) { return derive_all(model).matrices; }

Derivation derive_all(const PepaModel& model) {
  Context ctx = make_context(model);
  auto labelled = derive_labelled(ctx);
  std::vector<LabelledActivity> activities;
  RateSpec spec;
  for (auto& l : labelled) {
    activities.push_back(std::move(l.activity));
    spec.activities.push_back(std::move(l.rates));
  }
  return {assemble(std::move(ctx.table), std::move(activities)), std::move(spec)};
}

// ---------------------------------------------------------------------------
// Rate functions

double passive_min(double passive_count, double finite_rate) {
  return passive_count > 0 ? finite_rate : 0.0;
}

double times_infinity(double count) {
  return count == 0 ? 0.0 : std::numeric_limits<double>::infinity();
}

RateFunction::RateFunction(const ActivityMatrices& matrices, const RateSpec& spec) {
  if (spec.activities.size() != matrices.activities.size())
    throw std::invalid_argument("rate spec does not match activity matrices");
  for (std::size_t j = 0; j < spec.activities.size(); ++j) {
    const auto& act = matrices.activities[j];
    const auto& parts = spec.activities[j];
    if (parts.size() != act.label.size())
      throw std::invalid_argument("rate spec participants do not match label of " +
                                  act.display_name);
    Compiled c{act.kind == ActivityKind::Shared, 1.0, {}, act.display_name};
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const auto& p = parts[i];
      Participant q{act.label[i].pre, p.total.is_passive(), 0.0, 0.0, 0.0};
      if (p.total.is_passive()) {
        q.weight = 1.0 / static_cast<double>(p.branches);
      } else {
        q.total = p.total.value();
        q.branch = p.branch.value();
        q.weight = p.branch.value() / p.total.value();
      }
      c.factor *= q.weight;
      c.participants.push_back(q);
    }
    activities_.push_back(std::move(c));
  }
}

template <class T>
double RateFunction::eval(std::span<const T> x, std::size_t activity) const {
  const Compiled& c = activities_[activity];
  if (!c.shared) {
    const Participant& p = c.participants.front();
    const double count = static_cast<double>(x[p.pre]);
    if (p.passive) {
      const double r = times_infinity(count);
      if (r == 0.0) return 0.0;
      throw AnalysisError("unspecified rate for individual activity " + c.name);
    }
    return count * p.branch;
  }
  // The min over apparent rates skips passive participants, which only gate
  // the activity (min{A*infty, rB} = rB if A > 0, else 0).
  double min_rate = std::numeric_limits<double>::infinity();
  bool gated_off = false;
  bool any_finite = false;
  for (const Participant& p : c.participants) {
    const double count = static_cast<double>(x[p.pre]);
    if (p.passive) {
      if (passive_min(count, 1.0) == 0.0) gated_off = true;
      continue;
    }
    any_finite = true;
    min_rate = std::min(min_rate, count * p.total);
  }
  if (!any_finite) {
    if (gated_off) return 0.0;
    throw AnalysisError("unspecified synchronisation rate for " + c.name);
  }
  if (gated_off) return 0.0;
  return c.factor * min_rate;
}

double RateFunction::operator()(std::span<const double> x, std::size_t activity) const {
  return eval(x, activity);
}

double RateFunction::operator()(std::span<const std::int64_t> x, std::size_t activity) const {
  return eval(x, activity);
}

double RateFunction::evaluate_all(std::span<const double> x, std::span<double> out) const {
  double total = 0.0;
  for (std::size_t j = 0; j < activities_.size(); ++j) total += out[j] = eval(x, j);
  return total;
}

double RateFunction::evaluate_all(std::span<const std::int64_t> x, std::span<double> out) const {
  double total = 0.0;
  for (std::size_t j = 0; j < activities_.size(); ++j) total += out[j] = eval(x, j);
  return total;
}

double rate_function(const ActivityMatrices& matrices, const RateSpec& spec,
                     std::span<const double> x, std::size_t activity) {
  return RateFunction(matrices, spec)(x, activity);
}

}  // namespace pepakit
