#include <algorithm>
#include <numeric>

#include "pepakit/ptnet.hpp"

namespace pepakit {

IntMatrix PTSystem::incidence() const {
  IntMatrix c(pre.rows(), pre.cols());
  for (std::size_t p = 0; p < pre.rows(); ++p)
    for (std::size_t t = 0; t < pre.cols(); ++t) c(p, t) = post(p, t) - pre(p, t);
  return c;
}

bool PTSystem::enabled(const NumericalState& m, std::size_t t) const {
  for (std::size_t p = 0; p < pre.rows(); ++p)
    if (m[p] < pre(p, t)) return false;
  return true;
}

NumericalState PTSystem::fire(const NumericalState& m, std::size_t t) const {
  NumericalState out = m;
  for (std::size_t p = 0; p < pre.rows(); ++p) out[p] += post(p, t) - pre(p, t);
  return out;
}

PTSystem to_ptnet(const ActivityMatrices& matrices, const NumericalState& m0) {
  PTSystem net;
  net.places = matrices.derivatives.derivatives();
  net.transitions = matrices.activities;
  net.pre = matrices.c_pre;
  net.post = matrices.c_post;
  net.m0 = m0;
  return net;
}

PTSystem to_ptnet(const PepaModel& model) {
  const ActivityMatrices m = build_matrices(model);
  return to_ptnet(m, initial_state(m.derivatives));
}

namespace {

using Row = std::vector<std::int64_t>;  // [transition part | place part]

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw AnalysisError("invariant computation overflowed");
  return r;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw AnalysisError("invariant computation overflowed");
  return r;
}

void normalize(Row& row) {
  std::int64_t g = 0;
  for (auto v : row) g = std::gcd(g, v);
  if (g > 1)
    for (auto& v : row) v /= g;
}

// True if the support of a (place part) is contained in that of b.
bool support_subset(const Row& a, const Row& b, std::size_t from) {
  for (std::size_t i = from; i < a.size(); ++i)
    if (a[i] != 0 && b[i] == 0) return false;
  return true;
}

void drop_non_minimal(std::vector<Row>& rows, std::size_t from) {
  std::vector<bool> keep(rows.size(), true);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.size() && keep[i]; ++j) {
      if (i == j || !keep[j]) continue;
      if (support_subset(rows[j], rows[i], from)) {
        // Equal supports: keep the first only.
        if (support_subset(rows[i], rows[j], from) && i < j) continue;
        keep[i] = false;
      }
    }
  }
  std::vector<Row> out;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (keep[i]) out.push_back(std::move(rows[i]));
  rows = std::move(out);
}

}  // namespace

std::vector<PInvariant> p_invariants(const PTSystem& net, std::size_t row_cap) {
  const std::size_t np = net.pre.rows();
  const std::size_t nt = net.pre.cols();
  const IntMatrix c = net.incidence();

  std::vector<Row> rows;
  for (std::size_t p = 0; p < np; ++p) {
    Row r(nt + np, 0);
    for (std::size_t t = 0; t < nt; ++t) r[t] = c(p, t);
    r[nt + p] = 1;
    rows.push_back(std::move(r));
  }

  for (std::size_t t = 0; t < nt; ++t) {
    std::vector<Row> next;
    std::vector<const Row*> pos, neg;
    for (const auto& r : rows) {
      if (r[t] == 0) next.push_back(r);
      else if (r[t] > 0) pos.push_back(&r);
      else neg.push_back(&r);
    }
    for (const Row* a : pos) {
      for (const Row* b : neg) {
        Row combined(nt + np);
        const std::int64_t fa = -(*b)[t];
        const std::int64_t fb = (*a)[t];
        for (std::size_t k = 0; k < combined.size(); ++k)
          combined[k] = checked_add(checked_mul(fa, (*a)[k]), checked_mul(fb, (*b)[k]));
        normalize(combined);
        next.push_back(std::move(combined));
        if (next.size() > row_cap)
          throw AnalysisError("invariant tableau exceeded " + std::to_string(row_cap) + " rows");
      }
    }
    drop_non_minimal(next, nt);
    rows = std::move(next);
  }

  std::vector<PInvariant> out;
  for (const auto& r : rows) {
    PInvariant inv;
    inv.y.assign(r.begin() + static_cast<std::ptrdiff_t>(nt), r.end());
    for (std::size_t p = 0; p < np; ++p) inv.value += inv.y[p] * net.m0[p];
    out.push_back(std::move(inv));
  }
  std::sort(out.begin(), out.end(),
            [](const PInvariant& a, const PInvariant& b) { return a.y > b.y; });
  return out;
}

InvariantReport check_invariants(const TransitionSystem& ts, const std::vector<PInvariant>& invs) {
  InvariantReport report;
  report.states_checked = ts.states.size();
  if (ts.states.empty()) return report;
  const NumericalState& m0 = ts.states[ts.initial];
  for (std::size_t k = 0; k < invs.size(); ++k) {
    const auto& y = invs[k].y;
    std::int64_t expected = 0;
    for (std::size_t p = 0; p < y.size(); ++p) expected += y[p] * m0[p];
    for (std::size_t s = 0; s < ts.states.size(); ++s) {
      std::int64_t actual = 0;
      for (std::size_t p = 0; p < y.size(); ++p) actual += y[p] * ts.states[s][p];
      if (actual != expected) report.violations.push_back({k, s, expected, actual});
    }
  }
  return report;
}

}  // namespace pepakit
