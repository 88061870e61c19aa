#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numeric>
#include <string>

#include "pepakit/statespace.hpp"

namespace pepakit {

std::size_t StateHash::operator()(const NumericalState& s) const noexcept {
  std::size_t h = 1469598103934665603ull;
  for (auto v : s) {
    h ^= std::hash<std::int64_t>{}(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

NumericalState initial_state(const DerivativeTable& table, std::int64_t scale) {
  NumericalState x(table.size(), 0);
  for (const auto& t : table.types()) x[t.first] = t.population * scale;
  return x;
}

NumericalState initial_state(const PepaModel& model, std::int64_t scale) {
  return initial_state(local_derivatives(model), scale);
}

std::optional<std::size_t> TransitionSystem::find(const NumericalState& s) const {
  auto it = index.find(s);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

TransitionSystem reachable(const ActivityMatrices& matrices, const RateSpec& spec,
                           const NumericalState& initial, std::size_t cap) {
  const RateFunction f(matrices, spec);
  const std::size_t cols = matrices.activities.size();
  std::vector<std::vector<int>> columns(cols);
  for (std::size_t j = 0; j < cols; ++j) columns[j] = matrices.c.column(j);

  TransitionSystem ts;
  ts.states.push_back(initial);
  ts.index.emplace(initial, 0);
  std::vector<double> rates(cols);
  for (std::size_t i = 0; i < ts.states.size(); ++i) {
    const NumericalState x = ts.states[i];
    f.evaluate_all(std::span<const std::int64_t>(x), rates);
    for (std::size_t j = 0; j < cols; ++j) {
      if (!(rates[j] > 0.0)) continue;
      NumericalState y = x;
      for (std::size_t k = 0; k < y.size(); ++k) y[k] += columns[j][k];
      auto [it, fresh] = ts.index.emplace(y, ts.states.size());
      if (fresh) {
        if (ts.states.size() >= cap) {
          throw AnalysisError("state-space limit of " + std::to_string(cap) +
                              " states exceeded");
        }
        ts.states.push_back(std::move(y));
      }
      ts.edges.push_back({i, j, rates[j], it->second});
    }
  }
  return ts;
}

boost::multiprecision::cpp_int state_space_bound(const DerivativeTable& table, std::int64_t scale) {
  using boost::multiprecision::cpp_int;
  cpp_int bound = 1;
  for (const auto& t : table.types()) {
    // C(M + d - 1, d - 1) built incrementally; each partial product is exact.
    const std::int64_t m = t.population * scale;
    const std::int64_t k = static_cast<std::int64_t>(t.size) - 1;
    cpp_int binom = 1;
    for (std::int64_t i = 1; i <= k; ++i) {
      binom *= m + i;
      binom /= i;
    }
    bound *= binom;
  }
  return bound;
}

std::vector<std::size_t> deadlocks(const TransitionSystem& ts) {
  std::vector<bool> live(ts.states.size(), false);
  for (const auto& e : ts.edges) {
    if (e.src != e.dst) live[e.src] = true;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < live.size(); ++i) {
    if (!live[i]) out.push_back(i);
  }
  return out;
}

Generator build_generator(const TransitionSystem& ts) {
  const auto n = static_cast<Eigen::Index>(ts.states.size());
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> exit(ts.states.size(), 0.0);
  for (const auto& e : ts.edges) {
    if (e.src == e.dst) continue;
    triplets.emplace_back(static_cast<Eigen::Index>(e.src), static_cast<Eigen::Index>(e.dst),
                          e.rate);
    exit[e.src] += e.rate;
  }
  for (std::size_t i = 0; i < exit.size(); ++i) {
    if (exit[i] != 0.0) {
      const auto ii = static_cast<Eigen::Index>(i);
      triplets.emplace_back(ii, ii, -exit[i]);
    }
  }
  Generator g{SparseGenerator(n, n)};
  g.q.setFromTriplets(triplets.begin(), triplets.end());
  g.q.makeCompressed();
  return g;
}

std::vector<std::size_t> strongly_connected_components(const Generator& g, std::size_t* count) {
  // Iterative Tarjan.
  const std::size_t n = g.size();
  constexpr std::size_t unvisited = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, unvisited), low(n, 0), comp(n, unvisited);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::size_t next_index = 0;
  std::size_t next_comp = 0;
  struct Frame {
    std::size_t v;
    SparseGenerator::InnerIterator it;
  };
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != unvisited) continue;
    std::vector<Frame> frames;
    auto push = [&](std::size_t v) {
      index[v] = low[v] = next_index++;
      stack.push_back(v);
      on_stack[v] = true;
      frames.push_back({v, SparseGenerator::InnerIterator(g.q, static_cast<Eigen::Index>(v))});
    };
    push(root);
    while (!frames.empty()) {
      Frame& fr = frames.back();
      bool descended = false;
      for (; fr.it; ++fr.it) {
        const auto w = static_cast<std::size_t>(fr.it.col());
        if (w == fr.v || fr.it.value() <= 0.0) continue;
        if (index[w] == unvisited) {
          ++fr.it;
          push(w);
          descended = true;
          break;
        }
        if (on_stack[w]) low[fr.v] = std::min(low[fr.v], index[w]);
      }
      if (descended) continue;
      const std::size_t v = fr.v;
      frames.pop_back();
      if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
      if (low[v] == index[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = next_comp;
        } while (w != v);
        ++next_comp;
      }
    }
  }
  if (count) *count = next_comp;
  return comp;
}

namespace {

void require_irreducible(const Generator& g) {
  std::size_t count = 0;
  const auto comp = strongly_connected_components(g, &count);
  if (count <= 1) return;
  // A component is closed when no edge leaves it.
  std::vector<bool> leaves(count, false);
  std::vector<std::vector<std::size_t>> members(count);
  for (std::size_t i = 0; i < g.size(); ++i) {
    members[comp[i]].push_back(i);
    for (SparseGenerator::InnerIterator it(g.q, static_cast<Eigen::Index>(i)); it; ++it) {
      const auto j = static_cast<std::size_t>(it.col());
      if (j != i && it.value() > 0.0 && comp[j] != comp[i]) leaves[comp[i]] = true;
    }
  }
  std::string msg = "reducible chain: " + std::to_string(count) +
                    " strongly connected components; closed components:";
  for (std::size_t c = count; c-- > 0;) {
    if (leaves[c]) continue;
    msg += " {";
    for (std::size_t k = 0; k < members[c].size() && k < 8; ++k) {
      if (k) msg += ",";
      msg += std::to_string(members[c][k]);
    }
    if (members[c].size() > 8) msg += ",...";
    msg += "}";
  }
  throw AnalysisError(msg);
}

std::vector<double> normalised(const Eigen::VectorXd& v) {
  std::vector<double> pi(v.data(), v.data() + v.size());
  double sum = 0.0;
  for (double& p : pi) {
    if (p < 0.0 && p > -1e-14) p = 0.0;
    sum += p;
  }
  for (double& p : pi) p /= sum;
  return pi;
}

std::vector<double> solve_dense(const Generator& g) {
  const auto n = g.q.rows();
  Eigen::MatrixXd a = Eigen::MatrixXd(g.q).transpose();
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  return normalised(a.partialPivLu().solve(b));
}

std::vector<double> solve_sparse(const Generator& g) {
  const auto n = g.q.rows();
  Eigen::SparseMatrix<double> a = Eigen::SparseMatrix<double>(g.q.transpose());
  std::vector<Eigen::Triplet<double>> triplets;
  for (Eigen::Index k = 0; k < a.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it) {
      if (it.row() != n - 1) triplets.emplace_back(it.row(), it.col(), it.value());
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) triplets.emplace_back(n - 1, j, 1.0);
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(m);
  if (lu.info() != Eigen::Success) throw AnalysisError("sparse LU factorisation failed");
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success) throw AnalysisError("sparse LU solve failed");
  return normalised(x);
}

std::vector<double> solve_power(const Generator& g) {
  const auto n = g.q.rows();
  double lambda = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) lambda = std::max(lambda, -g.q.coeff(i, i));
  lambda *= 1.02;
  // pi <- pi (I + Q / lambda)
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  const Eigen::SparseMatrix<double> qt = Eigen::SparseMatrix<double>(g.q.transpose()) / lambda;
  for (long iter = 0; iter < 10'000'000; ++iter) {
    Eigen::VectorXd next = pi + qt * pi;
    next /= next.sum();
    const double delta = (next - pi).cwiseAbs().maxCoeff();
    pi = std::move(next);
    if (delta < 1e-12) return normalised(pi);
  }
  throw AnalysisError("power iteration did not converge");
}

}  // namespace

std::vector<double> steady_state(const Generator& g, SteadyMethod method) {
  if (g.size() == 0) throw AnalysisError("empty state space");
  if (g.size() == 1) return {1.0};
  require_irreducible(g);
  switch (method) {
    case SteadyMethod::DenseLU: return solve_dense(g);
    case SteadyMethod::SparseLU: return solve_sparse(g);
    case SteadyMethod::Power: return solve_power(g);
    case SteadyMethod::Auto: break;
  }
  return g.size() <= kDenseSteadyLimit ? solve_dense(g) : solve_sparse(g);
}

double balance_residual(const Generator& g, const std::vector<double>& pi) {
  const Eigen::Map<const Eigen::VectorXd> p(pi.data(), static_cast<Eigen::Index>(pi.size()));
  const Eigen::VectorXd r = Eigen::SparseMatrix<double>(g.q.transpose()) * p;
  return r.cwiseAbs().maxCoeff();
}

TransientResult transient(const Generator& g, const std::vector<double>& pi0, double t_end,
                          double dt) {
  if (!(dt > 0.0)) throw AnalysisError("time step must be positive");
  if (t_end < 0.0) throw AnalysisError("end time must be nonnegative");
  if (pi0.size() != g.size()) throw AnalysisError("initial distribution has wrong size");
  const double mass = std::accumulate(pi0.begin(), pi0.end(), 0.0);
  if (std::abs(mass - 1.0) > 1e-9) throw AnalysisError("initial distribution must sum to 1");

  const auto n = static_cast<Eigen::Index>(g.size());
  const Eigen::SparseMatrix<double> qt = Eigen::SparseMatrix<double>(g.q.transpose());
  double lambda = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) lambda = std::max(lambda, -g.q.coeff(i, i));

  TransientResult out;
  Eigen::VectorXd pi = Eigen::Map<const Eigen::VectorXd>(pi0.data(), n);
  out.times.push_back(0.0);
  out.distributions.push_back(pi0);

  // Uniformisation: pi(t + h) = sum_k Poisson(k; lambda h) pi P^k with
  // P = I + Q / lambda. Chunks keep lambda h <= 20 so exp(-lambda h) stays
  // well above underflow.
  constexpr double kMaxChunk = 20.0;
  constexpr double kTailMass = 1e-14;
  auto advance = [&](double span) {
    if (lambda == 0.0 || span <= 0.0) return;
    const auto chunks = std::max<long>(1, static_cast<long>(std::ceil(span * lambda / kMaxChunk)));
    const double a = span * lambda / static_cast<double>(chunks);
    const long max_terms = static_cast<long>(10.0 * a) + 200;
    for (long c = 0; c < chunks; ++c) {
      Eigen::VectorXd term = pi;
      double weight = std::exp(-a);
      double covered = weight;
      Eigen::VectorXd acc = weight * term;
      for (long k = 1; k < max_terms && covered < 1.0 - kTailMass; ++k) {
        term += (qt * term) / lambda;
        weight *= a / static_cast<double>(k);
        covered += weight;
        acc += weight * term;
      }
      pi = acc;
    }
  };

  const auto steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  double t = 0.0;
  for (long k = 1; k <= steps; ++k) {
    const double t_next = std::min(t_end, static_cast<double>(k) * dt);
    advance(t_next - t);
    const double sum = pi.sum();
    out.max_drift = std::max(out.max_drift, std::abs(sum - 1.0));
    pi /= sum;
    t = t_next;
    out.times.push_back(t);
    out.distributions.emplace_back(pi.data(), pi.data() + n);
  }
  return out;
}

}  // namespace pepakit
