#include <benchmark/benchmark.h>

#include <string>

#include "pepakit/fluid.hpp"
#include "pepakit/ptnet.hpp"
#include "pepakit/simulate.hpp"
#include "pepakit/statespace.hpp"

using namespace pepakit;

namespace {

const std::string kModel2 =
    "ra1 = 1.0; ra2 = 3.0; ra = 2.0;\nrb = 1.0; rb2 = 2.0; rg = 1.5; rg2 = 0.5;\n"
    "P1 = (alpha, ra1).P2 + (alpha, ra2).P3;\nP2 = (beta, rb).P1 + (beta, rb2).P3;\n"
    "P3 = (gamma, rg).P1;\nQ1 = (alpha, ra).Q2;\nQ2 = (gamma, rg2).Q1;\n"
    "system P1[1] <alpha> Q1[1];\n";

const Derivation& model2() {
  static const Derivation d = derive_all(parse_model(kModel2));
  return d;
}

void BM_ParseDerive(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(derive_all(parse_model(kModel2)));
}
BENCHMARK(BM_ParseDerive);

void BM_Reachable(benchmark::State& state) {
  const Derivation& d = model2();
  const NumericalState x0 = initial_state(d.matrices.derivatives, state.range(0));
  std::size_t n = 0;
  for (auto _ : state) {
    const TransitionSystem ts = reachable(d.matrices, d.rates, x0);
    n = ts.states.size();
    benchmark::DoNotOptimize(n);
  }
  state.counters["states"] = static_cast<double>(n);
}
BENCHMARK(BM_Reachable)->Arg(5)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_SteadyState(benchmark::State& state) {
  const Derivation& d = model2();
  const TransitionSystem ts =
      reachable(d.matrices, d.rates, initial_state(d.matrices.derivatives, state.range(0)));
  const Generator g = build_generator(ts);
  const auto method = static_cast<SteadyMethod>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(steady_state(g, method));
  state.counters["states"] = static_cast<double>(ts.states.size());
}
BENCHMARK(BM_SteadyState)
    ->Args({5, static_cast<int>(SteadyMethod::DenseLU)})
    ->Args({5, static_cast<int>(SteadyMethod::SparseLU)})
    ->Args({10, static_cast<int>(SteadyMethod::DenseLU)})
    ->Args({10, static_cast<int>(SteadyMethod::SparseLU)})
    ->Args({20, static_cast<int>(SteadyMethod::SparseLU)})
    ->Unit(benchmark::kMillisecond);

void BM_SsaSteps(benchmark::State& state) {
  const Derivation& d = model2();
  const Simulator sim(d.matrices, d.rates);
  NumericalState x = initial_state(d.matrices.derivatives, 50);
  Rng rng(1);
  for (auto _ : state) {
    const auto s = sim.step(x, rng);
    sim.apply(x, s->activity);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SsaSteps);

void BM_OdeIntegrate(benchmark::State& state) {
  const Derivation& d = model2();
  const VectorField vf(d.matrices, d.rates);
  const std::vector<double> x0{1, 0, 0, 1, 0};
  for (auto _ : state) benchmark::DoNotOptimize(integrate(vf, x0, 10.0, 0.01));
}
BENCHMARK(BM_OdeIntegrate)->Unit(benchmark::kMicrosecond);

void BM_PInvariants(benchmark::State& state) {
  const Derivation& d = model2();
  const PTSystem net = to_ptnet(d.matrices, initial_state(d.matrices.derivatives));
  for (auto _ : state) benchmark::DoNotOptimize(p_invariants(net));
}
BENCHMARK(BM_PInvariants);

}  // namespace

BENCHMARK_MAIN();
