#include <benchmark/benchmark.h>

#include "maxdamp/helmholtz.hpp"
#include "maxdamp/initial_data.hpp"
#include "maxdamp/observability.hpp"

using namespace maxdamp;

namespace
{

struct Setup
{
  DeRhamComplex cx;
  MaterialAssembly as;
};

Setup setup(int n, double sigma0)
{
  Setup s{assemble_complex(build_grid(n)), {}};
  MaterialSpec spec;
  spec.sigma.sigma0 = sigma0;
  s.as = sample_materials(s.cx, spec);
  return s;
}

} // namespace

static void BM_Generator(benchmark::State &state)
{
  const auto s = setup(static_cast<int>(state.range(0)), 1.0);
  const auto z = random_state(s.cx, s.as, 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(apply_generator(s.cx, s.as, z));
  state.SetItemsProcessed(state.iterations() * (s.cx.grid.num_edges() + s.cx.grid.num_faces()));
}
BENCHMARK(BM_Generator)->Arg(8)->Arg(16)->Arg(32);

static void BM_MidpointStep(benchmark::State &state)
{
  const auto s = setup(static_cast<int>(state.range(0)), 1.0);
  const MidpointStepper stepper(s.cx, s.as, s.cx.grid.h / 2);
  auto z = random_state(s.cx, s.as, 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(stepper.step(z.e, z.b));
}
BENCHMARK(BM_MidpointStep)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

static void BM_LeapfrogStep(benchmark::State &state)
{
  const auto s = setup(static_cast<int>(state.range(0)), 1.0);
  const LeapfrogStepper stepper(s.cx, s.as, 0.5 * LeapfrogStepper::cfl_limit(s.cx, s.as));
  auto z = random_state(s.cx, s.as, 1);
  Vec b_half;
  for (auto _ : state)
    benchmark::DoNotOptimize(stepper.step(z.e, z.b, b_half));
}
BENCHMARK(BM_LeapfrogStep)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

static void BM_PotentialSolve(benchmark::State &state)
{
  const auto s = setup(static_cast<int>(state.range(0)), 1.0);
  const auto z = random_state(s.cx, s.as, 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(solve_p(z.e, s.cx, s.as));
}
BENCHMARK(BM_PotentialSolve)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_GramianApply(benchmark::State &state)
{
  const auto s = setup(8, 0.0);
  GramianOptions o;
  o.T = static_cast<double>(state.range(0));
  const Gramian G(s.cx, s.as, o);
  const auto z = random_charge_free(s.cx, s.as, 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(G.apply(z));
}
BENCHMARK(BM_GramianApply)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
