#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "nrc/transport.hpp"

namespace {

struct Problem {
  std::vector<double> supply, demand, costs;
};

Problem random_problem(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Problem p;
  p.supply.assign(n, 1.0 / static_cast<double>(n));
  p.demand.assign(n, 1.0 / static_cast<double>(n));
  p.costs.resize(n * n);
  for (double& c : p.costs) c = u(rng);
  return p;
}

void BM_NetworkSimplex(benchmark::State& state) {
  const Problem p = random_problem(static_cast<std::size_t>(state.range(0)), 7);
  for (auto _ : state) benchmark::DoNotOptimize(nrc::solve_transport(p.supply, p.demand, p.costs).cost);
}
BENCHMARK(BM_NetworkSimplex)->Arg(8)->Arg(20)->Arg(50)->Arg(100);

void BM_Sinkhorn(benchmark::State& state) {
  const Problem p = random_problem(static_cast<std::size_t>(state.range(0)), 7);
  nrc::TransportOptions options;
  options.method = nrc::TransportMethod::sinkhorn;
  for (auto _ : state) benchmark::DoNotOptimize(nrc::solve_transport(p.supply, p.demand, p.costs, options).cost);
}
BENCHMARK(BM_Sinkhorn)->Arg(8)->Arg(20)->Arg(50);

}  // namespace
