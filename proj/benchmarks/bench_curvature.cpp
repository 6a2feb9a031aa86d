#include <benchmark/benchmark.h>

#include <random>

#include "nrc/curvature.hpp"
#include "nrc/network.hpp"

namespace {

nrc::WeightedGraph random_graph(std::size_t n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  nrc::WeightedGraph g(n);
  for (std::size_t i = 1; i < n; ++i) g.add_edge(i - 1, i, 0.5 + u(rng));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 2; j < n; ++j)
      if (u(rng) < p) g.add_edge(i, j, 0.5 + u(rng));
  return g;
}

void BM_CurvatureRandomGraph(benchmark::State& state) {
  const nrc::WeightedGraph g = random_graph(static_cast<std::size_t>(state.range(0)), 0.1, 11);
  for (auto _ : state) benchmark::DoNotOptimize(nrc::curvature_all_edges(g).edges.size());
}
BENCHMARK(BM_CurvatureRandomGraph)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_NrcDense(benchmark::State& state) {
  const nrc::Network net = nrc::Network::initialized(nrc::parse_architecture(state.range(0) == 0 ? "15,20" : "15,25,20,15"), 3);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // About as many lit pixels as an MNIST digit.
  nrc::Vector x = nrc::Vector::Zero(784);
  for (int k = 0; k < 150; ++k) x[static_cast<Eigen::Index>(rng() % 784)] = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(nrc::nrc_all_edges(net, x).edges.size());
}
BENCHMARK(BM_NrcDense)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
