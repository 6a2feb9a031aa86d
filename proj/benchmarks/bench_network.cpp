#include <benchmark/benchmark.h>

#include <random>

#include "nrc/network.hpp"
#include "nrc/neural_graph.hpp"

namespace {

nrc::Vector random_input(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  nrc::Vector x(784);
  for (auto& v : x) v = u(rng);
  return x;
}

nrc::Architecture arch_for(int which) {
  if (which == 0) return nrc::parse_architecture("15,20");
  if (which == 1) return nrc::parse_architecture("15,25,20,15");
  return nrc::parse_architecture("cnn");
}

void BM_Forward(benchmark::State& state) {
  const nrc::Network net = nrc::Network::initialized(arch_for(static_cast<int>(state.range(0))), 3);
  const nrc::Vector x = random_input(4);
  for (auto _ : state) benchmark::DoNotOptimize(nrc::logits(net, x));
}
BENCHMARK(BM_Forward)->Arg(0)->Arg(1)->Arg(2);

void BM_BatchGradient(benchmark::State& state) {
  const nrc::Network net = nrc::Network::initialized(arch_for(static_cast<int>(state.range(0))), 3);
  nrc::Matrix inputs(784, 128);
  for (Eigen::Index b = 0; b < inputs.cols(); ++b) inputs.col(b) = random_input(static_cast<std::uint64_t>(b));
  std::vector<int> labels(128);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 10);
  for (auto _ : state) benchmark::DoNotOptimize(nrc::batch_input_gradients(net, inputs, labels));
}
BENCHMARK(BM_BatchGradient)->Arg(0)->Arg(1);

void BM_NeuralDataGraph(benchmark::State& state) {
  const nrc::Network net = nrc::Network::initialized(arch_for(static_cast<int>(state.range(0))), 3);
  const nrc::Vector x = random_input(4);
  for (auto _ : state) benchmark::DoNotOptimize(nrc::build_neural_data_graph(net, x).graph.edge_count());
}
BENCHMARK(BM_NeuralDataGraph)->Arg(0)->Arg(1);

}  // namespace
