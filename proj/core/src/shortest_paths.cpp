#include "nrc/shortest_paths.hpp"

#include <functional>
#include <queue>
#include <stdexcept>

namespace nrc {

namespace {

using QueueEntry = std::pair<double, std::size_t>;
using MinQueue = std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>>;

// Runs Dijkstra from `source`; stops early once `remaining` targets are settled.
void dijkstra(const WeightedGraph& graph, std::size_t source, std::vector<double>& dist,
              const std::vector<char>* is_target, std::size_t remaining) {
  dist.assign(graph.node_count(), kUnreachable);
  std::vector<char> settled(graph.node_count(), 0);
  MinQueue queue;
  dist[source] = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (settled[u]) continue;
    settled[u] = 1;
    if (is_target && (*is_target)[u] && --remaining == 0) return;
    for (const auto& n : graph.neighbors(u)) {
      const double nd = d + n.weight;
      if (nd < dist[n.node]) {
        dist[n.node] = nd;
        queue.emplace(nd, n.node);
      }
    }
  }
}

}  // namespace

std::vector<double> single_source_distances(const WeightedGraph& graph, std::size_t source) {
  if (source >= graph.node_count()) throw std::out_of_range("source outside the graph");
  std::vector<double> dist;
  dijkstra(graph, source, dist, nullptr, 0);
  return dist;
}

DistanceTable shortest_distances(const WeightedGraph& graph, std::span<const std::size_t> sources,
                                 std::span<const std::size_t> targets) {
  DistanceTable table;
  table.sources.assign(sources.begin(), sources.end());
  table.targets.assign(targets.begin(), targets.end());
  table.values.resize(sources.size() * targets.size());

  std::vector<char> is_target(graph.node_count(), 0);
  std::size_t distinct = 0;
  for (std::size_t t : targets) {
    if (t >= graph.node_count()) throw std::out_of_range("target outside the graph");
    if (!is_target[t]) ++distinct;
    is_target[t] = 1;
  }
  std::vector<double> dist;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (sources[i] >= graph.node_count()) throw std::out_of_range("source outside the graph");
    dijkstra(graph, sources[i], dist, &is_target, distinct);
    for (std::size_t j = 0; j < targets.size(); ++j) table.values[i * targets.size() + j] = dist[targets[j]];
  }
  return table;
}

}  // namespace nrc
