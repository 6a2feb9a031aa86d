#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "nrc/neural_graph.hpp"

namespace nrc {

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

// Dijkstra from one source over the whole graph; unreachable nodes get +inf.
std::vector<double> single_source_distances(const WeightedGraph& graph, std::size_t source);

// Row-major |sources| x |targets| table of exact shortest-path distances.
struct DistanceTable {
  std::vector<std::size_t> sources;
  std::vector<std::size_t> targets;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * targets.size() + j]; }
};

// One Dijkstra per source, stopped once every target is settled.
DistanceTable shortest_distances(const WeightedGraph& graph, std::span<const std::size_t> sources,
                                 std::span<const std::size_t> targets);

}  // namespace nrc
