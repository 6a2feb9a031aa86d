#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "nrc/data_io.hpp"
#include "nrc/network.hpp"

namespace nrc {

// Neuron i of layer l; layer 0 holds the input pixels, the last layer the logits.
struct NodeId {
  int layer = 0;
  int index = 0;
  auto operator<=>(const NodeId&) const = default;
};

struct Neighbor {
  std::size_t node;
  double weight;
};

struct GraphEdge {
  std::size_t u;  // u < v
  std::size_t v;
  double weight;
};

// Undirected graph with strictly positive finite edge weights. When built
// with layer sizes, nodes are numbered layer by layer and edges may only join
// consecutive layers.
class WeightedGraph {
 public:
  WeightedGraph() = default;
  explicit WeightedGraph(std::size_t node_count);
  explicit WeightedGraph(std::vector<int> layer_sizes);

  std::size_t node_count() const { return adjacency_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  bool layered() const { return !layer_offsets_.empty(); }

  std::size_t node(NodeId id) const;
  NodeId node_id(std::size_t node) const;
  std::span<const int> layer_sizes() const { return layer_sizes_; }

  // Throws std::invalid_argument on self loops, duplicates, non-positive or
  // non-finite weights, and (layered graphs) non-consecutive layers.
  void add_edge(std::size_t u, std::size_t v, double weight);
  void add_edge(NodeId u, NodeId v, double weight) { add_edge(node(u), node(v), weight); }

  bool has_edge(std::size_t u, std::size_t v) const;
  std::optional<double> weight(std::size_t u, std::size_t v) const;
  std::span<const Neighbor> neighbors(std::size_t u) const { return adjacency_.at(u); }
  std::size_t degree(std::size_t u) const { return adjacency_.at(u).size(); }
  const std::vector<GraphEdge>& edges() const { return edges_; }

  // Same topology with every weight multiplied by `factor` > 0.
  WeightedGraph scaled(double factor) const;

 private:
  static std::uint64_t key(std::size_t u, std::size_t v);

  std::vector<std::vector<Neighbor>> adjacency_;
  std::vector<GraphEdge> edges_;
  std::unordered_set<std::uint64_t> edge_keys_;
  std::vector<int> layer_sizes_;
  std::vector<std::size_t> layer_offsets_;
};

// Which quantity plays the role of `sum` when normalizing mixed-sign weights.
enum class SumMode {
  // Pre-activation (weighted inputs plus bias) capped at pos_sum; positive for
  // active neurons, so the scale factor stays in (0, 1].
  pre_activation,
  // Weighted inputs only; scaled weights are clamped up to the minimum weight.
  inputs_only,
};

struct GraphOptions {
  SumMode sum_mode = SumMode::pre_activation;
  double min_effective_weight = 1e-8;  // tau: kept edges need w_hat >= tau
};

struct NormalizationOutcome {
  NodeId target;
  std::vector<int> sources;         // source neuron indices (active sources only)
  std::vector<double> weights;      // original NN weights
  std::vector<double> activations;  // source activations n_{l,i}(x)
  double bias = 0.0;
  double sum = 0.0;
  double positive_sum = 0.0;
  double scale = 0.0;                // sum / positive_sum
  std::vector<double> normalized;    // w_hat per source; 0 for dropped edges
  std::vector<std::size_t> dropped;  // positions into `sources`
  bool degenerate = false;           // positive_sum == 0: every edge dropped
};

// Rescales the positive weights of one active target neuron so their weighted
// contribution equals `sum`; negative-weight edges are dropped.
NormalizationOutcome normalize_mixed_sign(std::span<const double> weights, std::span<const double> activations,
                                          double bias, const GraphOptions& options = {});

// One node per neuron, one edge of weight 1/|w| per nonzero NN weight
// (conv layers contribute one edge per kernel incidence).
WeightedGraph build_neural_graph(const Network& net);

struct NeuralDataGraph {
  WeightedGraph graph;
  std::vector<NormalizationOutcome> normalizations;
  ActivationTrace trace;
};

// Input-specific graph: edges out of zero-activation neurons are removed and
// incoming weights of active neurons with mixed signs are normalized.
NeuralDataGraph build_neural_data_graph(const Network& net, const Vector& x, const GraphOptions& options = {});

// Layer sizes (input, every layer output) of a network.
std::vector<int> layer_sizes(const Network& net);

// Edge list CSV: layer_u,idx_u,layer_v,idx_v,weight.
ReportTable graph_edge_table(const WeightedGraph& graph);

}  // namespace nrc
