#include "nrc/neural_graph.hpp"

#include <algorithm>
#include <cmath>

#include "nrc/errors.hpp"

namespace nrc {

WeightedGraph::WeightedGraph(std::size_t node_count) : adjacency_(node_count) {}

WeightedGraph::WeightedGraph(std::vector<int> layer_sizes) : layer_sizes_(std::move(layer_sizes)) {
  std::size_t total = 0;
  for (int size : layer_sizes_) {
    if (size < 0) throw std::invalid_argument("negative layer size");
    layer_offsets_.push_back(total);
    total += static_cast<std::size_t>(size);
  }
  adjacency_.resize(total);
}

std::uint64_t WeightedGraph::key(std::size_t u, std::size_t v) {
  if (u > v) std::swap(u, v);
  return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint64_t>(v);
}

std::size_t WeightedGraph::node(NodeId id) const {
  if (!layered()) {
    if (id.layer != 0 || id.index < 0 || static_cast<std::size_t>(id.index) >= node_count())
      throw std::out_of_range("node id outside the graph");
    return static_cast<std::size_t>(id.index);
  }
  if (id.layer < 0 || static_cast<std::size_t>(id.layer) >= layer_sizes_.size() || id.index < 0 ||
      id.index >= layer_sizes_[static_cast<std::size_t>(id.layer)])
    throw std::out_of_range("node id outside the architecture");
  return layer_offsets_[static_cast<std::size_t>(id.layer)] + static_cast<std::size_t>(id.index);
}

NodeId WeightedGraph::node_id(std::size_t node) const {
  if (node >= node_count()) throw std::out_of_range("node outside the graph");
  if (!layered()) return {0, static_cast<int>(node)};
  const auto it = std::upper_bound(layer_offsets_.begin(), layer_offsets_.end(), node);
  const auto layer = static_cast<std::size_t>(std::distance(layer_offsets_.begin(), it) - 1);
  return {static_cast<int>(layer), static_cast<int>(node - layer_offsets_[layer])};
}

void WeightedGraph::add_edge(std::size_t u, std::size_t v, double weight) {
  if (u >= node_count() || v >= node_count()) throw std::out_of_range("edge endpoint outside the graph");
  if (u == v) throw std::invalid_argument("self loops are not allowed");
  if (!(weight > 0.0) || !std::isfinite(weight))
    throw std::invalid_argument("edge weights must be positive and finite");
  if (layered() && std::abs(node_id(u).layer - node_id(v).layer) != 1)
    throw std::invalid_argument("edges must join consecutive layers");
  if (!edge_keys_.insert(key(u, v)).second) throw std::invalid_argument("duplicate edge");
  adjacency_[u].push_back({v, weight});
  adjacency_[v].push_back({u, weight});
  edges_.push_back({std::min(u, v), std::max(u, v), weight});
}

bool WeightedGraph::has_edge(std::size_t u, std::size_t v) const { return edge_keys_.count(key(u, v)) != 0; }

std::optional<double> WeightedGraph::weight(std::size_t u, std::size_t v) const {
  if (!has_edge(u, v)) return std::nullopt;
  for (const auto& n : adjacency_.at(u))
    if (n.node == v) return n.weight;
  return std::nullopt;
}

WeightedGraph WeightedGraph::scaled(double factor) const {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw std::invalid_argument("scale factor must be positive");
  WeightedGraph out = layered() ? WeightedGraph(layer_sizes_) : WeightedGraph(node_count());
  for (const auto& e : edges_) out.add_edge(e.u, e.v, e.weight * factor);
  return out;
}

std::vector<int> layer_sizes(const Network& net) {
  std::vector<int> sizes = {net.input_dim()};
  for (const auto& layer : net.layers()) sizes.push_back(layer.out_dim);
  return sizes;
}

NormalizationOutcome normalize_mixed_sign(std::span<const double> weights, std::span<const double> activations,
                                          double bias, const GraphOptions& options) {
  if (weights.size() != activations.size())
    throw DimensionError("normalization needs one activation per incoming weight");
  NormalizationOutcome out;
  out.weights.assign(weights.begin(), weights.end());
  out.activations.assign(activations.begin(), activations.end());
  out.bias = bias;

  double weighted = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weighted += weights[i] * activations[i];
    if (weights[i] > 0.0) out.positive_sum += weights[i] * activations[i];
  }
  // A positive bias that outweighs the negative inputs leaves the positive edges unscaled.
  out.sum = options.sum_mode == SumMode::pre_activation ? std::min(weighted + bias, out.positive_sum) : weighted;

  out.normalized.assign(weights.size(), 0.0);
  if (!(out.positive_sum > 0.0)) {
    out.degenerate = true;
    for (std::size_t i = 0; i < weights.size(); ++i) out.dropped.push_back(i);
    return out;
  }
  out.scale = out.sum / out.positive_sum;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0)) {
      out.dropped.push_back(i);
      continue;
    }
    double w_hat = weights[i] * out.scale;
    if (options.sum_mode == SumMode::inputs_only) {
      w_hat = std::max(w_hat, options.min_effective_weight);
    } else if (w_hat < options.min_effective_weight) {
      out.dropped.push_back(i);
      continue;
    }
    out.normalized[i] = w_hat;
  }
  return out;
}

namespace {

// Incoming (source, weight) lists per target neuron of one layer.
struct Incidence {
  int source;
  double weight;
};

std::vector<std::vector<Incidence>> incoming_edges(const Layer& layer) {
  std::vector<std::vector<Incidence>> incoming(static_cast<std::size_t>(layer.out_dim));
  if (layer.kind == LayerKind::dense) {
    for (int k = 0; k < layer.out_dim; ++k) {
      auto& list = incoming[static_cast<std::size_t>(k)];
      list.reserve(static_cast<std::size_t>(layer.in_dim));
      for (int j = 0; j < layer.in_dim; ++j) list.push_back({j, layer.weights(k, j)});
    }
  } else {
    for (const auto& e : unroll_conv(layer).entries) incoming[static_cast<std::size_t>(e.output)].push_back({e.input, e.weight});
  }
  return incoming;
}

// bias of output neuron k of a layer
double output_bias(const Layer& layer, int k) {
  if (layer.kind == LayerKind::dense) return layer.bias[k];
  return layer.bias[k / layer.conv.positions()];
}

}  // namespace

WeightedGraph build_neural_graph(const Network& net) {
  WeightedGraph graph(layer_sizes(net));
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const auto incoming = incoming_edges(net.layer(l));
    for (std::size_t k = 0; k < incoming.size(); ++k)
      for (const auto& in : incoming[k])
        if (in.weight != 0.0)
          graph.add_edge(NodeId{static_cast<int>(l), in.source}, NodeId{static_cast<int>(l) + 1, static_cast<int>(k)},
                         1.0 / std::abs(in.weight));
  }
  return graph;
}

NeuralDataGraph build_neural_data_graph(const Network& net, const Vector& x, const GraphOptions& options) {
  NeuralDataGraph result;
  result.trace = forward(net, x).trace;
  result.graph = WeightedGraph(layer_sizes(net));
  const auto& act = result.trace.layers;

  for (std::size_t l = 0; l < net.depth(); ++l) {
    const Layer& layer = net.layer(l);
    const Vector& source_act = act[l];
    const Vector& target_act = act[l + 1];
    const auto incoming = incoming_edges(layer);
    const int src_layer = static_cast<int>(l);
    const int dst_layer = static_cast<int>(l) + 1;

    for (std::size_t k = 0; k < incoming.size(); ++k) {
      // surviving incidences: nonzero weight, active source
      std::vector<int> sources;
      std::vector<double> weights;
      std::vector<double> activations;
      bool has_negative = false;
      for (const auto& in : incoming[k]) {
        if (in.weight == 0.0 || !(source_act[in.source] > 0.0)) continue;
        sources.push_back(in.source);
        weights.push_back(in.weight);
        activations.push_back(source_act[in.source]);
        has_negative = has_negative || in.weight < 0.0;
      }
      if (sources.empty()) continue;

      const NodeId target{dst_layer, static_cast<int>(k)};
      // ReLU neurons are active when their output is positive; logits when the logit is.
      const bool active = target_act[static_cast<Eigen::Index>(k)] > 0.0;
      if (!active || !has_negative) {
        for (std::size_t i = 0; i < sources.size(); ++i)
          result.graph.add_edge(NodeId{src_layer, sources[i]}, target, 1.0 / std::abs(weights[i]));
        continue;
      }
      NormalizationOutcome outcome =
          normalize_mixed_sign(weights, activations, output_bias(layer, static_cast<int>(k)), options);
      outcome.target = target;
      outcome.sources = sources;
      for (std::size_t i = 0; i < sources.size(); ++i)
        if (outcome.normalized[i] > 0.0)
          result.graph.add_edge(NodeId{src_layer, sources[i]}, target, 1.0 / outcome.normalized[i]);
      result.normalizations.push_back(std::move(outcome));
    }
  }
  return result;
}

ReportTable graph_edge_table(const WeightedGraph& graph) {
  ReportTable t;
  t.columns = {"layer_u", "idx_u", "layer_v", "idx_v", "weight"};
  for (const auto& e : graph.edges()) {
    const NodeId a = graph.node_id(e.u);
    const NodeId b = graph.node_id(e.v);
    t.add_row({static_cast<long long>(a.layer), static_cast<long long>(a.index), static_cast<long long>(b.layer),
               static_cast<long long>(b.index), e.weight});
  }
  return t;
}

}  // namespace nrc
