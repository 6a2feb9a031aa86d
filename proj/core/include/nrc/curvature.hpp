#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "nrc/data_io.hpp"
#include "nrc/neural_graph.hpp"
#include "nrc/shortest_paths.hpp"
#include "nrc/transport.hpp"

namespace nrc {

enum class MeasureMode {
  uniform,      // (1 - alpha) / deg on every neighbor
  exponential,  // neighbor mass proportional to exp(-w(node, neighbor))
};

struct MeasureSettings {
  MeasureMode mode = MeasureMode::uniform;
  double alpha = 0.0;  // mass kept on the node itself, in [0, 1)
  TransportOptions transport;
};

struct NeighborMeasure {
  std::vector<std::size_t> support;
  std::vector<double> mass;
  MeasureMode mode = MeasureMode::uniform;
  double alpha = 0.0;
};

// Nothing for an isolated node. The node itself is in the support only when alpha > 0.
std::optional<NeighborMeasure> neighbor_measure(const WeightedGraph& graph, std::size_t node,
                                                const MeasureSettings& settings = {});

// Exact W1 between two measures given distances from every support point of
// `from` (rows) to every support point of `to` (columns).
TransportPlan wasserstein1(const NeighborMeasure& from, const NeighborMeasure& to, const DistanceTable& distances,
                           const TransportOptions& options = {});

// kappa(u, v) = 1 - W1(m_u, m_v) / d(u, v) with d the shortest-path distance.
// Nothing when a measure cannot be formed or the endpoints are disconnected.
std::optional<double> orc_edge(const WeightedGraph& graph, std::size_t u, std::size_t v,
                               const MeasureSettings& settings = {});

struct EdgeCurvature {
  std::size_t u = 0;
  std::size_t v = 0;
  NodeId u_id;
  NodeId v_id;
  double weight = 0.0;
  std::optional<double> kappa;
};

struct CurvatureSummary {
  std::size_t count = 0;      // defined edges
  std::size_t undefined = 0;  // excluded from statistics
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double fraction_negative = 0.0;
};

struct CurvatureReport {
  std::vector<EdgeCurvature> edges;

  std::vector<double> defined_values() const;
  CurvatureSummary summary() const;
};

// Curvature of every edge, ordered like graph.edges(). Distances come from
// one cached Dijkstra row per node; edges are processed on `workers` threads.
CurvatureReport curvature_all_edges(const WeightedGraph& graph, const MeasureSettings& settings = {},
                                    std::size_t workers = 1);

// Neural Ricci curvature: curvature of every edge of the neural data graph of (net, x).
CurvatureReport nrc_all_edges(const Network& net, const Vector& x, const MeasureSettings& settings = {},
                              const GraphOptions& graph_options = {}, std::size_t workers = 1);

// layer_u,idx_u,layer_v,idx_v,weight,kappa (undefined edges get an empty kappa).
ReportTable curvature_table(const CurvatureReport& report);
std::string curvature_summary_json(const CurvatureReport& report);
// Reads the kappa column of a curvature CSV, skipping undefined entries.
std::vector<double> read_curvature_values(const std::string& path);

}  // namespace nrc
