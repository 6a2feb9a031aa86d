#include "nrc/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <stdexcept>

#include "nrc/errors.hpp"
#include "nrc/parallel.hpp"

namespace nrc {

std::optional<NeighborMeasure> neighbor_measure(const WeightedGraph& graph, std::size_t node,
                                                const MeasureSettings& settings) {
  if (!(settings.alpha >= 0.0 && settings.alpha < 1.0)) throw std::invalid_argument("alpha must lie in [0, 1)");
  const auto neighbors = graph.neighbors(node);
  if (neighbors.empty()) return std::nullopt;

  NeighborMeasure m;
  m.mode = settings.mode;
  m.alpha = settings.alpha;
  const double spread = 1.0 - settings.alpha;
  if (settings.mode == MeasureMode::uniform) {
    const double each = spread / static_cast<double>(neighbors.size());
    for (const auto& n : neighbors) {
      m.support.push_back(n.node);
      m.mass.push_back(each);
    }
  } else {
    // shift by the lightest edge so the largest term is exp(0)
    double lightest = neighbors.front().weight;
    for (const auto& n : neighbors) lightest = std::min(lightest, n.weight);
    double total = 0.0;
    for (const auto& n : neighbors) {
      m.support.push_back(n.node);
      m.mass.push_back(std::exp(-(n.weight - lightest)));
      total += m.mass.back();
    }
    for (double& p : m.mass) p *= spread / total;
  }
  if (settings.alpha > 0.0) {
    m.support.push_back(node);
    m.mass.push_back(settings.alpha);
  }
  return m;
}

TransportPlan wasserstein1(const NeighborMeasure& from, const NeighborMeasure& to, const DistanceTable& distances,
                           const TransportOptions& options) {
  if (distances.sources.size() != from.support.size() || distances.targets.size() != to.support.size())
    throw DimensionError("distance table does not match the measure supports");
  return solve_transport(from.mass, to.mass, distances.values, options);
}

namespace {

std::optional<double> curvature_from(const NeighborMeasure& mu, const NeighborMeasure& mv, const DistanceTable& table,
                                     double d_uv, const TransportOptions& options) {
  if (!(d_uv > 0.0) || !std::isfinite(d_uv)) return std::nullopt;
  const TransportPlan plan = wasserstein1(mu, mv, table, options);
  if (!std::isfinite(plan.cost)) return std::nullopt;
  return 1.0 - plan.cost / d_uv;
}

}  // namespace

std::optional<double> orc_edge(const WeightedGraph& graph, std::size_t u, std::size_t v,
                               const MeasureSettings& settings) {
  if (!graph.has_edge(u, v)) throw std::invalid_argument("orc_edge needs an existing edge");
  const auto mu = neighbor_measure(graph, u, settings);
  const auto mv = neighbor_measure(graph, v, settings);
  if (!mu || !mv) return std::nullopt;

  // u joins the sources so d(u, v) comes out of the same Dijkstra runs
  std::vector<std::size_t> sources = mu->support;
  sources.push_back(u);
  std::vector<std::size_t> targets = mv->support;
  targets.push_back(v);
  const DistanceTable all = shortest_distances(graph, sources, targets);

  DistanceTable table;
  table.sources = mu->support;
  table.targets = mv->support;
  table.values.reserve(mu->support.size() * mv->support.size());
  for (std::size_t i = 0; i < mu->support.size(); ++i)
    for (std::size_t j = 0; j < mv->support.size(); ++j) table.values.push_back(all.at(i, j));
  const double d_uv = all.at(sources.size() - 1, targets.size() - 1);
  return curvature_from(*mu, *mv, table, d_uv, settings.transport);
}

std::vector<double> CurvatureReport::defined_values() const {
  std::vector<double> values;
  values.reserve(edges.size());
  for (const auto& e : edges)
    if (e.kappa) values.push_back(*e.kappa);
  return values;
}

CurvatureSummary CurvatureReport::summary() const {
  CurvatureSummary s;
  const auto values = defined_values();
  s.count = values.size();
  s.undefined = edges.size() - values.size();
  if (values.empty()) return s;
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  std::size_t negative = 0;
  double total = 0.0;
  for (double k : values) {
    total += k;
    negative += k < 0.0 ? 1 : 0;
  }
  s.mean = total / static_cast<double>(values.size());
  s.fraction_negative = static_cast<double>(negative) / static_cast<double>(values.size());
  return s;
}

CurvatureReport curvature_all_edges(const WeightedGraph& graph, const MeasureSettings& settings,
                                    std::size_t workers) {
  const auto& edges = graph.edges();
  CurvatureReport report;
  report.edges.resize(edges.size());
  if (edges.empty()) return report;

  // Every node with a neighbor is in some support; cache its distance row.
  std::vector<std::size_t> active;
  std::vector<int> row_of(graph.node_count(), -1);
  for (std::size_t node = 0; node < graph.node_count(); ++node) {
    if (graph.degree(node) == 0) continue;
    row_of[node] = static_cast<int>(active.size());
    active.push_back(node);
  }
  std::vector<std::vector<double>> rows(active.size());
  parallel_for(active.size(), workers, [&](std::size_t i) { rows[i] = single_source_distances(graph, active[i]); });

  std::vector<std::optional<NeighborMeasure>> measures(graph.node_count());
  for (std::size_t node : active) measures[node] = neighbor_measure(graph, node, settings);

  parallel_for(edges.size(), workers, [&](std::size_t e) {
    const auto& edge = edges[e];
    EdgeCurvature& out = report.edges[e];
    out.u = edge.u;
    out.v = edge.v;
    out.u_id = graph.node_id(edge.u);
    out.v_id = graph.node_id(edge.v);
    out.weight = edge.weight;
    const auto& mu = measures[edge.u];
    const auto& mv = measures[edge.v];
    if (!mu || !mv) return;

    DistanceTable table;
    table.sources = mu->support;
    table.targets = mv->support;
    table.values.resize(mu->support.size() * mv->support.size());
    for (std::size_t i = 0; i < mu->support.size(); ++i) {
      const auto& row = rows[static_cast<std::size_t>(row_of[mu->support[i]])];
      for (std::size_t j = 0; j < mv->support.size(); ++j)
        table.values[i * mv->support.size() + j] = row[mv->support[j]];
    }
    const double d_uv = rows[static_cast<std::size_t>(row_of[edge.u])][edge.v];
    out.kappa = curvature_from(*mu, *mv, table, d_uv, settings.transport);
  });
  return report;
}

CurvatureReport nrc_all_edges(const Network& net, const Vector& x, const MeasureSettings& settings,
                              const GraphOptions& graph_options, std::size_t workers) {
  const NeuralDataGraph data_graph = build_neural_data_graph(net, x, graph_options);
  return curvature_all_edges(data_graph.graph, settings, workers);
}

ReportTable curvature_table(const CurvatureReport& report) {
  ReportTable t;
  t.columns = {"layer_u", "idx_u", "layer_v", "idx_v", "weight", "kappa"};
  for (const auto& e : report.edges) {
    t.add_row({static_cast<long long>(e.u_id.layer), static_cast<long long>(e.u_id.index),
               static_cast<long long>(e.v_id.layer), static_cast<long long>(e.v_id.index), e.weight,
               e.kappa ? Cell{*e.kappa} : Cell{std::string{}}});
  }
  return t;
}

std::string curvature_summary_json(const CurvatureReport& report) {
  const CurvatureSummary s = report.summary();
  nlohmann::json j = {{"edges", report.edges.size()},
                      {"defined", s.count},
                      {"undefined", s.undefined},
                      {"fraction_negative", s.fraction_negative}};
  if (s.count > 0) {
    j["min"] = s.min;
    j["max"] = s.max;
    j["mean"] = s.mean;
  }
  return j.dump(2) + "\n";
}

std::vector<double> read_curvature_values(const std::string& path) {
  const CsvDocument doc = read_csv(path);
  const std::size_t column = doc.column("kappa");
  std::vector<double> values;
  values.reserve(doc.rows.size());
  for (const auto& row : doc.rows) {
    if (row[column].empty()) continue;
    try {
      values.push_back(std::stod(row[column]));
    } catch (const std::exception&) {
      throw DataError("bad kappa value '" + row[column] + "' in " + path);
    }
  }
  return values;
}

}  // namespace nrc
