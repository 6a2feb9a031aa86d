#include "nrc/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "nrc/errors.hpp"

namespace nrc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Primal network simplex on the bipartite transportation network with an
// artificial root. Supply node i is node i, demand node j is node m + j, the
// root is node m + n. The spanning tree is kept strongly feasible (every
// zero-flow tree arc points away from the root) by choosing the last blocking
// arc along the pivot cycle, which rules out cycling.
class NetworkSimplex {
 public:
  NetworkSimplex(std::span<const double> supply, std::span<const double> demand, std::span<const double> costs,
                 std::size_t max_pivots)
      : m_(static_cast<int>(supply.size())),
        n_(static_cast<int>(demand.size())),
        nodes_(m_ + n_ + 1),
        root_(m_ + n_),
        real_arcs_(m_ * n_),
        costs_(costs) {
    double max_cost = 0.0;
    for (double c : costs)
      if (std::isfinite(c)) max_cost = std::max(max_cost, std::abs(c));
    artificial_cost_ = (max_cost + 1.0) * static_cast<double>(nodes_);
    tolerance_ = 1e-13 * artificial_cost_;

    const int total_arcs = real_arcs_ + m_ + n_;
    flow_.assign(static_cast<std::size_t>(total_arcs), 0.0);
    in_tree_.assign(static_cast<std::size_t>(total_arcs), 0);
    artificial_up_.assign(static_cast<std::size_t>(m_ + n_), 0);
    tree_position_.assign(static_cast<std::size_t>(total_arcs), -1);
    for (int k = 0; k < m_ + n_; ++k) {
      const int arc = real_arcs_ + k;
      const double mass = k < m_ ? supply[k] : demand[k - m_];
      // supply nodes with mass send to the root; everything else hangs below it
      artificial_up_[k] = k < m_ && mass > 0.0;
      flow_[arc] = mass;
      in_tree_[arc] = 1;
      tree_position_[arc] = static_cast<int>(tree_.size());
      tree_.push_back(arc);
    }
    max_pivots_ = max_pivots ? max_pivots : 50 * static_cast<std::size_t>(total_arcs + nodes_) + 1000;
    block_size_ = std::max(10, static_cast<int>(std::sqrt(static_cast<double>(std::max(1, real_arcs_)))));

    parent_.resize(nodes_);
    pred_.resize(nodes_);
    up_.resize(nodes_);
    depth_.resize(nodes_);
    potential_.resize(nodes_);
    rebuild();
  }

  void run() {
    for (;;) {
      const int entering = find_entering();
      if (entering < 0) return;
      if (++pivots_ > max_pivots_)
        throw NumericalError("transport simplex exceeded " + std::to_string(max_pivots_) + " pivots");
      pivot(entering);
    }
  }

  TransportPlan plan() const {
    TransportPlan out;
    out.rows = static_cast<std::size_t>(m_);
    out.cols = static_cast<std::size_t>(n_);
    out.coupling.assign(flow_.begin(), flow_.begin() + real_arcs_);
    out.pivots = pivots_;
    double artificial = 0.0;
    double scale = 0.0;
    for (int k = 0; k < m_ + n_; ++k) {
      artificial += flow_[real_arcs_ + k];
    }
    for (int a = 0; a < real_arcs_; ++a) scale += flow_[a];
    for (int a = 0; a < real_arcs_; ++a)
      if (flow_[a] != 0.0) out.cost += flow_[a] * costs_[a];
    // a balanced problem leaves only rounding-level flow on artificial arcs
    if (artificial > 1e-9 * std::max(1.0, scale)) out.cost = kInf;
    out.row_potential.assign(potential_.begin(), potential_.begin() + m_);
    out.col_potential.assign(potential_.begin() + m_, potential_.begin() + m_ + n_);
    return out;
  }

 private:
  int source(int arc) const {
    if (arc < real_arcs_) return arc / n_;
    const int k = arc - real_arcs_;
    return artificial_up_[k] ? k : root_;
  }
  int target(int arc) const {
    if (arc < real_arcs_) return m_ + arc % n_;
    const int k = arc - real_arcs_;
    return artificial_up_[k] ? root_ : k;
  }
  double cost(int arc) const { return arc < real_arcs_ ? costs_[arc] : artificial_cost_; }

  // Full walk from the root over the initial tree.
  void rebuild() {
    tree_adj_.assign(static_cast<std::size_t>(nodes_), {});
    for (int arc : tree_) {
      tree_adj_[source(arc)].push_back(arc);
      tree_adj_[target(arc)].push_back(arc);
    }
    parent_[root_] = -1;
    pred_[root_] = -1;
    depth_[root_] = 0;
    potential_[root_] = 0.0;
    attach(root_);
  }

  // Recomputes parent/depth/potential below `top`, whose own entries are set.
  void attach(int top) {
    stack_.clear();
    stack_.push_back(top);
    while (!stack_.empty()) {
      const int u = stack_.back();
      stack_.pop_back();
      for (int arc : tree_adj_[u]) {
        if (arc == pred_[u]) continue;
        const int s = source(arc);
        const int child = s == u ? target(arc) : s;
        parent_[child] = u;
        pred_[child] = arc;
        depth_[child] = depth_[u] + 1;
        // reduced cost cost + pi[source] - pi[target] vanishes on tree arcs
        up_[child] = s == child;
        potential_[child] = up_[child] ? potential_[u] - cost(arc) : potential_[u] + cost(arc);
        stack_.push_back(child);
      }
    }
  }

  void unlink(int node, int arc) {
    auto& list = tree_adj_[node];
    for (std::size_t i = 0; i < list.size(); ++i)
      if (list[i] == arc) {
        list[i] = list.back();
        list.pop_back();
        return;
      }
  }

  double reduced_cost(int arc) const { return cost(arc) + potential_[source(arc)] - potential_[target(arc)]; }

  // Block search pricing over the real arcs.
  int find_entering() {
    if (real_arcs_ == 0) return -1;
    double best = 0.0;
    int best_arc = -1;
    int remaining = block_size_;
    for (int k = 0; k < real_arcs_; ++k) {
      const int arc = (next_arc_ + k) % real_arcs_;
      if (!in_tree_[arc] && std::isfinite(costs_[arc])) {
        const double rc = reduced_cost(arc);
        if (rc < best) {
          best = rc;
          best_arc = arc;
        }
      }
      if (--remaining == 0) {
        if (best < -tolerance_) {
          next_arc_ = (arc + 1) % real_arcs_;
          return best_arc;
        }
        remaining = block_size_;
      }
    }
    if (best < -tolerance_) {
      next_arc_ = (best_arc + 1) % real_arcs_;
      return best_arc;
    }
    return -1;
  }

  void pivot(int entering) {
    const int first = source(entering);
    const int second = target(entering);
    int a = first;
    int b = second;
    while (a != b) {
      if (depth_[a] >= depth_[b])
        a = parent_[a];
      else
        b = parent_[b];
    }
    const int join = a;

    // Flow runs join -> first (down the tree), across the entering arc, then
    // second -> join (up the tree).
    double delta = kInf;
    int leaving_node = -1;
    bool leaving_on_first = false;
    for (int u = first; u != join; u = parent_[u]) {
      const double d = up_[u] ? flow_[pred_[u]] : kInf;
      if (d < delta) {
        delta = d;
        leaving_node = u;
        leaving_on_first = true;
      }
    }
    for (int u = second; u != join; u = parent_[u]) {
      const double d = up_[u] ? kInf : flow_[pred_[u]];
      if (d <= delta) {
        delta = d;
        leaving_node = u;
        leaving_on_first = false;
      }
    }
    if (leaving_node < 0 || !std::isfinite(delta)) throw NumericalError("transport problem is unbounded");

    if (delta > 0.0) {
      flow_[entering] += delta;
      for (int u = first; u != join; u = parent_[u]) flow_[pred_[u]] += up_[u] ? -delta : delta;
      for (int u = second; u != join; u = parent_[u]) flow_[pred_[u]] += up_[u] ? delta : -delta;
    }
    const int leaving = pred_[leaving_node];
    flow_[leaving] = 0.0;

    const int slot = tree_position_[leaving];
    tree_[slot] = entering;
    tree_position_[entering] = slot;
    tree_position_[leaving] = -1;
    in_tree_[leaving] = 0;
    in_tree_[entering] = 1;

    // The subtree below the leaving arc now hangs off the entering arc.
    unlink(source(leaving), leaving);
    unlink(target(leaving), leaving);
    tree_adj_[first].push_back(entering);
    tree_adj_[second].push_back(entering);
    const int inner = leaving_on_first ? first : second;
    const int outer = leaving_on_first ? second : first;
    parent_[inner] = outer;
    pred_[inner] = entering;
    depth_[inner] = depth_[outer] + 1;
    up_[inner] = source(entering) == inner;
    potential_[inner] = up_[inner] ? potential_[outer] - cost(entering) : potential_[outer] + cost(entering);
    attach(inner);
  }

  int m_, n_, nodes_, root_, real_arcs_;
  std::span<const double> costs_;
  double artificial_cost_ = 0.0;
  double tolerance_ = 0.0;
  std::size_t max_pivots_ = 0;
  std::size_t pivots_ = 0;
  int block_size_ = 10;
  int next_arc_ = 0;

  std::vector<double> flow_;
  std::vector<char> in_tree_;
  std::vector<char> artificial_up_;
  std::vector<int> tree_;
  std::vector<int> tree_position_;

  std::vector<int> parent_, pred_, depth_;
  std::vector<char> up_;
  std::vector<double> potential_;
  std::vector<std::vector<int>> tree_adj_;
  std::vector<int> stack_;
};

double log_sum_exp(const std::vector<double>& values) {
  double peak = -kInf;
  for (double v : values) peak = std::max(peak, v);
  if (!std::isfinite(peak)) return peak;
  double total = 0.0;
  for (double v : values) total += std::exp(v - peak);
  return peak + std::log(total);
}

TransportPlan sinkhorn(std::span<const double> supply, std::span<const double> demand, std::span<const double> costs,
                       const TransportOptions& options) {
  const std::size_t m = supply.size();
  const std::size_t n = demand.size();
  const double reg = options.sinkhorn_regularization;
  if (!(reg > 0.0)) throw std::invalid_argument("sinkhorn regularization must be positive");
  std::vector<double> f(m, 0.0), g(n, 0.0), terms;
  auto log_mass = [](double v) { return v > 0.0 ? std::log(v) : -kInf; };

  TransportPlan out;
  out.rows = m;
  out.cols = n;
  out.coupling.assign(m * n, 0.0);
  for (int it = 0; it < options.sinkhorn_max_iterations; ++it) {
    for (std::size_t i = 0; i < m; ++i) {
      terms.assign(n, 0.0);
      for (std::size_t j = 0; j < n; ++j) terms[j] = (g[j] - costs[i * n + j]) / reg;
      f[i] = supply[i] > 0.0 ? reg * (log_mass(supply[i]) - log_sum_exp(terms)) : -kInf;
    }
    for (std::size_t j = 0; j < n; ++j) {
      terms.assign(m, 0.0);
      for (std::size_t i = 0; i < m; ++i) terms[i] = (f[i] - costs[i * n + j]) / reg;
      g[j] = demand[j] > 0.0 ? reg * (log_mass(demand[j]) - log_sum_exp(terms)) : -kInf;
    }
    // columns are exact after the g-update; check the rows
    double err = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) row += std::exp((f[i] + g[j] - costs[i * n + j]) / reg);
      err += std::abs(row - supply[i]);
    }
    if (err < options.sinkhorn_tolerance) break;
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double p = std::exp((f[i] + g[j] - costs[i * n + j]) / reg);
      out.coupling[i * n + j] = std::isfinite(p) ? p : 0.0;
      if (out.coupling[i * n + j] > 0.0) out.cost += out.coupling[i * n + j] * costs[i * n + j];
    }
  return out;
}

}  // namespace

bool TransportPlan::feasible() const { return std::isfinite(cost); }

TransportPlan solve_transport(std::span<const double> supply, std::span<const double> demand,
                              std::span<const double> costs, const TransportOptions& options) {
  if (costs.size() != supply.size() * demand.size())
    throw std::invalid_argument("cost matrix must be |supply| x |demand|");
  double total_supply = 0.0;
  double total_demand = 0.0;
  for (double s : supply) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("supply must be finite and non-negative");
    total_supply += s;
  }
  for (double d : demand) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw std::invalid_argument("demand must be finite and non-negative");
    total_demand += d;
  }
  if (std::abs(total_supply - total_demand) > 1e-9 * std::max(1.0, total_supply))
    throw std::invalid_argument("supply and demand totals differ");
  for (double c : costs)
    if (std::isnan(c) || c == -kInf) throw std::invalid_argument("costs must be finite or +inf");

  if (options.method == TransportMethod::sinkhorn) return sinkhorn(supply, demand, costs, options);

  NetworkSimplex simplex(supply, demand, costs, options.max_pivots);
  simplex.run();
  return simplex.plan();
}

}  // namespace nrc
