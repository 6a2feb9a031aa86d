#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nrc {

// Optimal coupling of a discrete transportation problem.
struct TransportPlan {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> coupling;  // row-major rows x cols
  double cost = 0.0;             // +inf when no finite-cost coupling exists
  // Dual certificate (exact solver only): col_potential[j] - row_potential[i]
  // <= cost(i, j) for every pair, with equality on the support of the plan.
  std::vector<double> row_potential;
  std::vector<double> col_potential;
  std::size_t pivots = 0;

  double at(std::size_t i, std::size_t j) const { return coupling[i * cols + j]; }
  bool feasible() const;
};

enum class TransportMethod {
  network_simplex,  // exact
  sinkhorn,         // entropic approximation, for speed comparisons only
};

struct TransportOptions {
  TransportMethod method = TransportMethod::network_simplex;
  double sinkhorn_regularization = 1e-2;
  int sinkhorn_max_iterations = 100000;
  double sinkhorn_tolerance = 1e-10;
  std::size_t max_pivots = 0;  // 0 picks a bound from the problem size
};

// Minimizes sum_ij cost(i,j) * plan(i,j) subject to row sums = supply and
// column sums = demand. Costs are row-major; +inf marks a forbidden pair.
// Supply and demand must be non-negative with equal totals (to 1e-9 relative).
// Throws NumericalError if the pivot bound is exceeded.
TransportPlan solve_transport(std::span<const double> supply, std::span<const double> demand,
                              std::span<const double> costs, const TransportOptions& options = {});

}  // namespace nrc
