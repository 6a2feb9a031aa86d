#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nrc/curvature.hpp"
#include "nrc/data_io.hpp"

namespace nrc {

// Right-continuous empirical CDF: F(t) = cumulative[k] for values[k] <= t < values[k+1].
struct EmpiricalCdf {
  std::vector<double> values;      // sorted, distinct
  std::vector<double> cumulative;  // fraction of samples <= values[k]
  std::size_t sample_count = 0;

  double operator()(double t) const;
};

// Throws std::invalid_argument on an empty or non-finite sample.
EmpiricalCdf empirical_cdf(std::span<const double> samples);

struct IntegrationBounds {
  double lo = -1.0;
  double hi = 1.0;
  bool operator==(const IntegrationBounds&) const = default;
};

// Integral of the CDF step function over [lo, hi].
double auc_cdf(const EmpiricalCdf& cdf, double lo, double hi);
inline double auc_cdf(const EmpiricalCdf& cdf, const IntegrationBounds& b) { return auc_cdf(cdf, b.lo, b.hi); }

// Fraction of defined curvatures that are negative.
double negative_fraction(std::span<const double> kappas);
double negative_fraction(const CurvatureReport& report);

// Curvature samples of the examples in one (label, epsilon) group.
struct CurvatureGroup {
  int label = 0;
  double epsilon = 0.0;
  std::vector<std::size_t> examples;
  std::vector<std::vector<double>> samples;  // one kappa list per example
};

struct AucRow {
  std::string setup;
  std::optional<int> label;  // nothing for the average over labels
  double epsilon = 0.0;
  std::optional<double> mean_auc;  // nothing means N/A (empty group)
  std::size_t group_size = 0;
  IntegrationBounds bounds;
};

// lo = smallest kappa in any group, hi = 1.
IntegrationBounds shared_bounds(std::span<const CurvatureGroup> groups);

// Mean AUC per (label, epsilon) plus, for each epsilon, the average over the
// labels whose groups are non-empty. Empty groups yield N/A rows.
std::vector<AucRow> group_auc_table(const std::string& setup, std::span<const CurvatureGroup> groups,
                                    const IntegrationBounds& bounds);

// The over-labels row of a table for one epsilon (nothing if absent).
std::optional<AucRow> average_row(std::span<const AucRow> rows, double epsilon);

// Throws std::invalid_argument unless every row shares the same bounds.
void require_shared_bounds(std::span<const AucRow> rows);

// Mean negative fraction over the examples of a group (nothing when empty).
std::optional<double> mean_negative_fraction(const CurvatureGroup& group);

ReportTable cdf_table(const EmpiricalCdf& cdf);
ReportTable auc_rows_table(std::span<const AucRow> rows);
// Reads a table written from auc_rows_table back.
std::vector<AucRow> read_auc_rows(const std::string& path);
// setup x epsilon grid of over-labels averages with "N/A" for empty groups.
ReportTable auc_grid_table(std::span<const AucRow> rows, std::span<const double> epsilons);

}  // namespace nrc
