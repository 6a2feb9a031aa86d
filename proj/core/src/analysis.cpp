#include "nrc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "nrc/errors.hpp"
#include "nrc/robustness.hpp"

namespace nrc {

double EmpiricalCdf::operator()(double t) const {
  const auto it = std::upper_bound(values.begin(), values.end(), t);
  if (it == values.begin()) return 0.0;
  return cumulative[static_cast<std::size_t>(std::distance(values.begin(), it) - 1)];
}

EmpiricalCdf empirical_cdf(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("empirical CDF of an empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  for (double v : sorted)
    if (!std::isfinite(v)) throw std::invalid_argument("empirical CDF needs finite samples");
  std::sort(sorted.begin(), sorted.end());

  EmpiricalCdf cdf;
  cdf.sample_count = sorted.size();
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    cdf.values.push_back(sorted[i]);
    cdf.cumulative.push_back(static_cast<double>(i + 1) / n);
  }
  cdf.cumulative.back() = 1.0;
  return cdf;
}

double auc_cdf(const EmpiricalCdf& cdf, double lo, double hi) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw std::invalid_argument("AUC needs finite lo < hi");
  // The step at values[k] holds cumulative[k] until values[k+1] (or hi).
  double area = 0.0;
  for (std::size_t k = 0; k < cdf.values.size(); ++k) {
    const double left = std::max(cdf.values[k], lo);
    const double right = k + 1 < cdf.values.size() ? std::min(cdf.values[k + 1], hi) : hi;
    if (right > left) area += (right - left) * cdf.cumulative[k];
  }
  return std::clamp(area, 0.0, hi - lo);
}

double negative_fraction(std::span<const double> kappas) {
  if (kappas.empty()) throw std::invalid_argument("negative fraction of an empty report");
  std::size_t negative = 0;
  for (double k : kappas) negative += k < 0.0 ? 1 : 0;
  return static_cast<double>(negative) / static_cast<double>(kappas.size());
}

double negative_fraction(const CurvatureReport& report) { return negative_fraction(report.defined_values()); }

IntegrationBounds shared_bounds(std::span<const CurvatureGroup> groups) {
  double lo = 1.0;
  bool any = false;
  for (const auto& g : groups)
    for (const auto& sample : g.samples)
      for (double k : sample) {
        lo = std::min(lo, k);
        any = true;
      }
  IntegrationBounds b;
  b.hi = 1.0;
  // a degenerate all-ones sample still needs lo < hi
  b.lo = any && lo < 1.0 ? lo : 0.0;
  return b;
}

std::vector<AucRow> group_auc_table(const std::string& setup, std::span<const CurvatureGroup> groups,
                                    const IntegrationBounds& bounds) {
  if (!(bounds.lo < bounds.hi)) throw std::invalid_argument("integration bounds need lo < hi");
  std::vector<AucRow> rows;
  std::map<double, std::pair<double, std::size_t>> by_eps;  // sum of label means, label count
  std::map<double, std::size_t> examples_per_eps;
  for (const auto& g : groups) {
    AucRow row;
    row.setup = setup;
    row.label = g.label;
    row.epsilon = g.epsilon;
    row.bounds = bounds;
    double total = 0.0;
    for (const auto& sample : g.samples) {
      if (sample.empty()) continue;
      total += auc_cdf(empirical_cdf(sample), bounds);
      ++row.group_size;
    }
    if (row.group_size > 0) {
      row.mean_auc = total / static_cast<double>(row.group_size);
      by_eps[g.epsilon].first += *row.mean_auc;
      by_eps[g.epsilon].second += 1;
    } else {
      by_eps.try_emplace(g.epsilon, 0.0, 0);
    }
    examples_per_eps[g.epsilon] += row.group_size;
    rows.push_back(std::move(row));
  }
  for (const auto& [eps, acc] : by_eps) {
    AucRow avg;
    avg.setup = setup;
    avg.epsilon = eps;
    avg.bounds = bounds;
    avg.group_size = examples_per_eps[eps];
    if (acc.second > 0) avg.mean_auc = acc.first / static_cast<double>(acc.second);
    rows.push_back(std::move(avg));
  }
  return rows;
}

std::optional<AucRow> average_row(std::span<const AucRow> rows, double epsilon) {
  for (const auto& r : rows)
    if (!r.label && std::abs(r.epsilon - epsilon) <= 1e-12) return r;
  return std::nullopt;
}

void require_shared_bounds(std::span<const AucRow> rows) {
  for (const auto& r : rows)
    if (!(r.bounds == rows.front().bounds))
      throw std::invalid_argument("AUC rows were integrated over different bounds and cannot be compared");
}

std::optional<double> mean_negative_fraction(const CurvatureGroup& group) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& sample : group.samples) {
    if (sample.empty()) continue;
    total += negative_fraction(sample);
    ++count;
  }
  if (count == 0) return std::nullopt;
  return total / static_cast<double>(count);
}

ReportTable cdf_table(const EmpiricalCdf& cdf) {
  ReportTable t;
  t.columns = {"kappa", "cumulative"};
  for (std::size_t k = 0; k < cdf.values.size(); ++k) t.add_row({cdf.values[k], cdf.cumulative[k]});
  return t;
}

ReportTable auc_rows_table(std::span<const AucRow> rows) {
  ReportTable t;
  t.columns = {"setup", "label", "epsilon", "mean_auc", "group_size", "lo", "hi"};
  for (const auto& r : rows) {
    t.add_row({r.setup, r.label ? Cell{static_cast<long long>(*r.label)} : Cell{std::string("all")}, r.epsilon,
               r.mean_auc ? Cell{*r.mean_auc} : Cell{std::string("N/A")}, static_cast<long long>(r.group_size),
               r.bounds.lo, r.bounds.hi});
  }
  return t;
}

std::vector<AucRow> read_auc_rows(const std::string& path) {
  const CsvDocument doc = read_csv(path);
  const std::size_t setup = doc.column("setup"), label = doc.column("label"), eps = doc.column("epsilon"),
                    auc = doc.column("mean_auc"), size = doc.column("group_size"), lo = doc.column("lo"),
                    hi = doc.column("hi");
  std::vector<AucRow> rows;
  for (const auto& cells : doc.rows) {
    AucRow r;
    try {
      r.setup = cells[setup];
      if (cells[label] != "all") r.label = std::stoi(cells[label]);
      r.epsilon = std::stod(cells[eps]);
      if (cells[auc] != "N/A") r.mean_auc = std::stod(cells[auc]);
      r.group_size = std::stoull(cells[size]);
      r.bounds = {std::stod(cells[lo]), std::stod(cells[hi])};
    } catch (const std::exception&) {
      throw DataError("malformed AUC row in " + path);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

ReportTable auc_grid_table(std::span<const AucRow> rows, std::span<const double> epsilons) {
  ReportTable t;
  t.columns = {"setup"};
  for (double e : epsilons) t.columns.push_back("eps_" + format_epsilon(e));
  std::vector<std::string> setups;
  for (const auto& r : rows)
    if (std::find(setups.begin(), setups.end(), r.setup) == setups.end()) setups.push_back(r.setup);
  for (const auto& setup : setups) {
    std::vector<Cell> row = {setup};
    for (double e : epsilons) {
      Cell cell = std::string("N/A");
      for (const auto& r : rows)
        if (r.setup == setup && !r.label && std::abs(r.epsilon - e) <= 1e-12 && r.mean_auc) cell = *r.mean_auc;
      row.push_back(cell);
    }
    t.add_row(std::move(row));
  }
  return t;
}

}  // namespace nrc
