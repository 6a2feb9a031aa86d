#include "nrc/robustness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "nrc/errors.hpp"
#include "nrc/parallel.hpp"

namespace nrc {

double AttackConfig::effective_step() const {
  return step_size > 0.0 ? step_size : 2.5 * epsilon / static_cast<double>(steps);
}

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("attack epsilon must be >= 0");
  if (steps < 1) throw std::invalid_argument("attack needs at least one step");
  if (restarts < 1) throw std::invalid_argument("attack needs at least one restart");
  if (step_size < 0.0) throw std::invalid_argument("attack step size must be >= 0");
}

AttackConfig AttackSettings::at(double epsilon, std::uint64_t seed_offset) const {
  AttackConfig config;
  config.epsilon = epsilon;
  config.steps = steps;
  config.step_size = step_factor * epsilon / static_cast<double>(steps);
  config.restarts = restarts;
  config.seed = derive_seed(seed, seed_offset);
  return config;
}

Vector project_to_box(const Vector& x, const Vector& candidate, double epsilon) {
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double lo = std::max(0.0, x[i] - epsilon);
    const double hi = std::min(1.0, x[i] + epsilon);
    double v = std::clamp(candidate[i], lo, hi);
    // x +- epsilon may round past the radius; walk back one ulp at a time.
    while (std::abs(v - x[i]) > epsilon) v = std::nextafter(v, x[i]);
    out[i] = v;
  }
  return out;
}

bool verify_witness(const Network& net, const Vector& x, int label, const Vector& delta, double epsilon) {
  if (delta.size() != x.size()) return false;
  if (delta.size() > 0 && delta.cwiseAbs().maxCoeff() > epsilon) return false;
  const Vector adversarial = x + delta;
  if (adversarial.size() > 0 && (adversarial.minCoeff() < 0.0 || adversarial.maxCoeff() > 1.0)) return false;
  return predict(net, adversarial) != label;
}

std::optional<Vector> pgd_attack(const Network& net, const Vector& x, int label, const AttackConfig& config) {
  config.validate();
  if (x.size() != net.input_dim())
    throw DimensionError("attack input has " + std::to_string(x.size()) + " entries, network expects " +
                         std::to_string(net.input_dim()));
  if (config.epsilon == 0.0) return std::nullopt;

  const double step = config.effective_step();
  for (int restart = 0; restart < config.restarts; ++restart) {
    std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(restart)));
    std::uniform_real_distribution<double> start(-config.epsilon, config.epsilon);
    Vector candidate(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) candidate[i] = x[i] + start(rng);
    Vector current = project_to_box(x, candidate, config.epsilon);

    for (int it = 0;; ++it) {
      const InputGradient g = loss_and_input_gradient(net, current, label);
      if (argmax(g.logits) != label) {
        Vector delta = current - x;
        if (verify_witness(net, x, label, delta, config.epsilon)) return delta;
      }
      if (it == config.steps) break;
      current = project_to_box(x, current + step * g.gradient.array().sign().matrix(), config.epsilon);
    }
  }
  return std::nullopt;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::robust:
      return "robust";
    case Verdict::nonrobust:
      return "nonrobust";
    case Verdict::misclassified:
      return "misclassified";
  }
  return "unknown";
}

Verdict parse_verdict(const std::string& text) {
  if (text == "robust") return Verdict::robust;
  if (text == "nonrobust") return Verdict::nonrobust;
  if (text == "misclassified") return Verdict::misclassified;
  throw DataError("unknown verdict '" + text + "'");
}

Verdict is_epsilon_robust(const Network& net, const Vector& x, int label, const AttackConfig& config) {
  if (predict(net, x) != label) return Verdict::misclassified;
  return pgd_attack(net, x, label, config) ? Verdict::nonrobust : Verdict::robust;
}

namespace {

void require_ascending(std::span<const double> grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0)) throw std::invalid_argument("epsilon grid entries must be >= 0");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw std::invalid_argument("epsilon grid must be strictly ascending");
  }
}

}  // namespace

RobustnessRecord evaluate_example(const Network& net, const Vector& x, int label, std::size_t example,
                                  std::span<const double> grid, const AttackSettings& settings) {
  require_ascending(grid);
  RobustnessRecord record;
  record.example = example;
  record.label = label;
  record.predicted = predict(net, x);
  if (record.predicted != label) {
    record.verdicts.assign(grid.size(), Verdict::misclassified);
    return record;
  }
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (record.witness) {
      record.verdicts.push_back(Verdict::nonrobust);
      continue;
    }
    const AttackConfig config = settings.at(grid[k], derive_seed(example, k));
    if (auto delta = pgd_attack(net, x, label, config)) {
      Witness w;
      w.adversarial_label = predict(net, x + *delta);
      w.delta = std::move(*delta);
      w.epsilon = grid[k];
      record.witness = std::move(w);
      record.verdicts.push_back(Verdict::nonrobust);
    } else {
      record.verdicts.push_back(Verdict::robust);
    }
  }
  return record;
}

std::vector<RobustnessRecord> evaluate_dataset(const Network& net, const Dataset& data,
                                               std::span<const double> grid, const AttackSettings& settings,
                                               std::size_t workers, std::size_t limit) {
  const std::size_t n = limit == 0 ? data.size() : std::min(limit, data.size());
  std::vector<RobustnessRecord> records(n);
  parallel_for(n, workers, [&](std::size_t i) {
    records[i] = evaluate_example(net, data.images[i], data.labels[i], i, grid, settings);
  });
  return records;
}

double robust_accuracy(const Network& net, const Dataset& data, const AttackConfig& config, std::size_t workers) {
  if (data.empty()) throw std::invalid_argument("robust accuracy of an empty dataset");
  std::vector<char> robust(data.size(), 0);
  parallel_for(data.size(), workers, [&](std::size_t i) {
    AttackConfig c = config;
    c.seed = derive_seed(config.seed, i);
    robust[i] = is_epsilon_robust(net, data.images[i], data.labels[i], c) == Verdict::robust;
  });
  std::size_t count = 0;
  for (char r : robust) count += r ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(data.size());
}

double robust_accuracy(std::span<const RobustnessRecord> records, std::size_t eps_index) {
  if (records.empty()) throw std::invalid_argument("robust accuracy of an empty record set");
  std::size_t count = 0;
  for (const auto& r : records) count += r.verdicts.at(eps_index) == Verdict::robust ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(records.size());
}

std::size_t grid_index(std::span<const double> grid, double epsilon) {
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (std::abs(grid[i] - epsilon) <= 1e-12) return i;
  throw std::invalid_argument("epsilon " + format_epsilon(epsilon) + " is not on the grid");
}

std::vector<std::size_t> select_group(std::span<const RobustnessRecord> records, std::span<const double> grid,
                                      const GroupQuery& query) {
  if (query.nonrobust_at && !(query.robust_at < *query.nonrobust_at))
    throw std::invalid_argument("group needs robust radius < nonrobust radius");
  const std::size_t robust_idx = grid_index(grid, query.robust_at);
  const std::optional<std::size_t> nonrobust_idx =
      query.nonrobust_at ? std::optional(grid_index(grid, *query.nonrobust_at)) : std::nullopt;

  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return records[a].example < records[b].example; });

  std::vector<std::size_t> chosen;
  for (std::size_t i : order) {
    if (chosen.size() >= query.count) break;
    const auto& r = records[i];
    if (query.label && r.label != *query.label) continue;
    if (r.verdicts.at(robust_idx) != Verdict::robust) continue;
    if (nonrobust_idx && r.verdicts.at(*nonrobust_idx) != Verdict::nonrobust) continue;
    chosen.push_back(i);
  }
  return chosen;
}

Matrix pgd_perturb_batch(const Network& net, const Matrix& inputs, std::span<const int> labels, double epsilon,
                         int steps, double step_size, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> start(-epsilon, epsilon);
  const Matrix lo = (inputs.array() - epsilon).cwiseMax(0.0).matrix();
  const Matrix hi = (inputs.array() + epsilon).cwiseMin(1.0).matrix();
  Matrix current(inputs.rows(), inputs.cols());
  for (Eigen::Index c = 0; c < inputs.cols(); ++c)
    for (Eigen::Index r = 0; r < inputs.rows(); ++r) current(r, c) = inputs(r, c) + start(rng);
  current = current.cwiseMax(lo).cwiseMin(hi);
  for (int s = 0; s < steps; ++s) {
    const Matrix g = batch_input_gradients(net, current, labels);
    current += step_size * g.array().sign().matrix();
    current = current.cwiseMax(lo).cwiseMin(hi);
  }
  return current;
}

std::string format_epsilon(double epsilon) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), epsilon);
  return std::string(buf, end);
}

ReportTable records_table(std::span<const RobustnessRecord> records, std::span<const double> grid) {
  ReportTable table;
  table.columns = {"example_idx", "label", "predicted"};
  for (double e : grid) table.columns.push_back("eps_" + format_epsilon(e));
  for (const auto& r : records) {
    std::vector<Cell> row = {static_cast<long long>(r.example), static_cast<long long>(r.label),
                             static_cast<long long>(r.predicted)};
    for (Verdict v : r.verdicts) row.emplace_back(to_string(v));
    table.add_row(std::move(row));
  }
  return table;
}

RecordSet read_records(const std::string& path) {
  const CsvDocument doc = read_csv(path);
  RecordSet set;
  std::vector<std::size_t> eps_columns;
  for (std::size_t c = 0; c < doc.columns.size(); ++c) {
    if (doc.columns[c].rfind("eps_", 0) == 0) {
      set.grid.push_back(std::stod(doc.columns[c].substr(4)));
      eps_columns.push_back(c);
    }
  }
  const std::size_t idx = doc.column("example_idx");
  const std::size_t label = doc.column("label");
  const std::size_t predicted = doc.column("predicted");
  for (const auto& row : doc.rows) {
    RobustnessRecord r;
    try {
      r.example = std::stoull(row[idx]);
      r.label = std::stoi(row[label]);
      r.predicted = std::stoi(row[predicted]);
    } catch (const std::exception&) {
      throw DataError("malformed record row in " + path);
    }
    for (std::size_t c : eps_columns) r.verdicts.push_back(parse_verdict(row[c]));
    set.records.push_back(std::move(r));
  }
  return set;
}

}  // namespace nrc
