#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nrc/data_io.hpp"
#include "nrc/network.hpp"

namespace nrc {

// One L-infinity PGD configuration at a fixed radius.
struct AttackConfig {
  double epsilon = 0.0;
  int steps = 40;
  double step_size = 0.0;  // 0 selects 2.5 * epsilon / steps
  int restarts = 3;
  std::uint64_t seed = 0;

  double effective_step() const;
  void validate() const;
};

// Budget applied at every radius of a grid; the step size scales with epsilon.
struct AttackSettings {
  int steps = 40;
  double step_factor = 2.5;
  int restarts = 3;
  std::uint64_t seed = 0;

  AttackConfig at(double epsilon, std::uint64_t seed_offset = 0) const;
};

inline const std::vector<double>& default_epsilon_grid() {
  static const std::vector<double> grid = {0.03, 0.05, 0.07, 0.1, 0.2};
  return grid;
}

// x + delta with |delta_i| <= epsilon and x + delta in [0,1], exactly.
Vector project_to_box(const Vector& x, const Vector& candidate, double epsilon);

// Returns a perturbation delta that changes the prediction away from `label`,
// or nothing when every restart fails.
std::optional<Vector> pgd_attack(const Network& net, const Vector& x, int label,
                                 const AttackConfig& config);

// True when delta is inside the epsilon-box, keeps x in [0,1] and flips the prediction.
bool verify_witness(const Network& net, const Vector& x, int label, const Vector& delta,
                    double epsilon);

enum class Verdict { robust, nonrobust, misclassified };
std::string to_string(Verdict v);
Verdict parse_verdict(const std::string& text);

Verdict is_epsilon_robust(const Network& net, const Vector& x, int label, const AttackConfig& config);

struct Witness {
  Vector delta;
  double epsilon = 0.0;  // grid radius at which it was found
  int adversarial_label = -1;
};

struct RobustnessRecord {
  std::size_t example = 0;
  int label = 0;
  int predicted = 0;
  std::vector<Verdict> verdicts;  // one per grid radius
  std::optional<Witness> witness;
};

// Verdicts across an ascending grid. A witness found at one radius is reused
// for every larger radius, so verdicts are monotone.
RobustnessRecord evaluate_example(const Network& net, const Vector& x, int label,
                                  std::size_t example, std::span<const double> grid,
                                  const AttackSettings& settings);

// Evaluates the first `limit` examples (all when 0) with `workers` threads.
std::vector<RobustnessRecord> evaluate_dataset(const Network& net, const Dataset& data,
                                               std::span<const double> grid,
                                               const AttackSettings& settings,
                                               std::size_t workers = 1, std::size_t limit = 0);

double robust_accuracy(const Network& net, const Dataset& data, const AttackConfig& config,
                       std::size_t workers = 1);
// Fraction of records that are robust at grid position `eps_index`.
double robust_accuracy(std::span<const RobustnessRecord> records, std::size_t eps_index);

struct GroupQuery {
  double robust_at = 0.0;
  std::optional<double> nonrobust_at;
  std::optional<int> label;
  std::size_t count = 0;
};

// Up to `count` record indices (ascending example order) matching the query.
// Radii must lie on the grid.
std::vector<std::size_t> select_group(std::span<const RobustnessRecord> records,
                                      std::span<const double> grid, const GroupQuery& query);

std::size_t grid_index(std::span<const double> grid, double epsilon);

// Batched, non-early-stopping PGD used for adversarial training: returns the
// perturbed inputs (columns) after `steps` sign-gradient steps from one random start.
Matrix pgd_perturb_batch(const Network& net, const Matrix& inputs, std::span<const int> labels,
                         double epsilon, int steps, double step_size, std::mt19937_64& rng);

// Records CSV: example_idx,label,predicted,eps_<r>... with verdict strings.
ReportTable records_table(std::span<const RobustnessRecord> records, std::span<const double> grid);
struct RecordSet {
  std::vector<double> grid;
  std::vector<RobustnessRecord> records;
};
RecordSet read_records(const std::string& path);

std::string format_epsilon(double epsilon);

}  // namespace nrc
