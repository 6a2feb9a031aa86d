#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nrc/config.hpp"
#include "nrc/data_io.hpp"
#include "nrc/network.hpp"

namespace nrc {

enum class Regime { ce, wd, at };
std::string to_string(Regime r);
Regime parse_regime(const std::string& text);

// Inner maximization for adversarial training.
struct AdversarialTraining {
  double epsilon = 0.1;
  int steps = 7;
  double step_size = 2.5 * 0.1 / 7.0;
  // Radius (and step) ramp linearly from 0 over this many epochs; 0 disables.
  int warmup_epochs = 5;
};

struct TrainConfig {
  Architecture architecture;
  Regime regime = Regime::ce;
  int epochs = 20;
  int batch_size = 128;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 0.0;  // lambda in lambda * sum ||W||^2, WD only
  std::optional<AdversarialTraining> adversarial;  // AT only
  std::uint64_t seed = 0;
  std::size_t train_limit = 0;  // use only the first N training examples (0 = all)

  // Defaults for a regime: lambda = 5e-4 for WD, 7-step PGD at 0.1 for AT.
  static TrainConfig defaults(Architecture arch, Regime regime, std::uint64_t seed = 0);
  // Keys: arch, regime, epochs, batch_size, learning_rate, momentum,
  // weight_decay, at_epsilon, at_steps, at_step_size, at_warmup_epochs, seed,
  // train_limit.
  static TrainConfig from_config(const KeyValueConfig& config);

  void validate() const;
  std::map<std::string, std::string> describe() const;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;      // mean training loss (on adversarial inputs for AT)
  double accuracy = 0.0;  // running training accuracy over the epoch
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Minibatch SGD with momentum. Throws NumericalError on a non-finite loss.
Network train(const TrainConfig& config, const Dataset& train_data, std::vector<EpochLog>* log = nullptr,
              const EpochCallback& on_epoch = {});

double evaluate_accuracy(const Network& net, const Dataset& data);

ReportTable training_log_table(const std::vector<EpochLog>& log);

}  // namespace nrc
