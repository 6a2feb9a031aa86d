#include "nrc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "nrc/errors.hpp"
#include "nrc/parallel.hpp"
#include "nrc/robustness.hpp"

namespace nrc {

std::string to_string(Regime r) {
  switch (r) {
    case Regime::ce:
      return "ce";
    case Regime::wd:
      return "wd";
    case Regime::at:
      return "at";
  }
  return "?";
}

Regime parse_regime(const std::string& text) {
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "ce") return Regime::ce;
  if (lower == "wd") return Regime::wd;
  if (lower == "at") return Regime::at;
  throw std::invalid_argument("unknown training regime '" + text + "' (expected ce, wd or at)");
}

TrainConfig TrainConfig::defaults(Architecture arch, Regime regime, std::uint64_t seed) {
  TrainConfig c;
  c.architecture = std::move(arch);
  c.regime = regime;
  c.seed = seed;
  if (regime == Regime::wd) c.weight_decay = 5e-4;
  if (regime == Regime::at) c.adversarial = AdversarialTraining{};
  return c;
}

TrainConfig TrainConfig::from_config(const KeyValueConfig& kv) {
  const auto arch = kv.get("arch");
  if (!arch) throw DataError("config is missing 'arch'");
  TrainConfig c = defaults(parse_architecture(*arch), parse_regime(kv.get_or("regime", "ce")),
                           static_cast<std::uint64_t>(kv.get_int("seed", 0)));
  c.epochs = static_cast<int>(kv.get_int("epochs", c.epochs));
  c.batch_size = static_cast<int>(kv.get_int("batch_size", c.batch_size));
  c.learning_rate = kv.get_double("learning_rate", c.learning_rate);
  c.momentum = kv.get_double("momentum", c.momentum);
  c.train_limit = static_cast<std::size_t>(kv.get_int("train_limit", 0));
  if (c.regime == Regime::wd) c.weight_decay = kv.get_double("weight_decay", c.weight_decay);
  if (c.regime == Regime::at) {
    auto& at = *c.adversarial;
    at.epsilon = kv.get_double("at_epsilon", at.epsilon);
    at.steps = static_cast<int>(kv.get_int("at_steps", at.steps));
    at.step_size = kv.get_double("at_step_size", 2.5 * at.epsilon / at.steps);
    at.warmup_epochs = static_cast<int>(kv.get_int("at_warmup_epochs", at.warmup_epochs));
  }
  c.validate();
  return c;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("momentum must be in [0, 1)");
  if ((weight_decay > 0.0) != (regime == Regime::wd))
    throw std::invalid_argument("weight_decay > 0 exactly when the regime is wd");
  if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
  if (adversarial.has_value() != (regime == Regime::at))
    throw std::invalid_argument("adversarial settings present exactly when the regime is at");
  if (adversarial) {
    if (!(adversarial->epsilon > 0.0) || adversarial->steps < 1 || !(adversarial->step_size > 0.0))
      throw std::invalid_argument("adversarial training needs epsilon > 0, steps >= 1, step_size > 0");
    if (adversarial->warmup_epochs < 0) throw std::invalid_argument("at_warmup_epochs must be >= 0");
  }
}

std::map<std::string, std::string> TrainConfig::describe() const {
  std::map<std::string, std::string> m = {
      {"arch", architecture_name(architecture)},  {"epochs", std::to_string(epochs)},
      {"batch_size", std::to_string(batch_size)}, {"learning_rate", format_double(learning_rate)},
      {"momentum", format_double(momentum)},     {"train_limit", std::to_string(train_limit)},
  };
  if (regime == Regime::wd) m["weight_decay"] = format_double(weight_decay);
  if (adversarial) {
    m["at_epsilon"] = format_double(adversarial->epsilon);
    m["at_steps"] = std::to_string(adversarial->steps);
    m["at_step_size"] = format_double(adversarial->step_size);
    m["at_warmup_epochs"] = std::to_string(adversarial->warmup_epochs);
  }
  return m;
}

Network train(const TrainConfig& config, const Dataset& train_data, std::vector<EpochLog>* log,
              const EpochCallback& on_epoch) {
  config.validate();
  const Dataset data = train_data.head(config.train_limit);
  if (data.empty()) throw std::invalid_argument("cannot train on an empty dataset");

  Network net = Network::initialized(config.architecture, config.seed);
  if (data.images.front().size() != net.input_dim())
    throw DimensionError("training images do not match the architecture input");
  net.info().regime = to_string(config.regime);
  net.info().seed = config.seed;
  net.info().hyperparameters = config.describe();

  Gradients velocity = Gradients::zeros_like(net);
  std::mt19937_64 shuffle_rng(derive_seed(config.seed, 1));
  std::mt19937_64 attack_rng(derive_seed(config.seed, 2));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const int dim = net.input_dim();
  const std::size_t batches_per_epoch =
      (data.size() + static_cast<std::size_t>(config.batch_size) - 1) / static_cast<std::size_t>(config.batch_size);
  std::size_t batch_index = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const auto count = static_cast<Eigen::Index>(end - start);
      Matrix inputs(dim, count);
      std::vector<int> labels(static_cast<std::size_t>(count));
      for (Eigen::Index b = 0; b < count; ++b) {
        inputs.col(b) = data.images[order[start + b]];
        labels[b] = data.labels[order[start + b]];
      }
      if (config.adversarial) {
        const auto& at = *config.adversarial;
        double ramp = 1.0;
        if (at.warmup_epochs > 0)
          ramp = std::min(1.0, static_cast<double>(batch_index) /
                                   static_cast<double>(batches_per_epoch * static_cast<std::size_t>(at.warmup_epochs)));
        if (ramp > 0.0)
          inputs = pgd_perturb_batch(net, inputs, labels, ramp * at.epsilon, at.steps, ramp * at.step_size, attack_rng);
      }
      ++batch_index;

      ParameterGradients pg = loss_and_parameter_gradients(net, inputs, labels);
      double loss = pg.loss;
      if (config.weight_decay > 0.0) {
        loss += config.weight_decay * net.weight_norm_squared();
        for (std::size_t l = 0; l < net.depth(); ++l)
          pg.gradients.weights[l] += 2.0 * config.weight_decay * net.layer(l).weights;
      }
      if (!std::isfinite(loss))
        throw NumericalError("training diverged at epoch " + std::to_string(epoch) + " (loss " +
                             format_double(loss) + ")");
      for (Eigen::Index b = 0; b < count; ++b) correct += argmax(pg.logits.col(b)) == labels[b] ? 1 : 0;
      loss_sum += loss * static_cast<double>(count);

      for (std::size_t l = 0; l < net.depth(); ++l) {
        Layer& layer = net.layers()[l];
        velocity.weights[l] = config.momentum * velocity.weights[l] + pg.gradients.weights[l];
        velocity.bias[l] = config.momentum * velocity.bias[l] + pg.gradients.bias[l];
        layer.weights -= config.learning_rate * velocity.weights[l];
        layer.bias -= config.learning_rate * velocity.bias[l];
      }
    }
    EpochLog entry{epoch, loss_sum / static_cast<double>(data.size()),
                   static_cast<double>(correct) / static_cast<double>(data.size())};
    if (log) log->push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  return net;
}

double evaluate_accuracy(const Network& net, const Dataset& data) {
  if (data.empty()) throw std::invalid_argument("accuracy of an empty dataset");
  std::size_t correct = 0;
  constexpr std::size_t kChunk = 512;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    const std::size_t end = std::min(data.size(), start + kChunk);
    Matrix inputs(net.input_dim(), static_cast<Eigen::Index>(end - start));
    for (std::size_t i = start; i < end; ++i) inputs.col(static_cast<Eigen::Index>(i - start)) = data.images[i];
    const Matrix z = batch_logits(net, inputs);
    for (Eigen::Index b = 0; b < z.cols(); ++b)
      correct += argmax(z.col(b)) == data.labels[start + static_cast<std::size_t>(b)] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

ReportTable training_log_table(const std::vector<EpochLog>& log) {
  ReportTable t;
  t.columns = {"epoch", "loss", "accuracy"};
  for (const auto& e : log) t.add_row({static_cast<long long>(e.epoch), e.loss, e.accuracy});
  return t;
}

}  // namespace nrc
