#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nrc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct InputShape {
  int channels = 1;
  int height = 28;
  int width = 28;

  int size() const { return channels * height * width; }
  bool operator==(const InputShape&) const = default;
};

enum class LayerKind { dense, conv };

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  int units = 0;        // dense
  int kernels = 0;      // conv
  int kernel_size = 0;  // conv
  int stride = 1;       // conv

  static LayerSpec dense(int units) { return {LayerKind::dense, units, 0, 0, 1}; }
  static LayerSpec conv(int kernels, int kernel_size, int stride) {
    return {LayerKind::conv, 0, kernels, kernel_size, stride};
  }
  bool operator==(const LayerSpec&) const = default;
};

// Full layer list including the final logit layer.
struct Architecture {
  InputShape input;
  std::vector<LayerSpec> layers;

  bool operator==(const Architecture&) const = default;
};

// Fully-connected ReLU net with the given hidden widths and a dense logit layer.
Architecture dense_architecture(std::span<const int> hidden, int classes = 10,
                                InputShape input = {});
// Two conv layers (6 kernels 6x6 stride 2, 16 kernels 6x6 stride 2), dense 120, 84, logits.
Architecture reference_cnn_architecture(int classes = 10);
// Parses "15,20", "15,25,20,15" or "cnn".
Architecture parse_architecture(const std::string& text);
std::string architecture_name(const Architecture& arch);

struct ConvGeometry {
  int in_channels = 0;
  int in_height = 0;
  int in_width = 0;
  int kernels = 0;
  int kernel_size = 0;
  int stride = 1;

  int out_height() const { return (in_height - kernel_size) / stride + 1; }
  int out_width() const { return (in_width - kernel_size) / stride + 1; }
  int positions() const { return out_height() * out_width(); }
  int patch_size() const { return in_channels * kernel_size * kernel_size; }
  int input_size() const { return in_channels * in_height * in_width; }
  int output_size() const { return kernels * positions(); }
  bool operator==(const ConvGeometry&) const = default;
};

// A dense layer stores W as out x in, so weights(k, j) is the weight on the
// edge from input neuron j to output neuron k. A conv layer stores one row per
// kernel over its (channel, row, col) patch and one bias per kernel; outputs
// are flattened channel-major: index = kernel * positions + row * out_w + col.
struct Layer {
  LayerKind kind = LayerKind::dense;
  int in_dim = 0;
  int out_dim = 0;
  ConvGeometry conv;
  Matrix weights;
  Vector bias;
  // conv only: input index for (position p, patch entry r) at p * patch_size + r.
  std::vector<int> receptive_field;

  bool operator==(const Layer& other) const;
};

struct ModelInfo {
  std::string regime = "ce";
  std::uint64_t seed = 0;
  std::map<std::string, std::string> hyperparameters;

  bool operator==(const ModelInfo&) const = default;
};

class Network {
 public:
  Network() = default;
  // Zero-initialized parameters with the shapes implied by `arch`.
  explicit Network(Architecture arch);

  // Uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  static Network initialized(const Architecture& arch, std::uint64_t seed);

  const Architecture& architecture() const { return arch_; }
  int input_dim() const { return arch_.input.size(); }
  int output_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim; }
  std::size_t depth() const { return layers_.size(); }

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  const Layer& layer(std::size_t l) const { return layers_.at(l); }

  std::size_t parameter_count() const;
  // Sum of squared weights over all weight tensors (biases excluded).
  double weight_norm_squared() const;

  ModelInfo& info() { return info_; }
  const ModelInfo& info() const { return info_; }

  bool operator==(const Network& other) const;

 private:
  Architecture arch_;
  std::vector<Layer> layers_;
  ModelInfo info_;
};

// layers[0] is the input; layers[l] the post-ReLU output of layer l; the
// final entry holds the logits (no activation).
struct ActivationTrace {
  std::vector<Vector> layers;
  const Vector& logits() const { return layers.back(); }
};

struct ForwardResult {
  Vector logits;
  ActivationTrace trace;
};

ForwardResult forward(const Network& net, const Vector& x);
Vector logits(const Network& net, const Vector& x);
// Logits for a batch (columns are examples).
Matrix batch_logits(const Network& net, const Matrix& inputs);
// Argmax of the logits; ties go to the lowest index.
int predict(const Network& net, const Vector& x);
int argmax(const Vector& values);

// Softmax cross-entropy of one logit vector.
double cross_entropy(const Vector& logits, int label);

struct InputGradient {
  double loss = 0.0;
  Vector gradient;
  Vector logits;
};
InputGradient loss_and_input_gradient(const Network& net, const Vector& x, int label);

// Per-column input gradients of the per-example losses; losses written to `losses`.
Matrix batch_input_gradients(const Network& net, const Matrix& inputs,
                             std::span<const int> labels, std::vector<double>* losses = nullptr,
                             Matrix* logits = nullptr);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> bias;

  static Gradients zeros_like(const Network& net);
};

struct ParameterGradients {
  double loss = 0.0;  // mean cross-entropy over the batch
  Gradients gradients;
  Matrix logits;
};

// Columns of `inputs` are examples.
ParameterGradients loss_and_parameter_gradients(const Network& net, const Matrix& inputs,
                                                std::span<const int> labels);

// Explicit per-incidence form of a conv layer, used for graph construction.
struct SparseLinearMap {
  struct Entry {
    int input;
    int output;
    double weight;
  };
  int in_dim = 0;
  int out_dim = 0;
  std::vector<Entry> entries;
  Vector bias;  // one per output node

  Vector apply(const Vector& x) const;
};

SparseLinearMap unroll_conv(const Layer& layer);

// Builds a conv layer (zero parameters) and its receptive-field table.
Layer make_conv_layer(const ConvGeometry& geometry);
Layer make_dense_layer(int in_dim, int out_dim);

}  // namespace nrc
