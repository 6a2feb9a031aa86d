#include "nrc/network.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "nrc/errors.hpp"

namespace nrc {

Architecture dense_architecture(std::span<const int> hidden, int classes, InputShape input) {
  Architecture arch;
  arch.input = input;
  for (int units : hidden) arch.layers.push_back(LayerSpec::dense(units));
  arch.layers.push_back(LayerSpec::dense(classes));
  return arch;
}

Architecture reference_cnn_architecture(int classes) {
  Architecture arch;
  arch.layers = {LayerSpec::conv(6, 6, 2), LayerSpec::conv(16, 6, 2), LayerSpec::dense(120),
                 LayerSpec::dense(84), LayerSpec::dense(classes)};
  return arch;
}

Architecture parse_architecture(const std::string& text) {
  if (text == "cnn" || text == "CNN") return reference_cnn_architecture();
  std::vector<int> hidden;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int units = 0;
    try {
      units = std::stoi(item, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad architecture '" + text + "'");
    }
    if (used != item.size() || units <= 0)
      throw std::invalid_argument("bad architecture '" + text + "'");
    hidden.push_back(units);
  }
  if (hidden.empty()) throw std::invalid_argument("empty architecture");
  return dense_architecture(hidden);
}

std::string architecture_name(const Architecture& arch) {
  bool all_dense = true;
  for (const auto& spec : arch.layers) all_dense = all_dense && spec.kind == LayerKind::dense;
  if (!all_dense) return arch == reference_cnn_architecture() ? "cnn" : "custom-conv";
  std::string name;
  for (std::size_t l = 0; l + 1 < arch.layers.size(); ++l) {
    if (!name.empty()) name += ',';
    name += std::to_string(arch.layers[l].units);
  }
  return name;
}

Layer make_dense_layer(int in_dim, int out_dim) {
  Layer layer;
  layer.kind = LayerKind::dense;
  layer.in_dim = in_dim;
  layer.out_dim = out_dim;
  layer.weights = Matrix::Zero(out_dim, in_dim);
  layer.bias = Vector::Zero(out_dim);
  return layer;
}

Layer make_conv_layer(const ConvGeometry& g) {
  if (g.kernel_size <= 0 || g.stride <= 0 || g.kernels <= 0 || g.in_channels <= 0)
    throw DimensionError("conv layer needs positive kernels, kernel size, stride, channels");
  if (g.kernel_size > g.in_height || g.kernel_size > g.in_width)
    throw DimensionError("conv kernel larger than its input");
  if ((g.in_height - g.kernel_size) % g.stride != 0 || (g.in_width - g.kernel_size) % g.stride != 0)
    throw DimensionError("conv stride does not tile the input exactly");

  Layer layer;
  layer.kind = LayerKind::conv;
  layer.conv = g;
  layer.in_dim = g.input_size();
  layer.out_dim = g.output_size();
  layer.weights = Matrix::Zero(g.kernels, g.patch_size());
  layer.bias = Vector::Zero(g.kernels);

  const int out_w = g.out_width();
  const int patch = g.patch_size();
  layer.receptive_field.resize(static_cast<std::size_t>(g.positions()) * patch);
  for (int p = 0; p < g.positions(); ++p) {
    const int row0 = (p / out_w) * g.stride;
    const int col0 = (p % out_w) * g.stride;
    int r = 0;
    for (int c = 0; c < g.in_channels; ++c)
      for (int dr = 0; dr < g.kernel_size; ++dr)
        for (int dc = 0; dc < g.kernel_size; ++dc, ++r)
          layer.receptive_field[static_cast<std::size_t>(p) * patch + r] =
              (c * g.in_height + row0 + dr) * g.in_width + col0 + dc;
  }
  return layer;
}

bool Layer::operator==(const Layer& other) const {
  return kind == other.kind && in_dim == other.in_dim && out_dim == other.out_dim &&
         conv == other.conv && weights.rows() == other.weights.rows() &&
         weights.cols() == other.weights.cols() && bias.size() == other.bias.size() &&
         weights == other.weights && bias == other.bias;
}

Network::Network(Architecture arch) : arch_(std::move(arch)) {
  if (arch_.layers.empty()) throw DimensionError("architecture has no layers");
  if (arch_.input.size() <= 0) throw DimensionError("architecture has an empty input");
  if (arch_.layers.back().kind != LayerKind::dense)
    throw DimensionError("the logit layer must be dense");

  int dim = arch_.input.size();
  // spatial shape of the current activation, valid while only conv layers have been seen
  bool spatial = true;
  ConvGeometry shape{arch_.input.channels, arch_.input.height, arch_.input.width, 0, 0, 1};
  for (const auto& spec : arch_.layers) {
    if (spec.kind == LayerKind::dense) {
      if (spec.units <= 0) throw DimensionError("dense layer needs positive width");
      layers_.push_back(make_dense_layer(dim, spec.units));
      dim = spec.units;
      spatial = false;
    } else {
      if (!spatial) throw DimensionError("conv layer after a dense layer is not supported");
      ConvGeometry g{shape.in_channels, shape.in_height, shape.in_width, spec.kernels,
                     spec.kernel_size, spec.stride};
      layers_.push_back(make_conv_layer(g));
      shape = {g.kernels, g.out_height(), g.out_width(), 0, 0, 1};
      dim = g.output_size();
    }
  }
}

Network Network::initialized(const Architecture& arch, std::uint64_t seed) {
  Network net(arch);
  std::mt19937_64 rng(seed);
  for (auto& layer : net.layers_) {
    double fan_in = 0;
    double fan_out = 0;
    if (layer.kind == LayerKind::dense) {
      fan_in = layer.in_dim;
      fan_out = layer.out_dim;
    } else {
      fan_in = layer.conv.patch_size();
      fan_out = static_cast<double>(layer.conv.kernels) * layer.conv.kernel_size *
                layer.conv.kernel_size;
    }
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index j = 0; j < layer.weights.cols(); ++j)
      for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) layer.weights(i, j) = dist(rng);
    layer.bias.setZero();
  }
  net.info_.seed = seed;
  return net;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weights.size() + layer.bias.size();
  return n;
}

double Network::weight_norm_squared() const {
  double total = 0;
  for (const auto& layer : layers_) total += layer.weights.squaredNorm();
  return total;
}

bool Network::operator==(const Network& other) const {
  return arch_ == other.arch_ && layers_ == other.layers_ && info_ == other.info_;
}

namespace {

// Pre-activation of one layer for a batch (columns are examples).
Matrix layer_forward(const Layer& layer, const Matrix& in) {
  if (layer.kind == LayerKind::dense) {
    Matrix z = layer.weights * in;
    z.colwise() += layer.bias;
    return z;
  }
  const auto& g = layer.conv;
  const int positions = g.positions();
  const int patch = g.patch_size();
  Matrix out(layer.out_dim, in.cols());
  Matrix patches(positions, patch);
  for (Eigen::Index b = 0; b < in.cols(); ++b) {
    for (int p = 0; p < positions; ++p)
      for (int r = 0; r < patch; ++r)
        patches(p, r) = in(layer.receptive_field[static_cast<std::size_t>(p) * patch + r], b);
    Eigen::Map<Matrix> z(out.col(b).data(), positions, g.kernels);
    z.noalias() = patches * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
  }
  return out;
}

struct BatchPass {
  std::vector<Matrix> activations;  // activations[0] = input, [l+1] = output of layer l
  std::vector<Matrix> pre;          // pre-activations of each layer
};

BatchPass batch_forward(const Network& net, const Matrix& inputs) {
  if (inputs.rows() != net.input_dim())
    throw DimensionError("input has " + std::to_string(inputs.rows()) + " entries, network expects " +
                         std::to_string(net.input_dim()));
  BatchPass pass;
  pass.activations.reserve(net.depth() + 1);
  pass.pre.reserve(net.depth());
  pass.activations.push_back(inputs);
  for (std::size_t l = 0; l < net.depth(); ++l) {
    pass.pre.push_back(layer_forward(net.layer(l), pass.activations.back()));
    if (l + 1 < net.depth())
      pass.activations.push_back(pass.pre.back().cwiseMax(0.0));
    else
      pass.activations.push_back(pass.pre.back());
  }
  return pass;
}

// Softmax cross-entropy per column; returns losses and writes dLoss/dLogits.
std::vector<double> softmax_cross_entropy(const Matrix& logits, std::span<const int> labels,
                                          Matrix& grad) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.cols())
    throw DimensionError("label count does not match batch size");
  std::vector<double> losses(labels.size());
  grad.resize(logits.rows(), logits.cols());
  for (Eigen::Index b = 0; b < logits.cols(); ++b) {
    const int y = labels[b];
    if (y < 0 || y >= logits.rows()) throw DimensionError("label out of range");
    const double peak = logits.col(b).maxCoeff();
    Vector shifted = (logits.col(b).array() - peak).exp();
    const double total = shifted.sum();
    losses[b] = std::log(total) + peak - logits(y, b);
    grad.col(b) = shifted / total;
    // p_y - 1 cancels to zero for confident predictions; the complement keeps the gradient alive.
    double others = 0.0;
    for (Eigen::Index j = 0; j < shifted.size(); ++j)
      if (j != y) others += shifted[j];
    grad(y, b) = -others / total;
  }
  return losses;
}

struct Backward {
  Gradients params;
  Matrix input_grad;
};

// Backpropagates dL/dlogits (one column per example) through the network.
Backward backward(const Network& net, const BatchPass& pass, Matrix delta, bool want_params,
                  bool want_input) {
  Backward out;
  if (want_params) out.params = Gradients::zeros_like(net);
  for (std::size_t li = net.depth(); li-- > 0;) {
    const Layer& layer = net.layer(li);
    const Matrix& in = pass.activations[li];
    // delta is dL/d(pre-activation) of layer li here.
    Matrix grad_in;
    const bool need_in = want_input || li > 0;
    if (layer.kind == LayerKind::dense) {
      if (want_params) {
        out.params.weights[li].noalias() = delta * in.transpose();
        out.params.bias[li] = delta.rowwise().sum();
      }
      if (need_in) grad_in.noalias() = layer.weights.transpose() * delta;
    } else {
      const auto& g = layer.conv;
      const int positions = g.positions();
      const int patch = g.patch_size();
      Matrix patches(positions, patch);
      if (need_in) grad_in = Matrix::Zero(layer.in_dim, in.cols());
      for (Eigen::Index b = 0; b < in.cols(); ++b) {
        Eigen::Map<const Matrix> dz(delta.col(b).data(), positions, g.kernels);
        if (want_params) {
          for (int p = 0; p < positions; ++p)
            for (int r = 0; r < patch; ++r)
              patches(p, r) = in(layer.receptive_field[static_cast<std::size_t>(p) * patch + r], b);
          out.params.weights[li].noalias() += dz.transpose() * patches;
          out.params.bias[li] += dz.colwise().sum().transpose();
        }
        if (need_in) {
          Matrix dpatches = dz * layer.weights;
          for (int p = 0; p < positions; ++p)
            for (int r = 0; r < patch; ++r)
              grad_in(layer.receptive_field[static_cast<std::size_t>(p) * patch + r], b) +=
                  dpatches(p, r);
        }
      }
    }
    if (li == 0) {
      if (want_input) out.input_grad = std::move(grad_in);
      break;
    }
    // through the ReLU of layer li-1 (derivative taken as 0 at 0)
    delta = grad_in.cwiseProduct((pass.pre[li - 1].array() > 0.0).cast<double>().matrix());
  }
  return out;
}

}  // namespace

Gradients Gradients::zeros_like(const Network& net) {
  Gradients g;
  for (const auto& layer : net.layers()) {
    g.weights.push_back(Matrix::Zero(layer.weights.rows(), layer.weights.cols()));
    g.bias.push_back(Vector::Zero(layer.bias.size()));
  }
  return g;
}

ForwardResult forward(const Network& net, const Vector& x) {
  BatchPass pass = batch_forward(net, x);
  ForwardResult result;
  result.trace.layers.reserve(pass.activations.size());
  for (auto& a : pass.activations) result.trace.layers.push_back(a.col(0));
  result.logits = result.trace.layers.back();
  return result;
}

Vector logits(const Network& net, const Vector& x) {
  BatchPass pass = batch_forward(net, x);
  return pass.activations.back().col(0);
}

Matrix batch_logits(const Network& net, const Matrix& inputs) {
  return std::move(batch_forward(net, inputs).activations.back());
}

int argmax(const Vector& values) {
  int best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = static_cast<int>(i);
  return best;
}

int predict(const Network& net, const Vector& x) { return argmax(logits(net, x)); }

double cross_entropy(const Vector& z, int label) {
  Matrix grad;
  const int labels[] = {label};
  return softmax_cross_entropy(z, labels, grad)[0];
}

InputGradient loss_and_input_gradient(const Network& net, const Vector& x, int label) {
  std::vector<double> losses;
  Matrix z;
  const int labels[] = {label};
  Matrix g = batch_input_gradients(net, x, labels, &losses, &z);
  return {losses[0], g.col(0), z.col(0)};
}

Matrix batch_input_gradients(const Network& net, const Matrix& inputs, std::span<const int> labels,
                             std::vector<double>* losses, Matrix* logits) {
  BatchPass pass = batch_forward(net, inputs);
  Matrix delta;
  auto per_example = softmax_cross_entropy(pass.activations.back(), labels, delta);
  if (losses) *losses = std::move(per_example);
  if (logits) *logits = pass.activations.back();
  return backward(net, pass, std::move(delta), false, true).input_grad;
}

ParameterGradients loss_and_parameter_gradients(const Network& net, const Matrix& inputs,
                                                std::span<const int> labels) {
  if (inputs.cols() == 0) throw std::invalid_argument("empty batch");
  BatchPass pass = batch_forward(net, inputs);
  Matrix delta;
  auto losses = softmax_cross_entropy(pass.activations.back(), labels, delta);
  const double scale = 1.0 / static_cast<double>(inputs.cols());
  delta *= scale;
  ParameterGradients result;
  for (double l : losses) result.loss += l;
  result.loss *= scale;
  result.gradients = backward(net, pass, std::move(delta), true, false).params;
  result.logits = std::move(pass.activations.back());
  return result;
}

Vector SparseLinearMap::apply(const Vector& x) const {
  if (x.size() != in_dim) throw DimensionError("sparse map input dimension mismatch");
  Vector out = bias;
  for (const auto& e : entries) out[e.output] += e.weight * x[e.input];
  return out;
}

SparseLinearMap unroll_conv(const Layer& layer) {
  if (layer.kind != LayerKind::conv) throw DimensionError("unroll_conv needs a conv layer");
  const auto& g = layer.conv;
  const int positions = g.positions();
  const int patch = g.patch_size();
  if (static_cast<int>(layer.receptive_field.size()) != positions * patch ||
      layer.weights.rows() != g.kernels || layer.weights.cols() != patch)
    throw DimensionError("conv layer parameters disagree with its geometry");

  SparseLinearMap map;
  map.in_dim = layer.in_dim;
  map.out_dim = layer.out_dim;
  map.bias.resize(layer.out_dim);
  map.entries.reserve(static_cast<std::size_t>(layer.out_dim) * patch);
  for (int k = 0; k < g.kernels; ++k) {
    for (int p = 0; p < positions; ++p) {
      const int out = k * positions + p;
      map.bias[out] = layer.bias[k];
      for (int r = 0; r < patch; ++r)
        map.entries.push_back(
            {layer.receptive_field[static_cast<std::size_t>(p) * patch + r], out, layer.weights(k, r)});
    }
  }
  return map;
}

}  // namespace nrc
