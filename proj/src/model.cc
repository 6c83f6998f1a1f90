#include "timelyfl/model.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "timelyfl/errors.h"

namespace timelyfl {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kRelu:
      return "relu";
    case Activation::kIdentity:
      return "identity";
    case Activation::kSoftmaxHead:
      return "softmax";
  }
  return "?";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  if (name == "softmax") return Activation::kSoftmaxHead;
  throw StructuralError("unknown activation '" + name + "'");
}

LayeredModel::LayeredModel(std::vector<Layer> layers, std::uint64_t version)
    : layers_(std::move(layers)), version_(version) {
  if (layers_.empty()) throw StructuralError("model needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (l.biases.size() != l.out_dim() || l.out_dim() == 0 || l.in_dim() == 0) {
      throw StructuralError("layer " + std::to_string(i) + " has inconsistent shape");
    }
    if (i + 1 < layers_.size() && l.out_dim() != layers_[i + 1].in_dim()) {
      throw StructuralError("layer " + std::to_string(i) + " output dim " +
                            std::to_string(l.out_dim()) + " != layer " +
                            std::to_string(i + 1) + " input dim " +
                            std::to_string(layers_[i + 1].in_dim()));
    }
    if (l.activation == Activation::kSoftmaxHead && i + 1 != layers_.size()) {
      throw StructuralError("softmax head must be the last layer");
    }
    if (!l.weights.all_finite() ||
        !std::all_of(l.biases.begin(), l.biases.end(),
                     [](double v) { return std::isfinite(v); })) {
      throw NumericError("layer " + std::to_string(i) + " has non-finite parameters");
    }
  }
}

std::size_t LayeredModel::input_dim() const { return layers_.front().in_dim(); }
std::size_t LayeredModel::class_count() const { return layers_.back().out_dim(); }

std::size_t LayeredModel::parameter_count() const { return suffix_parameter_count(0); }

std::size_t LayeredModel::suffix_parameter_count(std::size_t start) const {
  std::size_t total = 0;
  for (std::size_t i = start; i < layers_.size(); ++i) total += layers_[i].parameter_count();
  return total;
}

LayeredModel make_mlp(std::span<const std::size_t> dims, std::uint64_t seed) {
  if (dims.size() < 2) throw StructuralError("mlp needs at least input and output dims");
  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const std::size_t in = dims[i];
    const std::size_t out = dims[i + 1];
    if (in == 0 || out == 0) throw StructuralError("layer dims must be positive");
    RngStream rng(seed, Purpose::kModelInit, i);
    const double bound = std::sqrt(1.0 / static_cast<double>(in));
    Layer layer;
    layer.weights = Matrix(out, in);
    for (double& w : layer.weights.values()) w = rng.uniform(-bound, bound);
    layer.biases.resize(out);
    for (double& b : layer.biases) b = rng.uniform(-bound, bound);
    layer.activation =
        i + 2 == dims.size() ? Activation::kSoftmaxHead : Activation::kRelu;
    layers.push_back(std::move(layer));
  }
  return LayeredModel(std::move(layers));
}

void validate_mask(const LayeredModel& model, FreezeMask mask) {
  if (mask.trainable_suffix_start >= model.layer_count()) {
    throw StructuralError("freeze mask start " +
                          std::to_string(mask.trainable_suffix_start) +
                          " leaves no trainable layer");
  }
}

ForwardResult forward(const LayeredModel& model, const Matrix& batch) {
  if (batch.cols() != model.input_dim()) {
    throw StructuralError("batch feature dim " + std::to_string(batch.cols()) +
                          " != model input dim " + std::to_string(model.input_dim()));
  }
  if (!batch.all_finite()) throw NumericError("non-finite value in input batch");

  ForwardResult result;
  ActivationCache& cache = result.cache;
  cache.inputs.reserve(model.layer_count());
  cache.pre_activations.reserve(model.layer_count());

  Matrix current = batch;
  for (const Layer& layer : model.layers()) {
    const std::size_t n = current.rows();
    Matrix pre(n, layer.out_dim());
    for (std::size_t s = 0; s < n; ++s) {
      auto x = current.row(s);
      auto z = pre.row(s);
      for (std::size_t o = 0; o < layer.out_dim(); ++o) {
        auto w = layer.weights.row(o);
        double acc = layer.biases[o];
        for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * x[i];
        z[o] = acc;
      }
    }
    Matrix post = pre;
    if (layer.activation == Activation::kRelu) {
      for (double& v : post.values()) v = v > 0.0 ? v : 0.0;
    }
    cache.inputs.push_back(std::move(current));
    cache.pre_activations.push_back(std::move(pre));
    current = std::move(post);
  }
  result.logits = std::move(current);
  return result;
}

namespace {

void check_labels(std::span<const int> labels, std::size_t rows, std::size_t classes) {
  if (labels.size() != rows) {
    throw StructuralError("label count " + std::to_string(labels.size()) +
                          " != batch size " + std::to_string(rows));
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw StructuralError("label " + std::to_string(y) + " outside [0, " +
                            std::to_string(classes) + ")");
    }
  }
}

// Softmax of one logit row, numerically stabilised.
void softmax_row(std::span<const double> logits, std::span<double> out) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    out[c] = std::exp(logits[c] - mx);
    sum += out[c];
  }
  for (double& p : out) p /= sum;
}

}  // namespace

double cross_entropy(const Matrix& logits, std::span<const int> labels) {
  check_labels(labels, logits.rows(), logits.cols());
  if (logits.rows() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t s = 0; s < logits.rows(); ++s) {
    auto z = logits.row(s);
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    total += std::log(sum) + mx - z[static_cast<std::size_t>(labels[s])];
  }
  return total / static_cast<double>(logits.rows());
}

GradientSet backward_partial(const LayeredModel& model, const ActivationCache& cache,
                             std::span<const int> labels, FreezeMask mask) {
  validate_mask(model, mask);
  const std::size_t layer_count = model.layer_count();
  if (cache.inputs.size() != layer_count || cache.pre_activations.size() != layer_count) {
    throw StructuralError("activation cache does not match model depth");
  }
  const Matrix& logits = cache.pre_activations.back();
  check_labels(labels, logits.rows(), model.class_count());
  const std::size_t n = logits.rows();
  if (n == 0) throw StructuralError("empty batch");
  const double inv_n = 1.0 / static_cast<double>(n);

  // delta = dL/d(pre-activation) of the current layer.
  Matrix delta(n, model.class_count());
  for (std::size_t s = 0; s < n; ++s) {
    softmax_row(logits.row(s), delta.row(s));
    delta(s, static_cast<std::size_t>(labels[s])) -= 1.0;
    for (double& v : delta.row(s)) v *= inv_n;
  }

  GradientSet grads;
  for (std::size_t li = layer_count; li-- > mask.trainable_suffix_start;) {
    const Layer& layer = model.layer(li);
    const Matrix& input = cache.inputs[li];
    LayerGradient g{Matrix(layer.out_dim(), layer.in_dim()),
                    std::vector<double>(layer.out_dim(), 0.0)};
    for (std::size_t s = 0; s < n; ++s) {
      auto d = delta.row(s);
      auto x = input.row(s);
      for (std::size_t o = 0; o < layer.out_dim(); ++o) {
        if (d[o] == 0.0) continue;
        auto gw = g.weights.row(o);
        for (std::size_t i = 0; i < x.size(); ++i) gw[i] += d[o] * x[i];
        g.biases[o] += d[o];
      }
    }
    if (li > mask.trainable_suffix_start) {
      const Layer& below = model.layer(li - 1);
      const Matrix& below_pre = cache.pre_activations[li - 1];
      Matrix next(n, layer.in_dim());
      for (std::size_t s = 0; s < n; ++s) {
        auto d = delta.row(s);
        auto out = next.row(s);
        for (std::size_t o = 0; o < layer.out_dim(); ++o) {
          if (d[o] == 0.0) continue;
          auto w = layer.weights.row(o);
          for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[o] * w[i];
        }
        if (below.activation == Activation::kRelu) {
          auto z = below_pre.row(s);
          for (std::size_t i = 0; i < out.size(); ++i) {
            if (z[i] <= 0.0) out[i] = 0.0;
          }
        }
      }
      delta = std::move(next);
    }
    grads.emplace(li, std::move(g));
  }
  return grads;
}

void validate_update(const ClientUpdate& update, const LayeredModel& model) {
  if (update.sample_count == 0) throw StructuralError("update has zero sample count");
  if (update.trained_layers.empty()) throw StructuralError("update trains no layer");
  for (std::size_t i = 0; i < update.trained_layers.size(); ++i) {
    if (update.trained_layers[i] != model.layer_count() - update.trained_layers.size() + i) {
      throw StructuralError("trained layers are not a contiguous output-side suffix");
    }
  }
  if (update.layer_deltas.size() != update.trained_layers.size()) {
    throw StructuralError("delta keys differ from trained layers");
  }
  for (std::size_t li : update.trained_layers) {
    auto it = update.layer_deltas.find(li);
    if (it == update.layer_deltas.end()) {
      throw StructuralError("missing delta for trained layer " + std::to_string(li));
    }
    const Layer& layer = model.layer(li);
    if (it->second.weights.rows() != layer.out_dim() ||
        it->second.weights.cols() != layer.in_dim() ||
        it->second.biases.size() != layer.out_dim()) {
      throw StructuralError("delta shape mismatch on layer " + std::to_string(li));
    }
  }
}

ClientUpdate local_train(const LayeredModel& global, const DataShard& shard,
                         const TrainOptions& options, RngStream batch_order) {
  if (shard.size() == 0) throw StructuralError("cannot train on an empty shard");
  if (options.epochs < 1) throw StructuralError("epochs must be >= 1");
  if (options.batch_size == 0) throw StructuralError("batch size must be >= 1");
  validate_mask(global, options.mask);

  // Trained parameters are kept as global + accumulated delta so that the
  // uploaded delta reconstructs the client's parameters exactly.
  LayeredModel working = global;
  MergedDelta deltas;
  for (std::size_t li = options.mask.trainable_suffix_start; li < global.layer_count(); ++li) {
    const Layer& l = global.layer(li);
    deltas.emplace(li, LayerDelta{Matrix(l.out_dim(), l.in_dim()),
                                  std::vector<double>(l.out_dim(), 0.0)});
  }

  std::vector<std::size_t> order(shard.size());
  std::vector<int> batch_labels;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), batch_order);
    for (std::size_t begin = 0; begin < order.size(); begin += options.batch_size) {
      const std::size_t end = std::min(order.size(), begin + options.batch_size);
      std::span<const std::size_t> idx(order.data() + begin, end - begin);
      Matrix batch = gather_rows(shard.features, idx);
      batch_labels.clear();
      for (std::size_t i : idx) batch_labels.push_back(shard.labels[i]);

      ForwardResult fwd = forward(working, batch);
      GradientSet grads =
          backward_partial(working, fwd.cache, batch_labels, options.mask);
      for (auto& [li, g] : grads) {
        LayerDelta& d = deltas.at(li);
        const Layer& base = global.layer(li);
        Layer& layer = working.mutable_layer(li);
        auto& dw = d.weights.values();
        for (std::size_t j = 0; j < dw.size(); ++j) {
          dw[j] -= options.lr * g.weights.values()[j];
          layer.weights.values()[j] = base.weights.values()[j] + dw[j];
        }
        for (std::size_t j = 0; j < d.biases.size(); ++j) {
          d.biases[j] -= options.lr * g.biases[j];
          layer.biases[j] = base.biases[j] + d.biases[j];
        }
      }
    }
  }

  ClientUpdate update;
  update.client_id = shard.client_id;
  update.origin_version = global.version();
  update.sample_count = shard.size();
  for (auto& [li, d] : deltas) {
    if (!d.weights.all_finite()) throw NumericError("training diverged: non-finite delta");
    update.trained_layers.push_back(li);
  }
  update.layer_deltas = std::move(deltas);
  return update;
}

LayeredModel apply_update(const LayeredModel& model, const MergedDelta& merged) {
  std::vector<Layer> layers = model.layers();
  for (const auto& [li, d] : merged) {
    if (li >= layers.size()) {
      throw StructuralError("merged delta touches missing layer " + std::to_string(li));
    }
    Layer& layer = layers[li];
    if (d.weights.rows() != layer.out_dim() || d.weights.cols() != layer.in_dim() ||
        d.biases.size() != layer.out_dim()) {
      throw StructuralError("merged delta shape mismatch on layer " + std::to_string(li));
    }
    auto& w = layer.weights.values();
    for (std::size_t j = 0; j < w.size(); ++j) w[j] += d.weights.values()[j];
    for (std::size_t j = 0; j < layer.biases.size(); ++j) layer.biases[j] += d.biases[j];
  }
  return LayeredModel(std::move(layers), model.version() + 1);
}

}  // namespace timelyfl
