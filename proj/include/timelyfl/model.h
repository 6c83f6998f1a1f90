#ifndef TIMELYFL_MODEL_H_
#define TIMELYFL_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "timelyfl/dataset.h"
#include "timelyfl/matrix.h"
#include "timelyfl/rng.h"

namespace timelyfl {

enum class Activation { kRelu, kIdentity, kSoftmaxHead };

const char* activation_name(Activation a);
Activation parse_activation(const std::string& name);

struct Layer {
  Matrix weights;  // out_dim x in_dim
  std::vector<double> biases;
  Activation activation = Activation::kIdentity;

  std::size_t in_dim() const { return weights.cols(); }
  std::size_t out_dim() const { return weights.rows(); }
  std::size_t parameter_count() const { return weights.size() + biases.size(); }

  friend bool operator==(const Layer&, const Layer&) = default;
};

// Ordered stack of dense layers. The last layer produces class logits;
// cross-entropy is taken over a softmax of those logits.
class LayeredModel {
 public:
  LayeredModel() = default;
  // Throws StructuralError on chained-dimension mismatch and NumericError
  // on non-finite parameters.
  explicit LayeredModel(std::vector<Layer> layers, std::uint64_t version = 0);

  std::size_t layer_count() const { return layers_.size(); }
  const std::vector<Layer>& layers() const { return layers_; }
  const Layer& layer(std::size_t i) const { return layers_.at(i); }
  Layer& mutable_layer(std::size_t i) { return layers_.at(i); }

  std::uint64_t version() const { return version_; }
  void set_version(std::uint64_t v) { version_ = v; }

  std::size_t input_dim() const;
  std::size_t class_count() const;
  std::size_t parameter_count() const;
  // Parameter count of layers [start, layer_count()).
  std::size_t suffix_parameter_count(std::size_t start) const;

  friend bool operator==(const LayeredModel&, const LayeredModel&) = default;

 private:
  std::vector<Layer> layers_;
  std::uint64_t version_ = 0;
};

// dims = {input, hidden..., classes}. Hidden layers use relu, the last layer
// is a softmax head. Weights and biases ~ U[-sqrt(1/in), sqrt(1/in)].
LayeredModel make_mlp(std::span<const std::size_t> dims, std::uint64_t seed);

// Layers at index >= trainable_suffix_start are trained, the rest frozen.
struct FreezeMask {
  std::size_t trainable_suffix_start = 0;

  bool trains(std::size_t layer) const { return layer >= trainable_suffix_start; }
  static FreezeMask full() { return {0}; }
  static FreezeMask output_only(const LayeredModel& m) { return {m.layer_count() - 1}; }

  friend bool operator==(const FreezeMask&, const FreezeMask&) = default;
};

void validate_mask(const LayeredModel& model, FreezeMask mask);

struct ActivationCache {
  std::vector<Matrix> inputs;           // input to layer i
  std::vector<Matrix> pre_activations;  // W x + b of layer i
};

struct ForwardResult {
  Matrix logits;
  ActivationCache cache;
};

ForwardResult forward(const LayeredModel& model, const Matrix& batch);

struct LayerGradient {
  Matrix weights;
  std::vector<double> biases;

  friend bool operator==(const LayerGradient&, const LayerGradient&) = default;
};

// Keyed by layer index; only trained layers appear.
using GradientSet = std::map<std::size_t, LayerGradient>;

// Gradient of mean softmax cross-entropy. The error signal is not
// propagated below mask.trainable_suffix_start.
GradientSet backward_partial(const LayeredModel& model, const ActivationCache& cache,
                             std::span<const int> labels, FreezeMask mask);

double cross_entropy(const Matrix& logits, std::span<const int> labels);

using LayerDelta = LayerGradient;
using MergedDelta = std::map<std::size_t, LayerDelta>;

struct ClientUpdate {
  int client_id = -1;
  std::map<std::size_t, LayerDelta> layer_deltas;
  std::vector<std::size_t> trained_layers;  // ascending, contiguous suffix
  std::uint64_t origin_version = 0;
  std::size_t sample_count = 0;
  double arrival_time = 0.0;
};

// Checks the ClientUpdate invariants against `model`'s shapes.
void validate_update(const ClientUpdate& update, const LayeredModel& model);

struct TrainOptions {
  int epochs = 1;
  FreezeMask mask;
  double lr = 0.1;
  std::size_t batch_size = 16;
};

// Plain minibatch SGD on a private copy of `global`. Sample order is
// reshuffled every epoch from `batch_order`.
ClientUpdate local_train(const LayeredModel& global, const DataShard& shard,
                         const TrainOptions& options, RngStream batch_order);

// Adds `merged` to the model and advances its version by one.
LayeredModel apply_update(const LayeredModel& model, const MergedDelta& merged);

}  // namespace timelyfl

#endif  // TIMELYFL_MODEL_H_
