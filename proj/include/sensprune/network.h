#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "sensprune/layers.h"
#include "sensprune/model_spec.h"
#include "sensprune/tensor.h"

namespace sensprune {

// Parameters of one layer. Conv: weight (out,in,k,k), bias (out) or empty.
// Dense: weight (out,in), bias (out). BatchNorm: weight = gamma, bias = beta,
// plus running statistics. Parameter-free layers leave everything empty.
struct LayerParams {
  std::vector<float> weight;
  std::vector<float> bias;
  std::vector<float> running_mean;
  std::vector<float> running_var;
};

// Projection shortcut: bias-free 1x1 conv followed by batch norm.
struct ShortcutParams {
  std::vector<float> weight;
  std::vector<float> gamma;
  std::vector<float> beta;
  std::vector<float> running_mean;
  std::vector<float> running_var;
};

// Gradient buffers with the same layout as the trainable parameters.
struct Gradients {
  std::vector<LayerParams> layers;
  std::vector<ShortcutParams> shortcuts;
  void zero();
};

// Everything backward() needs from a training-mode forward pass.
struct ForwardCache {
  std::vector<Tensor4> inputs;  // inputs[i] enters layer i
  std::vector<std::vector<float>> columns;  // im2col matrix per conv layer
  std::vector<layers::BatchNormCache<float>> bn;
  std::vector<std::vector<std::int32_t>> argmax;
  std::vector<Tensor4> shortcut_conv;  // projection conv output, per edge
  std::vector<layers::BatchNormCache<float>> shortcut_bn;
  // Batch statistics gathered for running-average updates.
  std::vector<std::vector<double>> bn_mean, bn_var;
  std::vector<std::vector<double>> shortcut_mean, shortcut_var;
};

inline constexpr double kBatchNormMomentum = 0.1;

// A live, parameterized instance of a ModelSpec.
class Network {
 public:
  // Parameters sized from the spec and zero-filled (BN gamma=1, var=1).
  explicit Network(ModelSpec spec);
  // Kaiming-uniform initialization drawn from `init_seed`.
  Network(ModelSpec spec, std::uint64_t init_seed);

  const ModelSpec& spec() const { return spec_; }
  const Topology& topology() const { return topo_; }

  std::vector<LayerParams>& params() { return params_; }
  const std::vector<LayerParams>& params() const { return params_; }
  std::vector<ShortcutParams>& shortcut_params() { return shortcuts_; }
  const std::vector<ShortcutParams>& shortcut_params() const { return shortcuts_; }

  const std::set<int>& frozen() const { return frozen_; }
  bool is_frozen(int layer) const { return frozen_.contains(layer); }
  void freeze(int layer);
  void unfreeze_all() { frozen_.clear(); }

  // Original indices of the filters still present in each prunable conv.
  const std::map<int, std::vector<int>>& filter_ids() const { return filter_ids_; }
  const std::vector<int>& filter_ids(int layer) const;
  int original_filter_count(int layer) const;

  // Training-mode forward fills `cache` and uses batch statistics.
  // Eval-mode forward uses running statistics; `cache` may be null.
  Tensor4 forward(const Tensor4& batch, bool train, ForwardCache* cache) const;
  Tensor4 predict(const Tensor4& batch) const { return forward(batch, false, nullptr); }

  // Accumulates parameter gradients for a pass recorded in `cache`.
  void backward(const ForwardCache& cache, const Tensor4& dlogits, Gradients& grads) const;

  // Folds a training batch's statistics into the running averages of every
  // non-frozen batch-norm layer.
  void update_running_stats(const ForwardCache& cache);

  Gradients make_gradients() const;

  // Replaces the spec after a structural edit. Parameter vectors must
  // already have the sizes the new spec implies.
  void replace_spec(ModelSpec spec, std::map<int, std::vector<int>> filter_ids);

  // Restores state saved by a checkpoint reader.
  void set_filter_ids(std::map<int, std::vector<int>> ids,
                      std::map<int, int> original_counts);
  const std::map<int, int>& original_filter_counts() const { return original_counts_; }

 private:
  void allocate();
  void check_sizes() const;

  ModelSpec spec_;
  Topology topo_;
  std::vector<LayerParams> params_;
  std::vector<ShortcutParams> shortcuts_;
  std::set<int> frozen_;
  std::map<int, std::vector<int>> filter_ids_;
  std::map<int, int> original_counts_;
  // Per layer: skip edges saved at its input / added to its output.
  std::vector<std::vector<int>> saves_;
  std::vector<std::vector<int>> adds_;
};

}  // namespace sensprune
