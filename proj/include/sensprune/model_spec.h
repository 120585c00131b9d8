#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace sensprune {

enum class LayerKind { kConv2d, kBatchNorm, kRelu, kMaxPool, kDense, kSoftmaxXent };

const char* to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& name);

struct ConvGeometry {
  int in_ch = 0;
  int out_ch = 0;
  int kernel = 3;
  int stride = 1;
  int pad = 1;
  bool bias = true;
  friend bool operator==(const ConvGeometry&, const ConvGeometry&) = default;
};

struct PoolGeometry {
  int size = 2;
  int stride = 2;
  int pad = 0;
  friend bool operator==(const PoolGeometry&, const PoolGeometry&) = default;
};

struct DenseGeometry {
  int in_dim = 0;
  int out_dim = 0;
  friend bool operator==(const DenseGeometry&, const DenseGeometry&) = default;
};

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  std::string name;
  ConvGeometry conv;    // kConv2d
  int channels = 0;     // kBatchNorm
  PoolGeometry pool;    // kMaxPool
  DenseGeometry dense;  // kDense
  std::optional<int> block_id;

  static LayerSpec Conv(int in_ch, int out_ch, int kernel = 3, int stride = 1,
                        int pad = 1, bool bias = true);
  static LayerSpec BatchNorm(int channels);
  static LayerSpec Relu();
  static LayerSpec MaxPool(int size = 2, int stride = 2, int pad = 0);
  static LayerSpec Dense(int in_dim, int out_dim);
  static LayerSpec SoftmaxXent();

  LayerSpec& named(std::string n) {
    name = std::move(n);
    return *this;
  }
  LayerSpec& in_block(int id) {
    block_id = id;
    return *this;
  }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// The activation entering the first layer of `from_block` is added to the
// output of the last layer of `to_block`. When `projection` is set the
// shortcut goes through a bias-free 1x1 conv (stride chosen to match the
// spatial size) followed by batch norm.
struct SkipEdge {
  int from_block = 0;
  int to_block = 0;
  bool projection = false;
  friend bool operator==(const SkipEdge&, const SkipEdge&) = default;
};

struct ModelSpec {
  std::string name;
  int input_channels = 1;
  int input_height = 28;
  int input_width = 28;
  int num_classes = 10;
  std::vector<LayerSpec> layers;
  std::vector<SkipEdge> skip_edges;
  std::vector<int> prunable;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// Activation geometry (channels, height, width) without the batch dimension.
struct ActShape {
  int c = 0;
  int h = 0;
  int w = 0;
  std::size_t count() const { return static_cast<std::size_t>(c) * h * w; }
  friend bool operator==(const ActShape&, const ActShape&) = default;
};

struct BlockRange {
  int id = 0;
  int first = 0;  // index of the first layer in the block
  int last = 0;   // index of the last layer in the block
};

// Geometry of a projection shortcut resolved at assembly.
struct ShortcutGeometry {
  int edge = 0;
  int in_ch = 0;
  int out_ch = 0;
  int stride = 1;
  ActShape input;
  ActShape output;
};

// Result of shape inference over a ModelSpec for a fixed input size.
struct Topology {
  std::vector<ActShape> inputs;   // activation entering layer i
  std::vector<ActShape> outputs;  // activation leaving layer i
  std::vector<BlockRange> blocks;
  std::vector<ShortcutGeometry> shortcuts;  // one per skip edge, edge order

  const BlockRange* block(int id) const;
  // True if the activation entering layer i is saved for a shortcut.
  bool saved_for_shortcut(int layer, const ModelSpec& spec) const;
  // True if a shortcut is added onto the output of layer i.
  bool receives_shortcut(int layer, const ModelSpec& spec) const;
};

// Validates channel/dim contracts and skip edges for an input of h x w and
// returns per-layer activation shapes. Throws ConfigError on any mismatch.
Topology assemble(const ModelSpec& spec, int height, int width);
Topology assemble(const ModelSpec& spec);

// Number of output filters of a conv layer.
int filter_count(const ModelSpec& spec, int layer);

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j);

// FNV-1a over the canonical JSON serialization.
std::uint64_t spec_digest(const ModelSpec& spec);

}  // namespace sensprune
