#include "sensprune/model_spec.h"

#include <algorithm>
#include <map>

#include "sensprune/errors.h"

namespace sensprune {

namespace {

std::string layer_label(const ModelSpec& spec, int i) {
  const auto& l = spec.layers[i];
  std::string s = "layer " + std::to_string(i) + " (" + to_string(l.kind);
  if (!l.name.empty()) s += " '" + l.name + "'";
  return s + ")";
}

int pooled_extent(int in, int size, int stride, int pad) {
  return (in + 2 * pad - size) / stride + 1;
}

}  // namespace

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv2d: return "conv2d";
    case LayerKind::kBatchNorm: return "batchnorm";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kMaxPool: return "maxpool";
    case LayerKind::kDense: return "dense";
    case LayerKind::kSoftmaxXent: return "softmax-xent-head";
  }
  return "?";
}

LayerKind layer_kind_from_string(const std::string& name) {
  static const std::map<std::string, LayerKind> kinds = {
      {"conv2d", LayerKind::kConv2d},   {"batchnorm", LayerKind::kBatchNorm},
      {"relu", LayerKind::kRelu},       {"maxpool", LayerKind::kMaxPool},
      {"dense", LayerKind::kDense},     {"softmax-xent-head", LayerKind::kSoftmaxXent}};
  auto it = kinds.find(name);
  if (it == kinds.end()) throw ConfigError("unknown layer kind '" + name + "'");
  return it->second;
}

LayerSpec LayerSpec::Conv(int in_ch, int out_ch, int kernel, int stride,
                          int pad, bool bias) {
  LayerSpec l;
  l.kind = LayerKind::kConv2d;
  l.conv = {in_ch, out_ch, kernel, stride, pad, bias};
  return l;
}

LayerSpec LayerSpec::BatchNorm(int channels) {
  LayerSpec l;
  l.kind = LayerKind::kBatchNorm;
  l.channels = channels;
  return l;
}

LayerSpec LayerSpec::Relu() { return LayerSpec{}; }

LayerSpec LayerSpec::MaxPool(int size, int stride, int pad) {
  LayerSpec l;
  l.kind = LayerKind::kMaxPool;
  l.pool = {size, stride, pad};
  return l;
}

LayerSpec LayerSpec::Dense(int in_dim, int out_dim) {
  LayerSpec l;
  l.kind = LayerKind::kDense;
  l.dense = {in_dim, out_dim};
  return l;
}

LayerSpec LayerSpec::SoftmaxXent() {
  LayerSpec l;
  l.kind = LayerKind::kSoftmaxXent;
  return l;
}

const BlockRange* Topology::block(int id) const {
  for (const auto& b : blocks) {
    if (b.id == id) return &b;
  }
  return nullptr;
}

bool Topology::saved_for_shortcut(int layer, const ModelSpec& spec) const {
  for (const auto& e : spec.skip_edges) {
    const BlockRange* b = block(e.from_block);
    if (b && b->first == layer) return true;
  }
  return false;
}

bool Topology::receives_shortcut(int layer, const ModelSpec& spec) const {
  for (const auto& e : spec.skip_edges) {
    const BlockRange* b = block(e.to_block);
    if (b && b->last == layer) return true;
  }
  return false;
}

Topology assemble(const ModelSpec& spec) {
  return assemble(spec, spec.input_height, spec.input_width);
}

Topology assemble(const ModelSpec& spec, int height, int width) {
  if (spec.layers.empty()) throw ConfigError("model '" + spec.name + "' has no layers");
  if (height < 1 || width < 1 || spec.input_channels < 1) {
    throw ConfigError("input geometry must be positive");
  }
  Topology topo;
  ActShape cur{spec.input_channels, height, width};
  const int n = static_cast<int>(spec.layers.size());
  for (int i = 0; i < n; ++i) {
    const LayerSpec& l = spec.layers[i];
    topo.inputs.push_back(cur);
    switch (l.kind) {
      case LayerKind::kConv2d: {
        const auto& g = l.conv;
        if (g.out_ch < 1 || g.in_ch < 1 || g.kernel < 1 || g.stride < 1 || g.pad < 0) {
          throw ConfigError(layer_label(spec, i) + ": invalid conv geometry");
        }
        if (g.in_ch != cur.c) {
          throw ConfigError(layer_label(spec, i) + ": expects " + std::to_string(g.in_ch) +
                            " input channels, got " + std::to_string(cur.c));
        }
        cur = {g.out_ch, pooled_extent(cur.h, g.kernel, g.stride, g.pad),
               pooled_extent(cur.w, g.kernel, g.stride, g.pad)};
        break;
      }
      case LayerKind::kBatchNorm:
        if (l.channels != cur.c) {
          throw ConfigError(layer_label(spec, i) + ": expects " + std::to_string(l.channels) +
                            " channels, got " + std::to_string(cur.c));
        }
        break;
      case LayerKind::kRelu:
        break;
      case LayerKind::kMaxPool: {
        const auto& p = l.pool;
        if (p.size < 1 || p.stride < 1 || p.pad < 0 || 2 * p.pad >= p.size + 1) {
          throw ConfigError(layer_label(spec, i) + ": invalid pool geometry");
        }
        cur = {cur.c, pooled_extent(cur.h, p.size, p.stride, p.pad),
               pooled_extent(cur.w, p.size, p.stride, p.pad)};
        break;
      }
      case LayerKind::kDense:
        if (l.dense.in_dim < 1 || l.dense.out_dim < 1) {
          throw ConfigError(layer_label(spec, i) + ": dense dims must be >= 1");
        }
        if (static_cast<std::size_t>(l.dense.in_dim) != cur.count()) {
          throw ConfigError(layer_label(spec, i) + ": expects " +
                            std::to_string(l.dense.in_dim) + " input features, got " +
                            std::to_string(cur.count()));
        }
        cur = {l.dense.out_dim, 1, 1};
        break;
      case LayerKind::kSoftmaxXent:
        if (i != n - 1) throw ConfigError(layer_label(spec, i) + ": head must be the last layer");
        break;
    }
    if (cur.h < 1 || cur.w < 1) {
      throw ConfigError(layer_label(spec, i) + ": spatial size collapsed below 1");
    }
    topo.outputs.push_back(cur);
  }
  if (cur != ActShape{spec.num_classes, 1, 1}) {
    throw ConfigError("model '" + spec.name + "' ends in " + std::to_string(cur.c) + "x" +
                      std::to_string(cur.h) + "x" + std::to_string(cur.w) + ", expected " +
                      std::to_string(spec.num_classes) + " logits");
  }

  // Blocks: contiguous runs of layers sharing a block id.
  std::map<int, BlockRange> ranges;
  for (int i = 0; i < n; ++i) {
    const auto& id = spec.layers[i].block_id;
    if (!id) continue;
    auto it = ranges.find(*id);
    if (it == ranges.end()) {
      ranges[*id] = BlockRange{*id, i, i};
    } else {
      if (it->second.last != i - 1) {
        throw ConfigError("block " + std::to_string(*id) + " is not contiguous");
      }
      it->second.last = i;
    }
  }
  for (const auto& [id, r] : ranges) topo.blocks.push_back(r);
  std::sort(topo.blocks.begin(), topo.blocks.end(),
            [](const BlockRange& a, const BlockRange& b) { return a.first < b.first; });

  for (std::size_t e = 0; e < spec.skip_edges.size(); ++e) {
    const SkipEdge& edge = spec.skip_edges[e];
    const BlockRange* from = topo.block(edge.from_block);
    const BlockRange* to = topo.block(edge.to_block);
    if (!from || !to) {
      throw ConfigError("skip edge " + std::to_string(e) + " references a missing block");
    }
    if (from->first > to->first) {
      throw ConfigError("skip edge " + std::to_string(e) + " runs backwards");
    }
    ShortcutGeometry sg;
    sg.edge = static_cast<int>(e);
    sg.input = topo.inputs[from->first];
    sg.output = topo.outputs[to->last];
    sg.in_ch = sg.input.c;
    sg.out_ch = sg.output.c;
    if (!edge.projection) {
      if (sg.input != sg.output) {
        throw ConfigError("skip edge " + std::to_string(e) + " joins blocks " +
                          std::to_string(edge.from_block) + " and " +
                          std::to_string(edge.to_block) +
                          " whose output shapes differ (" + std::to_string(sg.input.c) +
                          " vs " + std::to_string(sg.output.c) + " channels)");
      }
    } else {
      int stride = std::max(1, sg.input.h / sg.output.h);
      if ((sg.input.h - 1) / stride + 1 != sg.output.h ||
          (sg.input.w - 1) / stride + 1 != sg.output.w) {
        throw ConfigError("skip edge " + std::to_string(e) +
                          ": no integer stride maps the shortcut onto the block output");
      }
      sg.stride = stride;
    }
    topo.shortcuts.push_back(sg);
  }

  // Prunable layers: convs only, and inside a block only its first conv.
  for (int p : spec.prunable) {
    if (p < 0 || p >= n || spec.layers[p].kind != LayerKind::kConv2d) {
      throw ConfigError("prunable index " + std::to_string(p) + " is not a conv layer");
    }
    if (const auto& id = spec.layers[p].block_id) {
      const BlockRange* b = topo.block(*id);
      for (int i = b->first; i < p; ++i) {
        if (spec.layers[i].kind == LayerKind::kConv2d) {
          throw ConfigError(layer_label(spec, p) +
                            ": only the first conv of a block may be prunable");
        }
      }
    }
  }
  return topo;
}

int filter_count(const ModelSpec& spec, int layer) {
  if (layer < 0 || layer >= static_cast<int>(spec.layers.size()) ||
      spec.layers[layer].kind != LayerKind::kConv2d) {
    throw ConfigError("layer " + std::to_string(layer) + " is not a conv layer");
  }
  return spec.layers[layer].conv.out_ch;
}

nlohmann::json to_json(const ModelSpec& spec) {
  using nlohmann::json;
  json layers = json::array();
  for (const auto& l : spec.layers) {
    json j;
    j["kind"] = to_string(l.kind);
    if (!l.name.empty()) j["name"] = l.name;
    switch (l.kind) {
      case LayerKind::kConv2d:
        j["in_ch"] = l.conv.in_ch;
        j["out_ch"] = l.conv.out_ch;
        j["kernel"] = l.conv.kernel;
        j["stride"] = l.conv.stride;
        j["pad"] = l.conv.pad;
        j["bias"] = l.conv.bias;
        break;
      case LayerKind::kBatchNorm:
        j["channels"] = l.channels;
        break;
      case LayerKind::kMaxPool:
        j["size"] = l.pool.size;
        j["stride"] = l.pool.stride;
        j["pad"] = l.pool.pad;
        break;
      case LayerKind::kDense:
        j["in_dim"] = l.dense.in_dim;
        j["out_dim"] = l.dense.out_dim;
        break;
      default:
        break;
    }
    if (l.block_id) j["block"] = *l.block_id;
    layers.push_back(std::move(j));
  }
  json edges = json::array();
  for (const auto& e : spec.skip_edges) {
    edges.push_back({{"from_block", e.from_block},
                     {"to_block", e.to_block},
                     {"projection", e.projection}});
  }
  return json{{"name", spec.name},
              {"input", {spec.input_channels, spec.input_height, spec.input_width}},
              {"num_classes", spec.num_classes},
              {"layers", layers},
              {"skip_edges", edges},
              {"prunable", spec.prunable}};
}

ModelSpec model_spec_from_json(const nlohmann::json& j) {
  try {
    ModelSpec spec;
    spec.name = j.at("name").get<std::string>();
    const auto& in = j.at("input");
    spec.input_channels = in.at(0).get<int>();
    spec.input_height = in.at(1).get<int>();
    spec.input_width = in.at(2).get<int>();
    spec.num_classes = j.at("num_classes").get<int>();
    for (const auto& lj : j.at("layers")) {
      LayerSpec l;
      l.kind = layer_kind_from_string(lj.at("kind").get<std::string>());
      l.name = lj.value("name", std::string());
      switch (l.kind) {
        case LayerKind::kConv2d:
          l.conv = {lj.at("in_ch").get<int>(),  lj.at("out_ch").get<int>(),
                    lj.value("kernel", 3),      lj.value("stride", 1),
                    lj.value("pad", 1),         lj.value("bias", true)};
          break;
        case LayerKind::kBatchNorm:
          l.channels = lj.at("channels").get<int>();
          break;
        case LayerKind::kMaxPool:
          l.pool = {lj.value("size", 2), lj.value("stride", 2), lj.value("pad", 0)};
          break;
        case LayerKind::kDense:
          l.dense = {lj.at("in_dim").get<int>(), lj.at("out_dim").get<int>()};
          break;
        default:
          break;
      }
      if (lj.contains("block")) l.block_id = lj.at("block").get<int>();
      spec.layers.push_back(std::move(l));
    }
    for (const auto& ej : j.value("skip_edges", nlohmann::json::array())) {
      spec.skip_edges.push_back({ej.at("from_block").get<int>(), ej.at("to_block").get<int>(),
                                 ej.value("projection", false)});
    }
    spec.prunable = j.value("prunable", std::vector<int>{});
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model spec: ") + e.what());
  }
}

std::uint64_t spec_digest(const ModelSpec& spec) {
  const std::string s = to_json(spec).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace sensprune
