#include "sensprune/surgery.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sensprune/errors.h"

namespace sensprune {

namespace {

bool is_prunable(const ModelSpec& spec, int layer) {
  return std::find(spec.prunable.begin(), spec.prunable.end(), layer) != spec.prunable.end();
}

// Keeps the listed rows of a row-major (rows, row_len) matrix.
std::vector<float> keep_rows(const std::vector<float>& m, std::size_t row_len,
                             const std::vector<int>& keep) {
  std::vector<float> out;
  out.reserve(keep.size() * row_len);
  for (int r : keep) {
    auto first = m.begin() + static_cast<std::ptrdiff_t>(r * row_len);
    out.insert(out.end(), first, first + static_cast<std::ptrdiff_t>(row_len));
  }
  return out;
}

std::vector<float> keep_items(const std::vector<float>& v, const std::vector<int>& keep) {
  if (v.empty()) return v;
  return keep_rows(v, 1, keep);
}

// Keeps input-channel slices of a conv weight laid out (out, in, k, k).
std::vector<float> keep_conv_inputs(const std::vector<float>& w, int out_ch, int in_ch,
                                    int kk, const std::vector<int>& keep) {
  std::vector<float> out;
  out.reserve(static_cast<std::size_t>(out_ch) * keep.size() * kk);
  for (int o = 0; o < out_ch; ++o) {
    for (int c : keep) {
      auto first = w.begin() + (static_cast<std::ptrdiff_t>(o) * in_ch + c) * kk;
      out.insert(out.end(), first, first + kk);
    }
  }
  return out;
}

// Keeps dense columns of kept channels; column index = c*hw + y*w + x.
std::vector<float> keep_dense_columns(const std::vector<float>& w, int out_dim, int in_dim,
                                      std::size_t hw, const std::vector<int>& keep) {
  std::vector<float> out;
  out.reserve(static_cast<std::size_t>(out_dim) * keep.size() * hw);
  for (int o = 0; o < out_dim; ++o) {
    const auto row = w.begin() + static_cast<std::ptrdiff_t>(o) * in_dim;
    for (int c : keep) {
      auto first = row + static_cast<std::ptrdiff_t>(c * hw);
      out.insert(out.end(), first, first + static_cast<std::ptrdiff_t>(hw));
    }
  }
  return out;
}

}  // namespace

int filters_for_ratio(double ratio, int n) {
  if (ratio <= 0.0 || n <= 1) return 0;
  const int k = static_cast<int>(std::lround(ratio * n));
  return std::clamp(k, 1, n - 1);
}

std::vector<int> select_filters(const Network& net, int layer, int count,
                                const SelectionStrategy& strategy) {
  const auto& spec = net.spec();
  if (!is_prunable(spec, layer)) {
    throw ConstraintError("layer " + std::to_string(layer) + " is not prunable");
  }
  const ConvGeometry& g = spec.layers[layer].conv;
  if (count < 0 || count >= g.out_ch) {
    throw InvalidRequest("cannot select " + std::to_string(count) + " of " +
                         std::to_string(g.out_ch) + " filters in layer " +
                         std::to_string(layer) + ": at least one must survive");
  }
  std::vector<int> order(g.out_ch);
  std::iota(order.begin(), order.end(), 0);
  if (strategy.kind == SelectionKind::kRandom) {
    std::mt19937_64 rng(strategy.seed);
    std::shuffle(order.begin(), order.end(), rng);
  } else {
    const std::size_t slab = static_cast<std::size_t>(g.in_ch) * g.kernel * g.kernel;
    const auto& w = net.params()[layer].weight;
    std::vector<double> norms(g.out_ch, 0.0);
    for (int f = 0; f < g.out_ch; ++f) {
      double acc = 0.0;
      for (std::size_t k = 0; k < slab; ++k) {
        const double v = w[f * slab + k];
        acc += strategy.kind == SelectionKind::kL1Norm ? std::abs(v) : v * v;
      }
      norms[f] = acc;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&norms](int a, int b) { return norms[a] < norms[b]; });
  }
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

Network remove_filters(const Network& net, int layer, const std::vector<int>& positions) {
  const ModelSpec& spec = net.spec();
  if (layer < 0 || layer >= static_cast<int>(spec.layers.size()) || !is_prunable(spec, layer)) {
    throw ConstraintError("layer " + std::to_string(layer) + " is not prunable");
  }
  if (positions.empty()) return net;
  const int n = spec.layers[layer].conv.out_ch;
  std::vector<bool> drop(n, false);
  for (int p : positions) {
    if (p < 0 || p >= n) {
      throw InvalidRequest("filter position " + std::to_string(p) + " out of range for layer " +
                           std::to_string(layer) + " with " + std::to_string(n) + " filters");
    }
    if (drop[p]) throw InvalidRequest("duplicate filter position " + std::to_string(p));
    drop[p] = true;
  }
  std::vector<int> keep;
  for (int f = 0; f < n; ++f) {
    if (!drop[f]) keep.push_back(f);
  }
  if (keep.empty()) {
    throw ConstraintError("removal would leave layer " + std::to_string(layer) +
                          " with no filters");
  }

  const Topology& topo = net.topology();
  const int last = static_cast<int>(spec.layers.size()) - 1;
  auto touches_shortcut = [&](int i) {
    return topo.receives_shortcut(i, spec) ||
           (i + 1 <= last && topo.saved_for_shortcut(i + 1, spec));
  };

  ModelSpec out_spec = spec;
  Network out = net;
  auto& params = out.params();
  const int k = spec.layers[layer].conv.kernel;
  const int in_ch = spec.layers[layer].conv.in_ch;
  params[layer].weight =
      keep_rows(params[layer].weight, static_cast<std::size_t>(in_ch) * k * k, keep);
  params[layer].bias = keep_items(params[layer].bias, keep);
  out_spec.layers[layer].conv.out_ch = static_cast<int>(keep.size());

  // Walk forward to the consumer; the removed channels must not cross any
  // shortcut save or add point on the way.
  int i = layer;
  for (;;) {
    if (touches_shortcut(i)) {
      throw ConstraintError("removing filters from layer " + std::to_string(layer) +
                            " would change the width of a skip connection");
    }
    ++i;
    if (i > last) throw ConstraintError("layer " + std::to_string(layer) + " has no consumer");
    LayerSpec& l = out_spec.layers[i];
    LayerParams& p = params[i];
    if (l.kind == LayerKind::kBatchNorm) {
      p.weight = keep_items(p.weight, keep);
      p.bias = keep_items(p.bias, keep);
      p.running_mean = keep_items(p.running_mean, keep);
      p.running_var = keep_items(p.running_var, keep);
      l.channels = static_cast<int>(keep.size());
    } else if (l.kind == LayerKind::kConv2d) {
      const int kk = l.conv.kernel * l.conv.kernel;
      p.weight = keep_conv_inputs(p.weight, l.conv.out_ch, l.conv.in_ch, kk, keep);
      l.conv.in_ch = static_cast<int>(keep.size());
      break;
    } else if (l.kind == LayerKind::kDense) {
      const ActShape& a = topo.inputs[i];
      const std::size_t hw = static_cast<std::size_t>(a.h) * a.w;
      p.weight = keep_dense_columns(p.weight, l.dense.out_dim, l.dense.in_dim, hw, keep);
      l.dense.in_dim = static_cast<int>(keep.size() * hw);
      break;
    } else if (l.kind == LayerKind::kSoftmaxXent) {
      throw ConstraintError("layer " + std::to_string(layer) + " feeds the head directly");
    }
  }

  auto ids = net.filter_ids();
  std::vector<int> surviving;
  surviving.reserve(keep.size());
  for (int f : keep) surviving.push_back(ids.at(layer)[f]);
  ids[layer] = std::move(surviving);
  out.replace_spec(std::move(out_spec), std::move(ids));
  return out;
}

Network freeze_layer(const Network& net, int layer) {
  Network out = net;
  out.freeze(layer);
  return out;
}

Network clone(const Network& net) { return net; }

PruneMask prune_mask(const Network& net) {
  PruneMask mask;
  for (const auto& [layer, ids] : net.filter_ids()) {
    std::set<int> removed;
    const std::set<int> alive(ids.begin(), ids.end());
    for (int f = 0; f < net.original_filter_count(layer); ++f) {
      if (!alive.contains(f)) removed.insert(f);
    }
    if (!removed.empty()) mask.removed[layer] = std::move(removed);
  }
  return mask;
}

Network apply_mask(const Network& net, const PruneMask& mask) {
  Network out = net;
  for (const auto& [layer, ids] : mask.removed) {
    const auto& alive = out.filter_ids(layer);
    const int original = out.original_filter_count(layer);
    std::vector<int> positions;
    for (int id : ids) {
      if (id < 0 || id >= original) {
        throw InvalidRequest("mask index " + std::to_string(id) + " out of range for layer " +
                             std::to_string(layer));
      }
      auto it = std::find(alive.begin(), alive.end(), id);
      if (it != alive.end()) positions.push_back(static_cast<int>(it - alive.begin()));
    }
    out = remove_filters(out, layer, positions);
  }
  return out;
}

}  // namespace sensprune
