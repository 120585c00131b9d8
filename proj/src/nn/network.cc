#include "sensprune/network.h"

#include <cmath>
#include <numeric>
#include <random>

#include "sensprune/errors.h"
#include "sensprune/rng.h"

namespace sensprune {

namespace {

struct ParamSizes {
  std::size_t weight = 0;
  std::size_t bias = 0;
  std::size_t stats = 0;
};

ParamSizes sizes_for(const LayerSpec& l) {
  ParamSizes s;
  switch (l.kind) {
    case LayerKind::kConv2d:
      s.weight = static_cast<std::size_t>(l.conv.out_ch) * l.conv.in_ch * l.conv.kernel *
                 l.conv.kernel;
      s.bias = l.conv.bias ? l.conv.out_ch : 0;
      break;
    case LayerKind::kDense:
      s.weight = static_cast<std::size_t>(l.dense.out_dim) * l.dense.in_dim;
      s.bias = l.dense.out_dim;
      break;
    case LayerKind::kBatchNorm:
      s.weight = s.bias = s.stats = l.channels;
      break;
    default:
      break;
  }
  return s;
}

ConvGeometry shortcut_conv(const ShortcutGeometry& sg) {
  return ConvGeometry{sg.in_ch, sg.out_ch, 1, sg.stride, 0, false};
}

void fill_uniform(std::vector<float>& v, float bound, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-bound, bound);
  for (float& x : v) x = dist(rng);
}

void add_into(Tensor4& dst, const Tensor4& src) {
  if (!(dst.shape() == src.shape())) {
    throw ConfigError("shortcut shape " + to_string(src.shape()) +
                      " does not match block output " + to_string(dst.shape()));
  }
  float* d = dst.raw();
  const float* s = src.raw();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

void fold_stats(std::vector<float>& running_mean, std::vector<float>& running_var,
                const std::vector<double>& mean, const std::vector<double>& var,
                std::size_t count) {
  const double unbias = count > 1 ? static_cast<double>(count) / (count - 1) : 1.0;
  for (std::size_t c = 0; c < running_mean.size(); ++c) {
    running_mean[c] = static_cast<float>((1.0 - kBatchNormMomentum) * running_mean[c] +
                                         kBatchNormMomentum * mean[c]);
    running_var[c] = static_cast<float>((1.0 - kBatchNormMomentum) * running_var[c] +
                                        kBatchNormMomentum * var[c] * unbias);
  }
}

}  // namespace

void Gradients::zero() {
  for (auto& p : layers) {
    std::fill(p.weight.begin(), p.weight.end(), 0.0f);
    std::fill(p.bias.begin(), p.bias.end(), 0.0f);
  }
  for (auto& s : shortcuts) {
    std::fill(s.weight.begin(), s.weight.end(), 0.0f);
    std::fill(s.gamma.begin(), s.gamma.end(), 0.0f);
    std::fill(s.beta.begin(), s.beta.end(), 0.0f);
  }
}

Network::Network(ModelSpec spec) : spec_(std::move(spec)), topo_(assemble(spec_)) {
  allocate();
  for (int p : spec_.prunable) {
    std::vector<int> ids(spec_.layers[p].conv.out_ch);
    std::iota(ids.begin(), ids.end(), 0);
    filter_ids_[p] = std::move(ids);
    original_counts_[p] = spec_.layers[p].conv.out_ch;
  }
}

Network::Network(ModelSpec spec, std::uint64_t init_seed) : Network(std::move(spec)) {
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    int fan_in = 0;
    if (l.kind == LayerKind::kConv2d) fan_in = l.conv.in_ch * l.conv.kernel * l.conv.kernel;
    if (l.kind == LayerKind::kDense) fan_in = l.dense.in_dim;
    if (fan_in == 0) continue;
    fill_uniform(params_[i].weight, static_cast<float>(std::sqrt(6.0 / fan_in)),
                 derive_seed(init_seed, {0, i}));
  }
  for (std::size_t e = 0; e < shortcuts_.size(); ++e) {
    const int fan_in = topo_.shortcuts[e].in_ch;
    fill_uniform(shortcuts_[e].weight, static_cast<float>(std::sqrt(6.0 / fan_in)),
                 derive_seed(init_seed, {1, e}));
  }
}

void Network::allocate() {
  const int n = static_cast<int>(spec_.layers.size());
  params_.assign(n, {});
  for (int i = 0; i < n; ++i) {
    const ParamSizes s = sizes_for(spec_.layers[i]);
    LayerParams& p = params_[i];
    if (spec_.layers[i].kind == LayerKind::kBatchNorm) {
      p.weight.assign(s.weight, 1.0f);
      p.bias.assign(s.bias, 0.0f);
      p.running_mean.assign(s.stats, 0.0f);
      p.running_var.assign(s.stats, 1.0f);
    } else {
      p.weight.assign(s.weight, 0.0f);
      p.bias.assign(s.bias, 0.0f);
    }
  }
  shortcuts_.assign(spec_.skip_edges.size(), {});
  for (std::size_t e = 0; e < shortcuts_.size(); ++e) {
    if (!spec_.skip_edges[e].projection) continue;
    const ShortcutGeometry& sg = topo_.shortcuts[e];
    ShortcutParams& s = shortcuts_[e];
    s.weight.assign(static_cast<std::size_t>(sg.in_ch) * sg.out_ch, 0.0f);
    s.gamma.assign(sg.out_ch, 1.0f);
    s.beta.assign(sg.out_ch, 0.0f);
    s.running_mean.assign(sg.out_ch, 0.0f);
    s.running_var.assign(sg.out_ch, 1.0f);
  }
  saves_.assign(n, {});
  adds_.assign(n, {});
  for (std::size_t e = 0; e < spec_.skip_edges.size(); ++e) {
    saves_[topo_.block(spec_.skip_edges[e].from_block)->first].push_back(static_cast<int>(e));
    adds_[topo_.block(spec_.skip_edges[e].to_block)->last].push_back(static_cast<int>(e));
  }
}

void Network::check_sizes() const {
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const ParamSizes s = sizes_for(spec_.layers[i]);
    const LayerParams& p = params_.at(i);
    if (p.weight.size() != s.weight || p.bias.size() != s.bias ||
        p.running_mean.size() != s.stats || p.running_var.size() != s.stats) {
      throw ConfigError("parameter sizes of layer " + std::to_string(i) +
                        " do not match its spec");
    }
  }
  if (shortcuts_.size() != spec_.skip_edges.size()) {
    throw ConfigError("shortcut parameter count does not match skip edges");
  }
  for (std::size_t e = 0; e < shortcuts_.size(); ++e) {
    const ShortcutGeometry& sg = topo_.shortcuts[e];
    const std::size_t expect =
        spec_.skip_edges[e].projection ? static_cast<std::size_t>(sg.in_ch) * sg.out_ch : 0;
    if (shortcuts_[e].weight.size() != expect) {
      throw ConfigError("shortcut " + std::to_string(e) + " parameters do not match its spec");
    }
  }
}

void Network::freeze(int layer) {
  if (layer < 0 || layer >= static_cast<int>(spec_.layers.size())) {
    throw ConfigError("cannot freeze layer " + std::to_string(layer) + ": out of range");
  }
  frozen_.insert(layer);
}

const std::vector<int>& Network::filter_ids(int layer) const {
  auto it = filter_ids_.find(layer);
  if (it == filter_ids_.end()) {
    throw ConstraintError("layer " + std::to_string(layer) + " is not prunable");
  }
  return it->second;
}

int Network::original_filter_count(int layer) const {
  auto it = original_counts_.find(layer);
  if (it == original_counts_.end()) {
    throw ConstraintError("layer " + std::to_string(layer) + " is not prunable");
  }
  return it->second;
}

void Network::replace_spec(ModelSpec spec, std::map<int, std::vector<int>> filter_ids) {
  Topology topo = assemble(spec);
  spec_ = std::move(spec);
  topo_ = std::move(topo);
  filter_ids_ = std::move(filter_ids);
  const int n = static_cast<int>(spec_.layers.size());
  saves_.assign(n, {});
  adds_.assign(n, {});
  for (std::size_t e = 0; e < spec_.skip_edges.size(); ++e) {
    saves_[topo_.block(spec_.skip_edges[e].from_block)->first].push_back(static_cast<int>(e));
    adds_[topo_.block(spec_.skip_edges[e].to_block)->last].push_back(static_cast<int>(e));
  }
  check_sizes();
}

void Network::set_filter_ids(std::map<int, std::vector<int>> ids,
                             std::map<int, int> original_counts) {
  for (int p : spec_.prunable) {
    auto it = ids.find(p);
    if (it == ids.end() || static_cast<int>(it->second.size()) != spec_.layers[p].conv.out_ch) {
      throw ConfigError("filter ids for layer " + std::to_string(p) +
                        " do not match its filter count");
    }
  }
  filter_ids_ = std::move(ids);
  original_counts_ = std::move(original_counts);
}

Gradients Network::make_gradients() const {
  Gradients g;
  g.layers.resize(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    g.layers[i].weight.assign(params_[i].weight.size(), 0.0f);
    g.layers[i].bias.assign(params_[i].bias.size(), 0.0f);
  }
  g.shortcuts.resize(shortcuts_.size());
  for (std::size_t e = 0; e < shortcuts_.size(); ++e) {
    g.shortcuts[e].weight.assign(shortcuts_[e].weight.size(), 0.0f);
    g.shortcuts[e].gamma.assign(shortcuts_[e].gamma.size(), 0.0f);
    g.shortcuts[e].beta.assign(shortcuts_[e].beta.size(), 0.0f);
  }
  return g;
}

Tensor4 Network::forward(const Tensor4& batch, bool train, ForwardCache* cache) const {
  const Shape4 in = batch.shape();
  if (in.c != spec_.input_channels || in.h != spec_.input_height ||
      in.w != spec_.input_width) {
    throw ConfigError("batch shape " + to_string(in) + " does not match model input (" +
                      std::to_string(spec_.input_channels) + "," +
                      std::to_string(spec_.input_height) + "," +
                      std::to_string(spec_.input_width) + ")");
  }
  if (train && !cache) throw ConfigError("training-mode forward requires a cache");
  const std::size_t n_layers = spec_.layers.size();
  const std::size_t n_edges = spec_.skip_edges.size();
  if (cache) {
    cache->inputs.assign(n_layers, {});
    cache->columns.resize(n_layers);
    cache->bn.assign(n_layers, {});
    cache->argmax.assign(n_layers, {});
    cache->bn_mean.assign(n_layers, {});
    cache->bn_var.assign(n_layers, {});
    cache->shortcut_conv.assign(n_edges, {});
    cache->shortcut_bn.assign(n_edges, {});
    cache->shortcut_mean.assign(n_edges, {});
    cache->shortcut_var.assign(n_edges, {});
  }

  std::vector<Tensor4> saved(n_edges);
  std::vector<std::int32_t> scratch_argmax;
  Tensor4 cur = batch;
  for (std::size_t i = 0; i < n_layers; ++i) {
    for (int e : saves_[i]) saved[e] = cur;
    const LayerSpec& l = spec_.layers[i];
    const LayerParams& p = params_[i];
    Tensor4 next;
    switch (l.kind) {
      case LayerKind::kConv2d:
        layers::conv2d_forward<float>(cur, p.weight, p.bias, l.conv, next,
                                      cache ? &cache->columns[i] : nullptr);
        break;
      case LayerKind::kBatchNorm:
        if (train) {
          layers::batchnorm_forward_train<float>(cur, p.weight, p.bias, next, cache->bn[i],
                                                 cache->bn_mean[i], cache->bn_var[i]);
        } else {
          layers::batchnorm_forward_eval<float>(cur, p.weight, p.bias, p.running_mean,
                                                p.running_var, next);
        }
        break;
      case LayerKind::kRelu:
        layers::relu_forward(cur, next);
        break;
      case LayerKind::kMaxPool:
        layers::maxpool_forward(cur, l.pool, next, cache ? cache->argmax[i] : scratch_argmax);
        break;
      case LayerKind::kDense:
        layers::dense_forward<float>(cur, p.weight, p.bias, l.dense.out_dim, next);
        break;
      case LayerKind::kSoftmaxXent:
        next = cur;
        break;
    }
    for (int e : adds_[i]) {
      if (!spec_.skip_edges[e].projection) {
        add_into(next, saved[e]);
        continue;
      }
      const ShortcutParams& sp = shortcuts_[e];
      Tensor4 conv_out;
      Tensor4 bn_out;
      layers::conv2d_forward<float>(saved[e], sp.weight, {}, shortcut_conv(topo_.shortcuts[e]),
                                    conv_out);
      if (train) {
        layers::batchnorm_forward_train<float>(conv_out, sp.gamma, sp.beta, bn_out,
                                               cache->shortcut_bn[e], cache->shortcut_mean[e],
                                               cache->shortcut_var[e]);
        cache->shortcut_conv[e] = std::move(conv_out);
      } else {
        layers::batchnorm_forward_eval<float>(conv_out, sp.gamma, sp.beta, sp.running_mean,
                                              sp.running_var, bn_out);
      }
      add_into(next, bn_out);
    }
    if (cache) cache->inputs[i] = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

void Network::backward(const ForwardCache& cache, const Tensor4& dlogits,
                       Gradients& grads) const {
  const int n_layers = static_cast<int>(spec_.layers.size());
  if (static_cast<int>(cache.inputs.size()) != n_layers) {
    throw ConfigError("backward called with a cache from a different network");
  }
  std::vector<Tensor4> pending(spec_.skip_edges.size());
  Tensor4 g = dlogits;
  for (int i = n_layers - 1; i >= 0; --i) {
    for (int e : adds_[i]) pending[e] = g;
    const LayerSpec& l = spec_.layers[i];
    const LayerParams& p = params_[i];
    LayerParams& gp = grads.layers[i];
    const Tensor4& x = cache.inputs[i];
    const bool need_dx = i > 0 || !saves_[i].empty();
    Tensor4 dx;
    switch (l.kind) {
      case LayerKind::kConv2d:
        layers::conv2d_backward<float>(x, p.weight, l.conv, g, need_dx ? &dx : nullptr,
                                       gp.weight, gp.bias,
                                       i < static_cast<int>(cache.columns.size()) ? &cache.columns[i] : nullptr);
        break;
      case LayerKind::kBatchNorm:
        layers::batchnorm_backward<float>(g, p.weight, cache.bn[i], dx, gp.weight, gp.bias);
        break;
      case LayerKind::kRelu:
        layers::relu_backward(x, g, dx);
        break;
      case LayerKind::kMaxPool:
        layers::maxpool_backward(g, cache.argmax[i], x.shape(), dx);
        break;
      case LayerKind::kDense:
        layers::dense_backward<float>(x, p.weight, g, need_dx ? &dx : nullptr, gp.weight,
                                      gp.bias);
        if (need_dx) dx.reshape(x.shape());
        break;
      case LayerKind::kSoftmaxXent:
        dx = g;
        break;
    }
    for (int e : saves_[i]) {
      if (!spec_.skip_edges[e].projection) {
        add_into(dx, pending[e]);
        continue;
      }
      const ShortcutParams& sp = shortcuts_[e];
      ShortcutParams& gs = grads.shortcuts[e];
      Tensor4 dconv;
      Tensor4 dsaved;
      layers::batchnorm_backward<float>(pending[e], sp.gamma, cache.shortcut_bn[e], dconv,
                                        gs.gamma, gs.beta);
      layers::conv2d_backward<float>(x, sp.weight, shortcut_conv(topo_.shortcuts[e]), dconv,
                                     &dsaved, gs.weight, {});
      add_into(dx, dsaved);
    }
    g = std::move(dx);
  }
}

void Network::update_running_stats(const ForwardCache& cache) {
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    if (spec_.layers[i].kind != LayerKind::kBatchNorm || frozen_.contains(static_cast<int>(i))) {
      continue;
    }
    const Shape4 s = cache.inputs[i].shape();
    fold_stats(params_[i].running_mean, params_[i].running_var, cache.bn_mean[i],
               cache.bn_var[i], static_cast<std::size_t>(s.n) * s.h * s.w);
  }
  for (std::size_t e = 0; e < shortcuts_.size(); ++e) {
    if (!spec_.skip_edges[e].projection) continue;
    const Shape4 s = cache.shortcut_conv[e].shape();
    fold_stats(shortcuts_[e].running_mean, shortcuts_[e].running_var, cache.shortcut_mean[e],
               cache.shortcut_var[e], static_cast<std::size_t>(s.n) * s.h * s.w);
  }
}

}  // namespace sensprune
