#include "sensprune/train.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sensprune/errors.h"
#include "sensprune/layers.h"
#include "sensprune/rng.h"

namespace sensprune {

namespace {

Tensor4 gather(const Tensor4& images, std::span<const int> indices) {
  const Shape4 s = images.shape();
  Tensor4 out({static_cast<int>(indices.size()), s.c, s.h, s.w});
  const std::size_t per = s.per_sample();
  for (std::size_t j = 0; j < indices.size(); ++j) {
    std::copy_n(images.raw() + indices[j] * per, per, out.raw() + j * per);
  }
  return out;
}

void sgd_step(std::vector<float>& param, std::vector<float>& velocity,
              const std::vector<float>& grad, float lr, float momentum, float decay) {
  for (std::size_t k = 0; k < param.size(); ++k) {
    velocity[k] = momentum * velocity[k] + grad[k] + decay * param[k];
    param[k] -= lr * velocity[k];
  }
}

bool params_finite(const Network& net) {
  auto finite = [](const std::vector<float>& v) {
    return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
  };
  for (const auto& p : net.params()) {
    if (!finite(p.weight) || !finite(p.bias)) return false;
  }
  for (const auto& s : net.shortcut_params()) {
    if (!finite(s.weight) || !finite(s.gamma) || !finite(s.beta)) return false;
  }
  return true;
}

}  // namespace

void DatasetSplit::validate() const {
  if (images.shape().n != size()) {
    throw ConfigError("dataset has " + std::to_string(images.shape().n) + " images but " +
                      std::to_string(size()) + " labels");
  }
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw ConfigError("label " + std::to_string(y) + " outside [0," +
                        std::to_string(num_classes) + ")");
    }
  }
}

DatasetSplit DatasetSplit::select(std::span<const int> indices) const {
  DatasetSplit out;
  out.images = gather(images, indices);
  out.num_classes = num_classes;
  out.labels.reserve(indices.size());
  for (int i : indices) out.labels.push_back(labels.at(i));
  return out;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (lr_schedule.empty() || lr_schedule.front().epoch_start != 0) {
    throw ConfigError("lr_schedule must start at epoch 0");
  }
  for (std::size_t i = 1; i < lr_schedule.size(); ++i) {
    if (lr_schedule[i].epoch_start <= lr_schedule[i - 1].epoch_start) {
      throw ConfigError("lr_schedule epochs must be strictly increasing");
    }
  }
  for (const auto& s : lr_schedule) {
    if (!(s.lr > 0.0f) || !std::isfinite(s.lr)) {
      throw ConfigError("learning rates must be positive and finite");
    }
  }
  if (!(momentum >= 0.0f && momentum < 1.0f)) throw ConfigError("momentum must be in [0,1)");
  if (!(weight_decay >= 0.0f)) throw ConfigError("weight_decay must be non-negative");
}

float TrainConfig::lr_at(int epoch) const {
  float lr = lr_schedule.front().lr;
  for (const auto& s : lr_schedule) {
    if (s.epoch_start <= epoch) lr = s.lr;
  }
  return lr;
}

std::vector<EpochLog> train(Network& net, const DatasetSplit& data, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  if (data.size() == 0) throw ConfigError("cannot train on an empty dataset");
  std::vector<EpochLog> log;
  if (cfg.epochs == 0) return log;

  Gradients grads = net.make_gradients();
  Gradients velocity = net.make_gradients();
  std::vector<int> order(data.size());
  ForwardCache cache;
  Tensor4 dlogits;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const float lr = cfg.lr_at(epoch);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(epoch)}));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    double correct = 0.0;
    for (int start = 0; start < data.size(); start += cfg.batch_size) {
      const int count = std::min(cfg.batch_size, data.size() - start);
      std::span<const int> idx(order.data() + start, count);
      const Tensor4 batch = gather(data.images, idx);
      std::vector<int> labels(count);
      for (int j = 0; j < count; ++j) labels[j] = data.labels[idx[j]];

      const Tensor4 logits = net.forward(batch, true, &cache);
      const double loss = layers::softmax_xent<float>(logits, labels, &dlogits);
      if (!std::isfinite(loss)) throw TrainingError("loss became non-finite", epoch);
      loss_sum += loss * count;
      correct += accuracy_from_logits(logits, labels) * count;

      grads.zero();
      net.backward(cache, dlogits, grads);
      net.update_running_stats(cache);
      auto& params = net.params();
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (net.is_frozen(static_cast<int>(i))) continue;
        const bool decays = net.spec().layers[i].kind != LayerKind::kBatchNorm;
        sgd_step(params[i].weight, velocity.layers[i].weight, grads.layers[i].weight, lr,
                 cfg.momentum, decays ? cfg.weight_decay : 0.0f);
        sgd_step(params[i].bias, velocity.layers[i].bias, grads.layers[i].bias, lr,
                 cfg.momentum, 0.0f);
      }
      auto& shortcuts = net.shortcut_params();
      for (std::size_t e = 0; e < shortcuts.size(); ++e) {
        sgd_step(shortcuts[e].weight, velocity.shortcuts[e].weight, grads.shortcuts[e].weight,
                 lr, cfg.momentum, cfg.weight_decay);
        sgd_step(shortcuts[e].gamma, velocity.shortcuts[e].gamma, grads.shortcuts[e].gamma, lr,
                 cfg.momentum, 0.0f);
        sgd_step(shortcuts[e].beta, velocity.shortcuts[e].beta, grads.shortcuts[e].beta, lr,
                 cfg.momentum, 0.0f);
      }
    }
    if (!params_finite(net)) throw TrainingError("parameters became non-finite", epoch);
    log.push_back({epoch, lr, loss_sum / data.size(), correct / data.size()});
  }
  return log;
}

double evaluate(const Network& net, const DatasetSplit& data, int batch_size) {
  data.validate();
  if (data.size() == 0) throw ConfigError("cannot evaluate on an empty dataset");
  std::vector<int> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  double correct = 0.0;
  for (int start = 0; start < data.size(); start += batch_size) {
    const int count = std::min(batch_size, data.size() - start);
    std::span<const int> part(idx.data() + start, count);
    const Tensor4 logits = net.predict(gather(data.images, part));
    correct += accuracy_from_logits(logits, std::span<const int>(data.labels).subspan(start, count)) *
               count;
  }
  return correct / data.size();
}

double accuracy_from_logits(const Tensor4& logits, std::span<const int> labels) {
  const int n = logits.shape().n;
  const int k = logits.shape().c * logits.shape().h * logits.shape().w;
  if (static_cast<int>(labels.size()) != n) {
    throw ConfigError("label count does not match logits batch");
  }
  if (n == 0) return 0.0;
  int correct = 0;
  for (int i = 0; i < n; ++i) {
    const float* row = logits.raw() + static_cast<std::size_t>(i) * k;
    const int best = static_cast<int>(std::max_element(row, row + k) - row);
    if (best == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / n;
}

}  // namespace sensprune
