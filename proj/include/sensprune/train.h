#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sensprune/network.h"
#include "sensprune/tensor.h"

namespace sensprune {

struct DatasetSplit {
  Tensor4 images;
  std::vector<int> labels;
  int num_classes = 0;

  int size() const { return static_cast<int>(labels.size()); }
  // Throws ConfigError when counts disagree or a label is out of range.
  void validate() const;
  // Copies the listed samples, in order, into a new split.
  DatasetSplit select(std::span<const int> indices) const;
};

struct LrStep {
  int epoch_start = 0;
  float lr = 0.01f;
  friend bool operator==(const LrStep&, const LrStep&) = default;
};

struct TrainConfig {
  int epochs = 0;
  std::vector<LrStep> lr_schedule{{0, 0.01f}};
  float momentum = 0.9f;
  float weight_decay = 0.0f;
  int batch_size = 64;
  std::uint64_t seed = 0;

  // Throws ConfigError unless the schedule starts at epoch 0 and is strictly
  // increasing, and all sizes are positive.
  void validate() const;
  float lr_at(int epoch) const;
  float final_lr() const { return lr_schedule.back().lr; }
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EpochLog {
  int epoch = 0;
  float lr = 0.0f;
  double loss = 0.0;
  double accuracy = 0.0;
};

// Momentum SGD over shuffled mini-batches. Frozen layers keep their
// parameters and batch-norm statistics bit-identical. Each epoch's shuffle is
// drawn from a generator seeded by (cfg.seed, epoch). Throws TrainingError
// when the loss or any parameter becomes non-finite.
std::vector<EpochLog> train(Network& net, const DatasetSplit& data, const TrainConfig& cfg);

// Fraction of samples whose argmax logit equals the label.
double evaluate(const Network& net, const DatasetSplit& data, int batch_size = 256);

// Argmax ties resolve to the lowest class index.
double accuracy_from_logits(const Tensor4& logits, std::span<const int> labels);

}  // namespace sensprune
