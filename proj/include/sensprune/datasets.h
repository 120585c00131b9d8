#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "sensprune/train.h"

namespace sensprune {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr std::size_t kCifarPixels = 3 * 32 * 32;

// Raw 8-bit images, sample-major, each sample channels*rows*cols bytes.
struct RawImages {
  int count = 0;
  int channels = 1;
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> pixels;
  friend bool operator==(const RawImages&, const RawImages&) = default;
};

// IDX files. Readers throw FormatError with the byte offset of the first
// inconsistency (bad magic, truncation, trailing bytes).
RawImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);
void write_idx_images(const std::filesystem::path& path, const RawImages& images);
void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels);

// CIFAR binary batch: records of label byte(s) followed by 3072 pixels.
// CIFAR-100 records carry (coarse, fine); the fine label is returned.
struct RawCifar {
  RawImages images;
  std::vector<std::uint8_t> labels;
  std::vector<std::uint8_t> coarse;  // CIFAR-100 only
};
RawCifar read_cifar_batch(const std::filesystem::path& path, int variant);
void write_cifar_batch(const std::filesystem::path& path, const RawCifar& batch, int variant);

// Per-channel statistics of [0,1]-scaled training pixels.
struct Normalization {
  std::vector<double> mean;
  std::vector<double> stddev;
};
nlohmann::json to_json(const Normalization& n);

struct Dataset {
  DatasetSplit train;
  DatasetSplit test;
  Normalization normalization;
};

// First count/num_classes samples of each class in file order (the
// remainder goes to the lowest classes). count <= 0 or count >= size keeps
// every sample. Throws ConfigError when a class has too few samples.
std::vector<int> stratified_subset(const std::vector<std::uint8_t>& labels, int count,
                                   int num_classes);

// Expects train-images-idx3-ubyte, train-labels-idx1-ubyte,
// t10k-images-idx3-ubyte and t10k-labels-idx1-ubyte under `dir`.
Dataset load_mnist(const std::filesystem::path& dir, int train_subset = 0, int test_subset = 0);

// CIFAR-10: data_batch_1..5.bin and test_batch.bin.
// CIFAR-100: train.bin and test.bin.
Dataset load_cifar(const std::filesystem::path& dir, int variant, int train_subset = 0,
                   int test_subset = 0);

// Scales to [0,1] and normalizes with the given statistics.
DatasetSplit to_split(const RawImages& images, const std::vector<std::uint8_t>& labels,
                      int num_classes, const Normalization& norm);
Normalization compute_normalization(const RawImages& images);

}  // namespace sensprune
