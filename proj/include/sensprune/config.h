#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "sensprune/model_spec.h"
#include "sensprune/planner.h"
#include "sensprune/sensitivity.h"
#include "sensprune/train.h"

namespace sensprune {

enum class DatasetKind { kMnist, kCifar10, kCifar100 };
const char* to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(const std::string& name);

struct DatasetConfig {
  DatasetKind kind = DatasetKind::kMnist;
  std::filesystem::path path;
  int train_subset = 0;  // 0 keeps every sample
  int test_subset = 0;
  friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

// Everything a run needs. Per-stage seeds are derived from `seed`, so the
// seed fields inside the nested TrainConfigs are ignored.
struct ExperimentConfig {
  std::string model;               // zoo name; empty when `spec` is set
  std::optional<ModelSpec> spec;  // inline topology
  int model_divisor = 0;           // mini variants only; 0 selects the default
  DatasetConfig dataset;
  TrainConfig train;
  HierarchyConfig hierarchy;
  PlannerConfig planner;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  int workers = 1;

  // Zoo model or inline spec, validated by assembly.
  ModelSpec model_spec() const;
  // Throws ConfigError on any invalid field. Does not touch the filesystem.
  void validate() const;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Parses YAML text. Unknown keys, wrong types and invalid values throw
// ConfigError naming the key and its line:column. Relative dataset and
// output paths are resolved against `base_dir`.
ExperimentConfig parse_config(const std::string& text,
                              const std::filesystem::path& base_dir = {});

// Reads a config file, resolving relative paths against its directory, and
// checks that the dataset directory exists.
ExperimentConfig load_config(const std::filesystem::path& path);

// YAML text that parse_config maps back to an equal config.
std::string dump_config(const ExperimentConfig& cfg);

}  // namespace sensprune
