#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include <json.hpp>

#include "sensprune/config.h"
#include "sensprune/datasets.h"
#include "sensprune/network.h"
#include "sensprune/planner.h"
#include "sensprune/sensitivity.h"

namespace sensprune {

// File names written under ExperimentConfig::output_dir.
namespace artifacts {
inline constexpr char kBaseCheckpoint[] = "base.ckpt";
inline constexpr char kTrainLog[] = "train_log.json";
inline constexpr char kSensitivity[] = "sensitivity.json";
inline constexpr char kRoundRecord[] = "round_record.json";
inline constexpr char kCurves[] = "curves.csv";
inline constexpr char kGroups[] = "groups.json";
inline constexpr char kIterations[] = "iterations.jsonl";
inline constexpr char kSummary[] = "summary.csv";
inline constexpr char kMask[] = "mask.json";
inline constexpr char kPrunedCheckpoint[] = "pruned.ckpt";
inline constexpr char kReport[] = "report.json";
inline constexpr char kConfig[] = "config.yaml";
// Wall-clock timestamps live here so every other file is reproducible.
inline constexpr char kMetadata[] = "metadata.json";
}  // namespace artifacts

// Stage seeds derived from the master seed.
enum class Stage : std::uint64_t { kInit = 1, kTrain = 2, kHierarchy = 3, kPrune = 4 };
std::uint64_t stage_seed(const ExperimentConfig& cfg, Stage stage);

using Progress = std::function<void(const std::string&)>;

// Loads the configured dataset and checks it against the model input shape.
Dataset load_dataset(const ExperimentConfig& cfg);

// Stage functions. Each writes its artifacts into cfg.output_dir as soon as
// it finishes, so a later failure leaves earlier results on disk. Errors keep
// their type and gain the stage name as a prefix.
Network run_train_stage(const ExperimentConfig& cfg, const Dataset& data,
                        const Progress& progress = {});
HierarchyResult run_sensitivity_stage(const ExperimentConfig& cfg, const Dataset& data,
                                      const Network& base, const Progress& progress = {});
GroupAssignment run_group_stage(const ExperimentConfig& cfg, const SensitivityReport& report);
PruneResult run_prune_stage(const ExperimentConfig& cfg, const Dataset& data,
                            const Network& base, const GroupAssignment& groups,
                            const Progress& progress = {});
// Collects the artifacts present in output_dir into report.json.
nlohmann::json run_report_stage(const ExperimentConfig& cfg);

// train -> sensitivity -> group -> prune -> report.
nlohmann::json run_pipeline(const ExperimentConfig& cfg, const Progress& progress = {});

// JSON / text file helpers used by the stages and the CLI.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace sensprune
