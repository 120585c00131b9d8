#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sensprune/network.h"
#include "sensprune/sensitivity.h"
#include "sensprune/surgery.h"
#include "sensprune/train.h"

namespace sensprune {

// Layers partitioned by sensitiveness, least sensitive group first.
struct GroupAssignment {
  std::vector<std::vector<int>> groups;  // layer indices, ascending within a group
  std::vector<double> mean_scores;

  int size() const { return static_cast<int>(groups.size()); }
  friend bool operator==(const GroupAssignment&, const GroupAssignment&) = default;
};

// Sorts scores descending and starts a new group wherever consecutive scores
// differ by more than threshold_frac * (max - min). Throws ConfigError unless
// 0 < threshold_frac < 1 and the report is non-empty.
GroupAssignment group_layers(const SensitivityReport& report, double threshold_frac);

// Removed filters over all prunable filters of the unpruned spec.
double overall_ratio(const PruneMask& mask, const ModelSpec& original);

struct PlannerConfig {
  double threshold_frac = 0.20;
  double initial_ratio = 0.10;
  double ratio_step = 0.05;
  double target_overall = 0.5;
  // When set, an iteration is also rejected if its accuracy falls more than
  // this far below the unpruned baseline. Unset follows the per-group best
  // rule alone.
  std::optional<double> baseline_tolerance;
  SelectionKind selection = SelectionKind::kRandom;
  TrainConfig retrain;  // epochs per iteration; seeds are derived per step

  void validate() const;
  friend bool operator==(const PlannerConfig&, const PlannerConfig&) = default;
};

enum class Decision { kAccept, kAdvance };
const char* to_string(Decision d);

struct IterationRecord {
  int iteration = 0;
  int group = 0;
  double ratio = 0.0;  // ratio tried for `group`
  std::vector<double> group_ratios;  // accepted ratio of every group afterwards
  double accuracy = 0.0;  // P_r
  double best = 0.0;      // P_r^best after the decision
  Decision decision = Decision::kAccept;
  double overall_ratio = 0.0;  // of the state kept after the decision
  std::int64_t params = 0;
};

struct GroupOutcome {
  std::vector<int> layers;
  double final_ratio = 0.0;
  std::int64_t filters_removed = 0;
  std::int64_t params = 0;
  std::int64_t macs = 0;
  double accuracy = 0.0;
};

struct PruneResult {
  Network net;
  PruneMask mask;
  std::vector<IterationRecord> log;
  std::vector<GroupOutcome> groups;
  double baseline_accuracy = 0.0;
  double final_accuracy = 0.0;
  bool target_reached = false;
};

// Group-wise prune / retrain / accept loop, least sensitive group first.
// Each iteration extends the group's mask to the tried ratio, retrains all
// layers and evaluates. Acceptance needs P_r > P_r^best (reset to 0 per
// group); a rejection restores the last accepted network and moves to the
// next group. Stops after the last group or once the accepted mask reaches
// target_overall; `target_reached` reports which.
PruneResult iterative_prune(const Network& net, const GroupAssignment& groups,
                            const DatasetSplit& train, const DatasetSplit& eval,
                            const PlannerConfig& cfg, std::uint64_t seed,
                            const std::function<void(const std::string&)>& progress = {});

nlohmann::json to_json(const GroupAssignment& g);
GroupAssignment group_assignment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const IterationRecord& r);
// One JSON object per line.
std::string iterations_jsonl(const std::vector<IterationRecord>& log);
// Columns: group, layers, final_ratio, filters_removed, params, macs, accuracy.
// A "base" row for the unpruned network precedes one row per group.
std::string summary_csv(const PruneResult& result, const Network& base);

}  // namespace sensprune
