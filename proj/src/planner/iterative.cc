#include <algorithm>
#include <set>

#include "sensprune/accounting.h"
#include "sensprune/errors.h"
#include "sensprune/planner.h"
#include "sensprune/rng.h"

namespace sensprune {

namespace {

constexpr std::uint64_t kTrainTag = 0xFFFFFFFFULL;

std::int64_t total_filters(const Network& net) {
  std::int64_t n = 0;
  for (const auto& [layer, ids] : net.filter_ids()) n += net.original_filter_count(layer);
  return n;
}

double pruned_fraction(const Network& net) {
  const std::int64_t total = total_filters(net);
  if (total == 0) return 0.0;
  return static_cast<double>(prune_mask(net).total_removed()) / static_cast<double>(total);
}

std::int64_t removed_in(const Network& net, const std::vector<int>& layers) {
  std::int64_t n = 0;
  for (int l : layers) {
    n += net.original_filter_count(l) - static_cast<std::int64_t>(net.filter_ids(l).size());
  }
  return n;
}

void check_partition(const GroupAssignment& groups, const ModelSpec& spec) {
  std::multiset<int> seen;
  for (const auto& g : groups.groups) {
    if (g.empty()) throw ConfigError("group assignment contains an empty group");
    seen.insert(g.begin(), g.end());
  }
  const std::multiset<int> expected(spec.prunable.begin(), spec.prunable.end());
  if (seen != expected) {
    throw ConfigError("groups must partition the prunable layers of '" + spec.name + "'");
  }
}

}  // namespace

const char* to_string(Decision d) { return d == Decision::kAccept ? "accept" : "advance"; }

void PlannerConfig::validate() const {
  if (!(threshold_frac > 0.0 && threshold_frac < 1.0)) {
    throw ConfigError("threshold_frac must lie in (0,1)");
  }
  if (!(initial_ratio > 0.0 && initial_ratio < 1.0)) {
    throw ConfigError("initial_ratio must lie in (0,1)");
  }
  if (!(ratio_step > 0.0 && ratio_step < 1.0)) throw ConfigError("ratio_step must lie in (0,1)");
  if (!(target_overall >= 0.0 && target_overall <= 1.0)) {
    throw ConfigError("target_overall must lie in [0,1]");
  }
  if (baseline_tolerance && !(*baseline_tolerance >= 0.0)) {
    throw ConfigError("baseline_tolerance must be non-negative");
  }
  retrain.validate();
}

PruneResult iterative_prune(const Network& net, const GroupAssignment& groups,
                            const DatasetSplit& train, const DatasetSplit& eval,
                            const PlannerConfig& cfg, std::uint64_t seed,
                            const std::function<void(const std::string&)>& progress) {
  cfg.validate();
  check_partition(groups, net.spec());
  const int n_groups = groups.size();

  PruneResult res{net, {}, {}, {}, 0.0, 0.0, false};
  res.baseline_accuracy = evaluate(net, eval);
  res.final_accuracy = res.baseline_accuracy;
  std::vector<double> accepted_ratio(n_groups, 0.0);
  std::vector<bool> visited(n_groups, false);
  std::vector<GroupOutcome> outcome(n_groups);
  Network& accepted = res.net;
  accepted.unfreeze_all();

  auto snapshot = [&](int k) {
    outcome[k] = {groups.groups[k], accepted_ratio[k], removed_in(accepted, groups.groups[k]),
                  count_params(accepted.spec()), count_macs(accepted.spec()),
                  res.final_accuracy};
  };

  res.target_reached = pruned_fraction(accepted) >= cfg.target_overall;
  int iteration = 0;
  for (int k = 0; k < n_groups && !res.target_reached; ++k) {
    visited[k] = true;
    double best = 0.0;
    for (int step = 0;; ++step) {
      const double ratio = cfg.initial_ratio + step * cfg.ratio_step;
      if (ratio >= 1.0) break;

      Network trial = accepted;
      bool changed = false;
      for (int layer : groups.groups[k]) {
        const int original = trial.original_filter_count(layer);
        const int have_removed = original - static_cast<int>(trial.filter_ids(layer).size());
        const int extra = filters_for_ratio(ratio, original) - have_removed;
        if (extra <= 0) continue;
        const SelectionStrategy pick{
            cfg.selection, derive_seed(seed, {static_cast<std::uint64_t>(iteration),
                                              static_cast<std::uint64_t>(layer)})};
        trial = remove_filters(trial, layer, select_filters(trial, layer, extra, pick));
        changed = true;
      }
      // Every layer of the group is at its minimum-survivor cap.
      if (!changed) break;

      TrainConfig tc = cfg.retrain;
      tc.seed = derive_seed(seed, {static_cast<std::uint64_t>(iteration), kTrainTag});
      sensprune::train(trial, train, tc);
      const double p = evaluate(trial, eval);

      const bool ok = p > best && (!cfg.baseline_tolerance ||
                                   p >= res.baseline_accuracy - *cfg.baseline_tolerance);
      IterationRecord rec;
      rec.iteration = iteration++;
      rec.group = k;
      rec.ratio = ratio;
      rec.accuracy = p;
      if (ok) {
        best = p;
        accepted = std::move(trial);
        accepted_ratio[k] = ratio;
        res.final_accuracy = p;
      }
      rec.decision = ok ? Decision::kAccept : Decision::kAdvance;
      rec.best = best;
      rec.group_ratios = accepted_ratio;
      rec.overall_ratio = pruned_fraction(accepted);
      rec.params = count_params(accepted.spec());
      res.log.push_back(rec);
      if (progress) {
        progress("prune: group " + std::to_string(k) + " ratio " + std::to_string(ratio) +
                 " accuracy " + std::to_string(p) + " -> " + to_string(rec.decision));
      }
      if (!ok) break;
      if (rec.overall_ratio >= cfg.target_overall) {
        res.target_reached = true;
        break;
      }
    }
    snapshot(k);
  }
  for (int k = 0; k < n_groups; ++k) {
    if (!visited[k]) snapshot(k);
  }
  res.groups = std::move(outcome);
  res.mask = prune_mask(accepted);
  return res;
}

}  // namespace sensprune
