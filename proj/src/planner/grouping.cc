#include <algorithm>
#include <numeric>

#include "sensprune/errors.h"
#include "sensprune/planner.h"

namespace sensprune {

GroupAssignment group_layers(const SensitivityReport& report, double threshold_frac) {
  if (!(threshold_frac > 0.0 && threshold_frac < 1.0)) {
    throw ConfigError("threshold_frac must lie in (0,1)");
  }
  const auto& layers = report.layers;
  if (layers.empty()) throw ConfigError("cannot group an empty sensitivity report");

  std::vector<int> order(layers.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&layers](int a, int b) { return layers[a].s > layers[b].s; });
  const double span = layers[order.front()].s - layers[order.back()].s;
  const double cut = threshold_frac * span;

  // Descending runs; emitted in reverse so the least sensitive group is first.
  std::vector<std::vector<int>> runs{{order[0]}};
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (layers[order[i - 1]].s - layers[order[i]].s > cut) runs.emplace_back();
    runs.back().push_back(order[i]);
  }
  GroupAssignment g;
  for (auto it = runs.rbegin(); it != runs.rend(); ++it) {
    std::vector<int> ids;
    double sum = 0.0;
    for (int r : *it) {
      ids.push_back(layers[r].layer);
      sum += layers[r].s;
    }
    std::sort(ids.begin(), ids.end());
    g.groups.push_back(std::move(ids));
    g.mean_scores.push_back(sum / it->size());
  }
  return g;
}

double overall_ratio(const PruneMask& mask, const ModelSpec& original) {
  std::int64_t total = 0;
  for (int p : original.prunable) total += filter_count(original, p);
  if (total == 0) return 0.0;
  return static_cast<double>(mask.total_removed()) / static_cast<double>(total);
}

}  // namespace sensprune
