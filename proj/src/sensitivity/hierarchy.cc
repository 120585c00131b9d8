#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "sensprune/errors.h"
#include "sensprune/rng.h"
#include "sensprune/sensitivity.h"
#include "sensprune/surgery.h"

namespace sensprune {

namespace {

// Seed tags within a (layer, round) stream.
constexpr std::uint64_t kSelectTag = 0;
constexpr std::uint64_t kTrainTag = 1;

std::string context(int layer, int round) {
  return "layer " + std::to_string(layer) + ", round " + std::to_string(round) + ", ";
}

template <typename Fn>
auto with_ratio(double ratio, Fn&& fn) {
  const std::string where = "ratio " + std::to_string(ratio) + ": ";
  try {
    return fn();
  } catch (const TrainingError& e) {
    throw TrainingError(where + e.what(), e.epoch());
  } catch (const ConstraintError& e) {
    throw ConstraintError(where + e.what());
  }
}

std::string layer_name(const ModelSpec& spec, int layer) {
  const auto& n = spec.layers[layer].name;
  return n.empty() ? "L" + std::to_string(layer) : n;
}

}  // namespace

Reliability measure_reliability(const Network& net, int layer, const DatasetSplit& train,
                                const DatasetSplit& eval, double p_o,
                                const HierarchyConfig& cfg, std::uint64_t round_seed) {
  Network sabotaged = freeze_layer(net, layer);
  TrainConfig tc = cfg.retrain;
  tc.epochs = cfg.reliability_epochs;
  tc.lr_schedule = {{0, cfg.retrain.final_lr()}};
  tc.seed = derive_seed(round_seed, {0, kTrainTag});
  sensprune::train(sabotaged, train, tc);
  const double p0 = evaluate(sabotaged, eval);
  return {p0, p0 - p_o};
}

std::vector<double> measure_stability_curve(const Network& net, int layer,
                                            const DatasetSplit& train, const DatasetSplit& eval,
                                            const HierarchyConfig& cfg,
                                            std::uint64_t round_seed) {
  const std::vector<double> ratios = ratio_set(cfg);
  const int n_filters = filter_count(net.spec(), layer);
  std::vector<double> curve;
  curve.reserve(ratios.size());
  curve.push_back(with_ratio(0.0, [&] {
    return measure_reliability(net, layer, train, eval, 0.0, cfg, round_seed).p0;
  }));

  Network pruned = net;
  int removed = 0;
  for (std::size_t i = 1; i < ratios.size(); ++i) {
    curve.push_back(with_ratio(ratios[i], [&] {
      const int target = filters_for_ratio(ratios[i], n_filters);
      const int step = target - removed;
      if (step > 0) {
        SelectionStrategy pick{SelectionKind::kRandom, derive_seed(round_seed, {i, kSelectTag})};
        pruned = remove_filters(pruned, layer, select_filters(pruned, layer, step, pick));
        removed = target;
      }
      TrainConfig tc = cfg.retrain;
      tc.epochs = cfg.retrain_epochs_struct;
      tc.seed = derive_seed(round_seed, {i, kTrainTag});
      sensprune::train(pruned, train, tc);
      return evaluate(pruned, eval);
    }));
  }
  return curve;
}

HierarchyResult run_hierarchy(const Network& net, const DatasetSplit& train,
                              const DatasetSplit& eval, const HierarchyConfig& cfg,
                              std::uint64_t master_seed, const HierarchyOptions& options) {
  cfg.validate();
  const ModelSpec& spec = net.spec();
  const std::vector<int>& prunable = spec.prunable;
  if (prunable.empty()) throw ConfigError("model '" + spec.name + "' has no prunable layers");

  std::vector<int> order = options.layer_order;
  if (order.empty()) {
    order = prunable;
  } else {
    std::vector<int> a = order, b = prunable;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) throw ConfigError("layer_order must be a permutation of the prunable layers");
  }

  RoundRecord record;
  record.layers = prunable;
  for (int p : prunable) record.names.push_back(layer_name(spec, p));
  record.ratios = ratio_set(cfg);
  record.p_o = evaluate(net, eval);
  record.accuracy.assign(prunable.size(), std::vector<std::vector<double>>(cfg.rounds));

  struct Job {
    int slot;   // position in record.layers
    int layer;  // spec index
    int round;
  };
  std::vector<Job> jobs;
  for (int layer : order) {
    const int slot = static_cast<int>(std::find(prunable.begin(), prunable.end(), layer) -
                                      prunable.begin());
    for (int m = 0; m < cfg.rounds; ++m) jobs.push_back({slot, layer, m});
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mu;
  auto worker = [&]() {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size() || failed.load()) return;
      const Job& job = jobs[j];
      const std::uint64_t round_seed = derive_seed(
          master_seed, {static_cast<std::uint64_t>(job.layer), static_cast<std::uint64_t>(job.round)});
      try {
        auto curve = measure_stability_curve(net, job.layer, train, eval, cfg, round_seed);
        record.accuracy[job.slot][job.round] = std::move(curve);
        if (options.progress) {
          std::lock_guard lock(mu);
          options.progress("hierarchy: " + record.names[job.slot] + " round " +
                           std::to_string(job.round + 1) + "/" + std::to_string(cfg.rounds) +
                           " done");
        }
      } catch (const TrainingError& e) {
        std::lock_guard lock(mu);
        if (!failed.exchange(true)) {
          error = std::make_exception_ptr(
              TrainingError(context(job.layer, job.round) + e.what(), e.epoch()));
        }
      } catch (const ConstraintError& e) {
        std::lock_guard lock(mu);
        if (!failed.exchange(true)) {
          error = std::make_exception_ptr(
              ConstraintError(context(job.layer, job.round) + e.what()));
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
  };

  const int width = std::max(1, std::min<int>(options.workers, static_cast<int>(jobs.size())));
  if (width == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < width; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  HierarchyResult result;
  result.report = aggregate(record, cfg);
  result.record = std::move(record);
  return result;
}

}  // namespace sensprune
