#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sensprune/network.h"
#include "sensprune/train.h"

namespace sensprune {

struct HierarchyConfig {
  double r_max = 0.96;
  int samples = 4;   // T: nonzero ratio steps per round
  int rounds = 10;   // N
  double lambda = 10.0;
  double gamma = 2.0 / 3.0;
  double rho_min = 0.6;
  int retrain_epochs_struct = 3;
  int reliability_epochs = 1;
  // Learning-rate schedule, momentum and batch size used by every retrain.
  // Epoch counts and seeds are set per step.
  TrainConfig retrain;

  // Throws ConfigError unless 0<gamma<1, lambda>0, T>=1, N>=1, 0<R_max<1.
  void validate() const;
  friend bool operator==(const HierarchyConfig&, const HierarchyConfig&) = default;
};

// T+1 ratios from 0 to R_max in steps of R_max/T.
std::vector<double> ratio_set(const HierarchyConfig& cfg);

struct Reliability {
  double p0 = 0.0;
  double fr = 0.0;
};

// Clones `net`, freezes `layer`, retrains reliability_epochs at the retrain
// schedule's final learning rate and evaluates. fr = P_0 - P_O.
Reliability measure_reliability(const Network& net, int layer, const DatasetSplit& train,
                                const DatasetSplit& eval, double p_o,
                                const HierarchyConfig& cfg, std::uint64_t round_seed);

// Accuracy after each ratio in ratio_set(cfg). Entry 0 is the reliability
// sample; entry i removes the increment towards filters_for_ratio(r_i, N_l)
// at random from the previous step's pruned clone, retrains and evaluates.
// Step i draws its seeds from (round_seed, i).
std::vector<double> measure_stability_curve(const Network& net, int layer,
                                            const DatasetSplit& train, const DatasetSplit& eval,
                                            const HierarchyConfig& cfg,
                                            std::uint64_t round_seed);

// fs = (P_0 - P_max) / (lambda * R_max)
double stability(double p0, double p_max, const HierarchyConfig& cfg);
// S = gamma * fr + (1 - gamma) * fs; throws ConfigError unless 0<gamma<1.
double sensitiveness(double fr, double fs, double gamma);

// Population variance (mean squared deviation).
double round_variance(std::span<const double> curve);
// Sample Pearson correlation; 0 when either input is constant. Throws
// InputError on a length mismatch or fewer than two samples.
double pearson(std::span<const double> a, std::span<const double> b);
// Pearson correlation of average ranks.
double spearman(std::span<const double> a, std::span<const double> b);

// accuracy[l][m][i]: prunable layer l (spec order), round m, ratio step i.
struct RoundRecord {
  std::vector<int> layers;
  std::vector<std::string> names;
  std::vector<double> ratios;
  double p_o = 0.0;
  std::vector<std::vector<std::vector<double>>> accuracy;

  double p0(int l, int m) const { return accuracy[l][m].front(); }
  double p_max(int l, int m) const { return accuracy[l][m].back(); }
  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

// Index of the round with the smallest curve variance; ties to the lowest.
int flattest_round(const RoundRecord& record, int l);

struct LayerSensitivity {
  int layer = 0;
  std::string name;
  double fr = 0.0;
  double fs = 0.0;
  double s = 0.0;
  int flattest = 0;
  std::vector<int> kept_rounds;
  std::vector<double> round_scores;  // S_l^m for every round
  int rounds_kept() const { return static_cast<int>(kept_rounds.size()); }
  friend bool operator==(const LayerSensitivity&, const LayerSensitivity&) = default;
};

struct SensitivityReport {
  double p_o = 0.0;
  double gamma = 2.0 / 3.0;
  std::vector<LayerSensitivity> layers;
  std::vector<double> scores() const;
  friend bool operator==(const SensitivityReport&, const SensitivityReport&) = default;
};

// Keeps, per layer, the rounds whose curve correlates with the flattest
// round's curve above rho_min (the flattest round always stays), then stores
// the kept-round means of fr and fs and S = gamma*fr + (1-gamma)*fs.
SensitivityReport aggregate(const RoundRecord& record, const HierarchyConfig& cfg);

struct HierarchyOptions {
  // Order in which layer jobs are dispatched; empty means spec order.
  std::vector<int> layer_order;
  int workers = 1;
  std::function<void(const std::string&)> progress;
};

struct HierarchyResult {
  RoundRecord record;
  SensitivityReport report;
};

// Algorithm over every prunable layer and round. (layer, round) jobs run on
// `workers` threads against independent clones; results are identical to a
// serial run because every seed is derived from (master_seed, l, m, i).
HierarchyResult run_hierarchy(const Network& net, const DatasetSplit& train,
                              const DatasetSplit& eval, const HierarchyConfig& cfg,
                              std::uint64_t master_seed, const HierarchyOptions& options = {});

inline constexpr int kReportSchemaVersion = 1;

nlohmann::json to_json(const RoundRecord& record);
RoundRecord round_record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SensitivityReport& report);
SensitivityReport sensitivity_report_from_json(const nlohmann::json& j);
// Columns: layer, round, ratio, accuracy.
std::string curves_csv(const RoundRecord& record);

}  // namespace sensprune
