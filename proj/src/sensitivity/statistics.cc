#include <algorithm>
#include <cmath>
#include <numeric>

#include "sensprune/errors.h"
#include "sensprune/sensitivity.h"

namespace sensprune {

void HierarchyConfig::validate() const {
  if (!(r_max > 0.0 && r_max < 1.0)) throw ConfigError("r_max must lie in (0,1)");
  if (samples < 1) throw ConfigError("samples (T) must be at least 1");
  if (rounds < 1) throw ConfigError("rounds (N) must be at least 1");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0,1)");
  if (!(rho_min >= -1.0 && rho_min <= 1.0)) throw ConfigError("rho_min must lie in [-1,1]");
  if (retrain_epochs_struct < 0 || reliability_epochs < 0) {
    throw ConfigError("retrain epoch counts must be non-negative");
  }
  retrain.validate();
}

std::vector<double> ratio_set(const HierarchyConfig& cfg) {
  cfg.validate();
  std::vector<double> r(cfg.samples + 1);
  for (int i = 0; i <= cfg.samples; ++i) r[i] = cfg.r_max * i / cfg.samples;
  return r;
}

double stability(double p0, double p_max, const HierarchyConfig& cfg) {
  if (!(cfg.lambda > 0.0) || !(cfg.r_max > 0.0)) {
    throw ConfigError("stability needs lambda > 0 and r_max > 0");
  }
  return (p0 - p_max) / (cfg.lambda * cfg.r_max);
}

double sensitiveness(double fr, double fs, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0,1)");
  return gamma * fr + (1.0 - gamma) * fs;
}

double round_variance(std::span<const double> curve) {
  if (curve.empty()) return 0.0;
  const double mean = std::accumulate(curve.begin(), curve.end(), 0.0) / curve.size();
  double sq = 0.0;
  for (double v : curve) sq += (v - mean) * (v - mean);
  return sq / curve.size();
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InputError("pearson: length mismatch (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
  if (a.size() < 2) throw InputError("pearson: need at least two samples");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&v](int x, int y) { return v[x] < v[y]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + j) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
    i = j + 1;
  }
  return rank;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("spearman: length mismatch");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson(ra, rb);
}

int flattest_round(const RoundRecord& record, int l) {
  const auto& rounds = record.accuracy.at(l);
  if (rounds.empty()) throw InputError("flattest_round: layer has no completed rounds");
  int best = 0;
  double best_var = round_variance(rounds[0]);
  for (std::size_t m = 1; m < rounds.size(); ++m) {
    const double v = round_variance(rounds[m]);
    if (v < best_var) {
      best_var = v;
      best = static_cast<int>(m);
    }
  }
  return best;
}

std::vector<double> SensitivityReport::scores() const {
  std::vector<double> s;
  s.reserve(layers.size());
  for (const auto& l : layers) s.push_back(l.s);
  return s;
}

SensitivityReport aggregate(const RoundRecord& record, const HierarchyConfig& cfg) {
  SensitivityReport report;
  report.p_o = record.p_o;
  report.gamma = cfg.gamma;
  for (std::size_t l = 0; l < record.layers.size(); ++l) {
    const auto& rounds = record.accuracy.at(l);
    LayerSensitivity ls;
    ls.layer = record.layers[l];
    ls.name = l < record.names.size() ? record.names[l] : std::string();
    ls.flattest = flattest_round(record, static_cast<int>(l));
    const auto& ref = rounds[ls.flattest];
    double fr_sum = 0.0;
    double fs_sum = 0.0;
    for (std::size_t m = 0; m < rounds.size(); ++m) {
      const double fr = rounds[m].front() - record.p_o;
      const double fs = stability(rounds[m].front(), rounds[m].back(), cfg);
      ls.round_scores.push_back(sensitiveness(fr, fs, cfg.gamma));
      const bool keep = static_cast<int>(m) == ls.flattest ||
                        (ref.size() >= 2 && pearson(rounds[m], ref) > cfg.rho_min);
      if (keep) {
        ls.kept_rounds.push_back(static_cast<int>(m));
        fr_sum += fr;
        fs_sum += fs;
      }
    }
    const double kept = static_cast<double>(ls.kept_rounds.size());
    ls.fr = fr_sum / kept;
    ls.fs = fs_sum / kept;
    ls.s = sensitiveness(ls.fr, ls.fs, cfg.gamma);
    report.layers.push_back(std::move(ls));
  }
  return report;
}

}  // namespace sensprune
