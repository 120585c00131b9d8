#include <sstream>

#include "sensprune/accounting.h"
#include "sensprune/errors.h"
#include "sensprune/planner.h"

namespace sensprune {

nlohmann::json to_json(const GroupAssignment& g) {
  return {{"schema_version", kReportSchemaVersion},
          {"kind", "group_assignment"},
          {"groups", g.groups},
          {"mean_scores", g.mean_scores}};
}

GroupAssignment group_assignment_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("schema_version", -1) != kReportSchemaVersion) {
    throw ConfigError("group assignment: missing or unsupported schema_version");
  }
  try {
    GroupAssignment g;
    g.groups = j.at("groups").get<std::vector<std::vector<int>>>();
    g.mean_scores = j.at("mean_scores").get<std::vector<double>>();
    if (g.groups.size() != g.mean_scores.size()) {
      throw ConfigError("group assignment: groups and mean_scores differ in length");
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("group assignment: ") + e.what());
  }
}

nlohmann::json to_json(const IterationRecord& r) {
  return {{"iteration", r.iteration},         {"group", r.group},
          {"ratio", r.ratio},                 {"group_ratios", r.group_ratios},
          {"accuracy", r.accuracy},           {"best", r.best},
          {"decision", to_string(r.decision)}, {"overall_ratio", r.overall_ratio},
          {"params", r.params}};
}

std::string iterations_jsonl(const std::vector<IterationRecord>& log) {
  std::string out;
  for (const auto& r : log) out += to_json(r).dump() + "\n";
  return out;
}

std::string summary_csv(const PruneResult& result, const Network& base) {
  std::ostringstream out;
  out.precision(17);
  out << "group,layers,final_ratio,filters_removed,params,macs,accuracy\n";
  out << "base,," << 0.0 << ',' << 0 << ',' << count_params(base.spec()) << ','
      << count_macs(base.spec()) << ',' << result.baseline_accuracy << '\n';
  for (std::size_t k = 0; k < result.groups.size(); ++k) {
    const GroupOutcome& g = result.groups[k];
    out << k << ',';
    for (std::size_t i = 0; i < g.layers.size(); ++i) out << (i ? ";" : "") << g.layers[i];
    out << ',' << g.final_ratio << ',' << g.filters_removed << ',' << g.params << ','
        << g.macs << ',' << g.accuracy << '\n';
  }
  return out.str();
}

}  // namespace sensprune
