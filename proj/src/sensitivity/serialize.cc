#include <iomanip>
#include <sstream>

#include "sensprune/errors.h"
#include "sensprune/sensitivity.h"

namespace sensprune {

namespace {

void check_schema(const nlohmann::json& j, const char* what) {
  if (!j.is_object() || j.value("schema_version", -1) != kReportSchemaVersion) {
    throw ConfigError(std::string(what) + ": missing or unsupported schema_version");
  }
}

template <typename Fn>
auto parse_guard(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

nlohmann::json to_json(const RoundRecord& record) {
  return {{"schema_version", kReportSchemaVersion},
          {"kind", "round_record"},
          {"p_o", record.p_o},
          {"layers", record.layers},
          {"names", record.names},
          {"ratios", record.ratios},
          {"accuracy", record.accuracy}};
}

RoundRecord round_record_from_json(const nlohmann::json& j) {
  check_schema(j, "round record");
  return parse_guard("round record", [&] {
    RoundRecord r;
    r.p_o = j.at("p_o").get<double>();
    r.layers = j.at("layers").get<std::vector<int>>();
    r.names = j.at("names").get<std::vector<std::string>>();
    r.ratios = j.at("ratios").get<std::vector<double>>();
    r.accuracy = j.at("accuracy").get<std::vector<std::vector<std::vector<double>>>>();
    if (r.accuracy.size() != r.layers.size()) {
      throw ConfigError("round record: accuracy grid does not match layer list");
    }
    return r;
  });
}

nlohmann::json to_json(const SensitivityReport& report) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : report.layers) {
    layers.push_back({{"layer", l.layer},
                      {"name", l.name},
                      {"fr", l.fr},
                      {"fs", l.fs},
                      {"s", l.s},
                      {"flattest_round", l.flattest},
                      {"rounds_kept", l.rounds_kept()},
                      {"kept_rounds", l.kept_rounds},
                      {"round_scores", l.round_scores}});
  }
  return {{"schema_version", kReportSchemaVersion},
          {"kind", "sensitivity_report"},
          {"p_o", report.p_o},
          {"gamma", report.gamma},
          {"layers", layers}};
}

SensitivityReport sensitivity_report_from_json(const nlohmann::json& j) {
  check_schema(j, "sensitivity report");
  return parse_guard("sensitivity report", [&] {
    SensitivityReport r;
    r.p_o = j.at("p_o").get<double>();
    r.gamma = j.at("gamma").get<double>();
    for (const auto& l : j.at("layers")) {
      LayerSensitivity ls;
      ls.layer = l.at("layer").get<int>();
      ls.name = l.at("name").get<std::string>();
      ls.fr = l.at("fr").get<double>();
      ls.fs = l.at("fs").get<double>();
      ls.s = l.at("s").get<double>();
      ls.flattest = l.at("flattest_round").get<int>();
      ls.kept_rounds = l.at("kept_rounds").get<std::vector<int>>();
      ls.round_scores = l.at("round_scores").get<std::vector<double>>();
      r.layers.push_back(std::move(ls));
    }
    return r;
  });
}

std::string curves_csv(const RoundRecord& record) {
  std::ostringstream out;
  out << "layer,round,ratio,accuracy\n";
  out << std::setprecision(17);
  for (std::size_t l = 0; l < record.layers.size(); ++l) {
    const std::string& name =
        l < record.names.size() ? record.names[l] : std::to_string(record.layers[l]);
    for (std::size_t m = 0; m < record.accuracy[l].size(); ++m) {
      const auto& curve = record.accuracy[l][m];
      for (std::size_t i = 0; i < curve.size(); ++i) {
        out << name << ',' << m << ',' << record.ratios.at(i) << ',' << curve[i] << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace sensprune
