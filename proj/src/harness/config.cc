#include "sensprune/config.h"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "sensprune/errors.h"
#include "sensprune/zoo.h"

namespace sensprune {

namespace {

std::string where(const YAML::Mark& m) {
  if (m.is_null()) return "";
  return " (line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1) +
         ")";
}

[[noreturn]] void fail(const std::string& key, const std::string& msg, const YAML::Mark& m) {
  throw ConfigError("config key '" + key + "'" + where(m) + ": " + msg);
}

template <typename T>
const char* type_name() {
  if constexpr (std::is_same_v<T, bool>) return "a boolean";
  if constexpr (std::is_integral_v<T>) return "an integer";
  if constexpr (std::is_floating_point_v<T>) return "a number";
  return "a string";
}

template <typename T>
T scalar_as(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) fail(key, std::string("expected ") + type_name<T>(), node.Mark());
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(key, std::string("expected ") + type_name<T>() + ", found '" + node.Scalar() + "'",
         node.Mark());
  }
}

// Reads the keys of one mapping and rejects any it was not asked about.
class MapReader {
 public:
  MapReader(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.IsMap()) {
      throw ConfigError("config section '" + path_ + "'" + where(node_.Mark()) +
                        ": expected a mapping");
    }
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  YAML::Node child(const std::string& k) {
    seen_.insert(k);
    return node_[k];
  }

  template <typename T>
  bool get(const std::string& k, T& out) {
    const YAML::Node n = child(k);
    if (!n.IsDefined() || n.IsNull()) return false;
    out = scalar_as<T>(n, key(k));
    return true;
  }

  template <typename T>
  void require(const std::string& k, T& out) {
    if (!get(k, out)) {
      throw ConfigError("config section '" + (path_.empty() ? "<root>" : path_) + "'" +
                        where(node_.Mark()) + ": missing required key '" + k + "'");
    }
  }

  // Rejects unknown keys; call after every get().
  void finish() const {
    for (const auto& kv : node_) {
      const std::string k = kv.first.Scalar();
      if (!seen_.contains(k)) fail(key(k), "unknown key", kv.first.Mark());
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

// [[epoch_start, lr], ...]
void read_schedule(MapReader& r, std::vector<LrStep>& out) {
  const YAML::Node n = r.child("lr_schedule");
  if (!n.IsDefined() || n.IsNull()) return;
  const std::string key = r.key("lr_schedule");
  if (!n.IsSequence() || n.size() == 0) fail(key, "expected a list of [epoch, lr] pairs", n.Mark());
  out.clear();
  for (const auto& step : n) {
    if (!step.IsSequence() || step.size() != 2) {
      fail(key, "each entry must be [epoch_start, learning_rate]", step.Mark());
    }
    out.push_back({scalar_as<int>(step[0], key), scalar_as<float>(step[1], key)});
  }
}

void read_train_knobs(MapReader& r, TrainConfig& t) {
  r.get("batch_size", t.batch_size);
  r.get("momentum", t.momentum);
  r.get("weight_decay", t.weight_decay);
  read_schedule(r, t.lr_schedule);
}

// Scalars become numbers or booleans when they parse as such, unless quoted.
nlohmann::json yaml_to_json(const YAML::Node& n) {
  if (n.IsMap()) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& kv : n) j[kv.first.Scalar()] = yaml_to_json(kv.second);
    return j;
  }
  if (n.IsSequence()) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& v : n) j.push_back(yaml_to_json(v));
    return j;
  }
  if (n.IsNull()) return nullptr;
  const std::string& s = n.Scalar();
  if (n.Tag() == "!") return s;
  if (s == "true") return true;
  if (s == "false") return false;
  std::int64_t i = 0;
  if (auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), i);
      ec == std::errc() && p == s.data() + s.size()) {
    return i;
  }
  double d = 0.0;
  if (auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
      ec == std::errc() && p == s.data() + s.size()) {
    return d;
  }
  return s;
}

template <typename T>
std::string shortest(T v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void emit_json(YAML::Emitter& out, const nlohmann::json& j) {
  if (j.is_object()) {
    out << YAML::BeginMap;
    for (const auto& [k, v] : j.items()) {
      out << YAML::Key << k << YAML::Value;
      emit_json(out, v);
    }
    out << YAML::EndMap;
  } else if (j.is_array()) {
    const bool flat = std::all_of(j.begin(), j.end(), [](const auto& v) { return v.is_primitive(); });
    out << (flat ? YAML::Flow : YAML::Block) << YAML::BeginSeq;
    for (const auto& v : j) emit_json(out, v);
    out << YAML::EndSeq;
  } else if (j.is_string()) {
    out << YAML::DoubleQuoted << j.get<std::string>();
  } else if (j.is_boolean()) {
    out << (j.get<bool>() ? "true" : "false");
  } else if (j.is_number_integer()) {
    out << j.get<std::int64_t>();
  } else if (j.is_number()) {
    out << shortest(j.get<double>());
  } else {
    out << YAML::Null;
  }
}

void emit_schedule(YAML::Emitter& out, const std::vector<LrStep>& schedule) {
  out << YAML::Key << "lr_schedule" << YAML::Value << YAML::BeginSeq;
  for (const auto& s : schedule) {
    out << YAML::Flow << YAML::BeginSeq << s.epoch_start << shortest(s.lr) << YAML::EndSeq;
  }
  out << YAML::EndSeq;
}

void emit_train_knobs(YAML::Emitter& out, const TrainConfig& t) {
  out << YAML::Key << "batch_size" << YAML::Value << t.batch_size;
  out << YAML::Key << "momentum" << YAML::Value << shortest(t.momentum);
  out << YAML::Key << "weight_decay" << YAML::Value << shortest(t.weight_decay);
  emit_schedule(out, t.lr_schedule);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return (base / p).lexically_normal();
}

}  // namespace

const char* to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kMnist:
      return "mnist";
    case DatasetKind::kCifar10:
      return "cifar10";
    case DatasetKind::kCifar100:
      return "cifar100";
  }
  return "?";
}

DatasetKind dataset_kind_from_string(const std::string& name) {
  if (name == "mnist") return DatasetKind::kMnist;
  if (name == "cifar10") return DatasetKind::kCifar10;
  if (name == "cifar100") return DatasetKind::kCifar100;
  throw ConfigError("unknown dataset kind '" + name + "' (expected mnist, cifar10 or cifar100)");
}

ModelSpec ExperimentConfig::model_spec() const {
  if (spec && !model.empty()) throw ConfigError("config sets both 'model' and 'spec'");
  if (!spec && model.empty()) throw ConfigError("config needs either 'model' or 'spec'");
  ModelSpec s = spec ? *spec : build_model(model, model_divisor);
  assemble(s);
  return s;
}

void ExperimentConfig::validate() const {
  model_spec();
  if (dataset.path.empty()) throw ConfigError("dataset.path must be set");
  if (dataset.train_subset < 0 || dataset.test_subset < 0) {
    throw ConfigError("dataset subsets must be non-negative");
  }
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (output_dir.empty()) throw ConfigError("output_dir must be set");
  train.validate();
  hierarchy.validate();
  planner.validate();
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("config is not valid YAML" + where(e.mark) + ": " + e.msg);
  }
  if (!root.IsDefined() || root.IsNull()) throw ConfigError("config is empty");

  ExperimentConfig cfg;
  MapReader top(root, "");
  top.get("model", cfg.model);
  top.get("model_divisor", cfg.model_divisor);
  if (const YAML::Node s = top.child("spec"); s.IsDefined() && !s.IsNull()) {
    try {
      cfg.spec = model_spec_from_json(yaml_to_json(s));
    } catch (const ConfigError& e) {
      fail("spec", e.what(), s.Mark());
    }
  }
  top.get("seed", cfg.seed);
  top.get("workers", cfg.workers);
  std::string out_dir;
  if (top.get("output_dir", out_dir)) cfg.output_dir = out_dir;
  cfg.output_dir = resolve(base_dir, cfg.output_dir);

  const YAML::Node ds = top.child("dataset");
  if (!ds.IsDefined()) throw ConfigError("config is missing the 'dataset' section");
  {
    MapReader r(ds, "dataset");
    std::string kind = "mnist";
    r.get("kind", kind);
    try {
      cfg.dataset.kind = dataset_kind_from_string(kind);
    } catch (const ConfigError& e) {
      fail("dataset.kind", e.what(), ds["kind"].Mark());
    }
    std::string path;
    r.require("path", path);
    cfg.dataset.path = resolve(base_dir, path);
    r.get("train_subset", cfg.dataset.train_subset);
    r.get("test_subset", cfg.dataset.test_subset);
    r.finish();
  }
  if (const YAML::Node t = top.child("train"); t.IsDefined()) {
    MapReader r(t, "train");
    r.get("epochs", cfg.train.epochs);
    read_train_knobs(r, cfg.train);
    r.finish();
  }
  if (const YAML::Node h = top.child("hierarchy"); h.IsDefined()) {
    MapReader r(h, "hierarchy");
    HierarchyConfig& c = cfg.hierarchy;
    r.get("r_max", c.r_max);
    r.get("samples", c.samples);
    r.get("rounds", c.rounds);
    r.get("lambda", c.lambda);
    r.get("gamma", c.gamma);
    r.get("rho_min", c.rho_min);
    r.get("retrain_epochs_struct", c.retrain_epochs_struct);
    r.get("reliability_epochs", c.reliability_epochs);
    read_train_knobs(r, c.retrain);
    r.finish();
  }
  if (const YAML::Node p = top.child("planner"); p.IsDefined()) {
    MapReader r(p, "planner");
    PlannerConfig& c = cfg.planner;
    r.get("threshold_frac", c.threshold_frac);
    r.get("initial_ratio", c.initial_ratio);
    r.get("ratio_step", c.ratio_step);
    r.get("target_overall", c.target_overall);
    double tol = 0.0;
    if (r.get("baseline_tolerance", tol)) c.baseline_tolerance = tol;
    std::string sel;
    if (r.get("selection", sel)) {
      try {
        c.selection = selection_kind_from_string(sel);
      } catch (const ConfigError& e) {
        fail("planner.selection", e.what(), p["selection"].Mark());
      }
    }
    r.get("retrain_epochs", c.retrain.epochs);
    read_train_knobs(r, c.retrain);
    r.finish();
  }
  top.finish();

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  std::filesystem::path base = path.parent_path();
  if (base.empty()) base = ".";
  ExperimentConfig cfg = parse_config(buf.str(), std::filesystem::absolute(base));
  if (!std::filesystem::is_directory(cfg.dataset.path)) {
    throw ConfigError("dataset.path " + cfg.dataset.path.string() + " is not a directory");
  }
  return cfg;
}

std::string dump_config(const ExperimentConfig& cfg) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  if (!cfg.model.empty()) out << YAML::Key << "model" << YAML::Value << cfg.model;
  if (cfg.model_divisor != 0) {
    out << YAML::Key << "model_divisor" << YAML::Value << cfg.model_divisor;
  }
  if (cfg.spec) {
    out << YAML::Key << "spec" << YAML::Value;
    emit_json(out, to_json(*cfg.spec));
  }
  out << YAML::Key << "seed" << YAML::Value << cfg.seed;
  out << YAML::Key << "workers" << YAML::Value << cfg.workers;
  out << YAML::Key << "output_dir" << YAML::Value << cfg.output_dir.generic_string();

  out << YAML::Key << "dataset" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << to_string(cfg.dataset.kind);
  out << YAML::Key << "path" << YAML::Value << cfg.dataset.path.generic_string();
  out << YAML::Key << "train_subset" << YAML::Value << cfg.dataset.train_subset;
  out << YAML::Key << "test_subset" << YAML::Value << cfg.dataset.test_subset;
  out << YAML::EndMap;

  out << YAML::Key << "train" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "epochs" << YAML::Value << cfg.train.epochs;
  emit_train_knobs(out, cfg.train);
  out << YAML::EndMap;

  const HierarchyConfig& h = cfg.hierarchy;
  out << YAML::Key << "hierarchy" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "r_max" << YAML::Value << shortest(h.r_max);
  out << YAML::Key << "samples" << YAML::Value << h.samples;
  out << YAML::Key << "rounds" << YAML::Value << h.rounds;
  out << YAML::Key << "lambda" << YAML::Value << shortest(h.lambda);
  out << YAML::Key << "gamma" << YAML::Value << shortest(h.gamma);
  out << YAML::Key << "rho_min" << YAML::Value << shortest(h.rho_min);
  out << YAML::Key << "retrain_epochs_struct" << YAML::Value << h.retrain_epochs_struct;
  out << YAML::Key << "reliability_epochs" << YAML::Value << h.reliability_epochs;
  emit_train_knobs(out, h.retrain);
  out << YAML::EndMap;

  const PlannerConfig& p = cfg.planner;
  out << YAML::Key << "planner" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "threshold_frac" << YAML::Value << shortest(p.threshold_frac);
  out << YAML::Key << "initial_ratio" << YAML::Value << shortest(p.initial_ratio);
  out << YAML::Key << "ratio_step" << YAML::Value << shortest(p.ratio_step);
  out << YAML::Key << "target_overall" << YAML::Value << shortest(p.target_overall);
  if (p.baseline_tolerance) {
    out << YAML::Key << "baseline_tolerance" << YAML::Value << shortest(*p.baseline_tolerance);
  }
  out << YAML::Key << "selection" << YAML::Value << to_string(p.selection);
  out << YAML::Key << "retrain_epochs" << YAML::Value << p.retrain.epochs;
  emit_train_knobs(out, p.retrain);
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace sensprune
