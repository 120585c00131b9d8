#include "sensprune/pipeline.h"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "sensprune/accounting.h"
#include "sensprune/checkpoint.h"
#include "sensprune/errors.h"
#include "sensprune/rng.h"
#include "sensprune/surgery.h"

namespace sensprune {

namespace {

constexpr char kPruneOutcome[] = "prune.json";

std::filesystem::path out_path(const ExperimentConfig& cfg, const char* name) {
  return cfg.output_dir / name;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Records start/finish times of a stage in the metadata sidecar.
void stamp(const ExperimentConfig& cfg, const std::string& stage, const char* event) {
  const auto path = out_path(cfg, artifacts::kMetadata);
  nlohmann::json meta = nlohmann::json::object();
  if (std::filesystem::exists(path)) {
    try {
      meta = read_json_file(path);
    } catch (const std::exception&) {
      meta = nlohmann::json::object();
    }
  }
  meta["stages"][stage][event] = utc_now();
  write_json(path, meta);
}

// Runs one stage, prefixing any error with the stage name while keeping its
// type so the CLI can still map it to an exit code.
template <typename F>
auto in_stage(const ExperimentConfig& cfg, const std::string& name, F&& body) {
  const std::string ctx = name + " stage: ";
  std::filesystem::create_directories(cfg.output_dir);
  stamp(cfg, name, "started");
  try {
    auto result = body();
    stamp(cfg, name, "finished");
    return result;
  } catch (const FormatError& e) {
    throw FormatError(ctx, e);
  } catch (const TrainingError& e) {
    throw TrainingError(ctx, e);
  } catch (const ConfigError& e) {
    throw ConfigError(ctx + e.what());
  } catch (const ConstraintError& e) {
    throw ConstraintError(ctx + e.what());
  } catch (const InvalidRequest& e) {
    throw InvalidRequest(ctx + e.what());
  } catch (const InputError& e) {
    throw InputError(ctx + e.what());
  }
}

void check_shapes(const ModelSpec& spec, const DatasetSplit& split, const char* which) {
  const Shape4 s = split.images.shape();
  if (s.c != spec.input_channels || s.h != spec.input_height || s.w != spec.input_width) {
    throw ConfigError(std::string(which) + " images are " + std::to_string(s.c) + "x" +
                      std::to_string(s.h) + "x" + std::to_string(s.w) + " but model '" +
                      spec.name + "' expects " + std::to_string(spec.input_channels) + "x" +
                      std::to_string(spec.input_height) + "x" +
                      std::to_string(spec.input_width));
  }
  if (split.num_classes != spec.num_classes) {
    throw ConfigError(std::string(which) + " split has " + std::to_string(split.num_classes) +
                      " classes but model '" + spec.name + "' has " +
                      std::to_string(spec.num_classes));
  }
}

nlohmann::json model_stats(const Network& net, double accuracy) {
  return {{"accuracy", accuracy},
          {"params", count_params(net.spec())},
          {"macs", count_macs(net.spec())}};
}

}  // namespace

std::uint64_t stage_seed(const ExperimentConfig& cfg, Stage stage) {
  return derive_seed(cfg.seed, {static_cast<std::uint64_t>(stage)});
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + " is not valid JSON: " + e.what(), e.byte);
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("failed writing " + path.string());
}

Dataset load_dataset(const ExperimentConfig& cfg) {
  const ModelSpec spec = cfg.model_spec();
  Dataset data;
  switch (cfg.dataset.kind) {
    case DatasetKind::kMnist:
      data = load_mnist(cfg.dataset.path, cfg.dataset.train_subset, cfg.dataset.test_subset);
      break;
    case DatasetKind::kCifar10:
      data = load_cifar(cfg.dataset.path, 10, cfg.dataset.train_subset, cfg.dataset.test_subset);
      break;
    case DatasetKind::kCifar100:
      data = load_cifar(cfg.dataset.path, 100, cfg.dataset.train_subset, cfg.dataset.test_subset);
      break;
  }
  check_shapes(spec, data.train, "training");
  check_shapes(spec, data.test, "test");
  return data;
}

Network run_train_stage(const ExperimentConfig& cfg, const Dataset& data,
                        const Progress& progress) {
  return in_stage(cfg, "train", [&] {
    write_text_file(out_path(cfg, artifacts::kConfig), dump_config(cfg));
    Network net(cfg.model_spec(), stage_seed(cfg, Stage::kInit));
    TrainConfig tc = cfg.train;
    tc.seed = stage_seed(cfg, Stage::kTrain);
    const auto log = train(net, data.train, tc);
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& e : log) {
      epochs.push_back({{"epoch", e.epoch}, {"lr", e.lr}, {"loss", e.loss},
                        {"accuracy", e.accuracy}});
      if (progress) {
        std::ostringstream msg;
        msg << "train: epoch " << e.epoch + 1 << "/" << tc.epochs << " loss " << e.loss
            << " accuracy " << e.accuracy;
        progress(msg.str());
      }
    }
    const double acc = evaluate(net, data.test);
    if (progress) progress("train: test accuracy " + std::to_string(acc));
    save_checkpoint(net, out_path(cfg, artifacts::kBaseCheckpoint));
    write_json(out_path(cfg, artifacts::kTrainLog),
               {{"schema_version", kReportSchemaVersion},
                {"epochs", epochs},
                {"test_accuracy", acc},
                {"normalization", to_json(data.normalization)}});
    return net;
  });
}

HierarchyResult run_sensitivity_stage(const ExperimentConfig& cfg, const Dataset& data,
                                      const Network& base, const Progress& progress) {
  return in_stage(cfg, "sensitivity", [&] {
    HierarchyOptions opts;
    opts.workers = cfg.workers;
    opts.progress = progress;
    HierarchyResult res = run_hierarchy(base, data.train, data.test, cfg.hierarchy,
                                        stage_seed(cfg, Stage::kHierarchy), opts);
    write_json(out_path(cfg, artifacts::kRoundRecord), to_json(res.record));
    write_text_file(out_path(cfg, artifacts::kCurves), curves_csv(res.record));
    write_json(out_path(cfg, artifacts::kSensitivity), to_json(res.report));
    return res;
  });
}

GroupAssignment run_group_stage(const ExperimentConfig& cfg, const SensitivityReport& report) {
  return in_stage(cfg, "group", [&] {
    GroupAssignment g = group_layers(report, cfg.planner.threshold_frac);
    write_json(out_path(cfg, artifacts::kGroups), to_json(g));
    return g;
  });
}

PruneResult run_prune_stage(const ExperimentConfig& cfg, const Dataset& data,
                            const Network& base, const GroupAssignment& groups,
                            const Progress& progress) {
  return in_stage(cfg, "prune", [&] {
    PruneResult res = iterative_prune(base, groups, data.train, data.test, cfg.planner,
                                      stage_seed(cfg, Stage::kPrune), progress);
    write_text_file(out_path(cfg, artifacts::kIterations), iterations_jsonl(res.log));
    write_text_file(out_path(cfg, artifacts::kSummary), summary_csv(res, base));
    write_json(out_path(cfg, artifacts::kMask), to_json(res.mask));
    save_checkpoint(res.net, out_path(cfg, artifacts::kPrunedCheckpoint));
    nlohmann::json outcome = model_stats(res.net, res.final_accuracy);
    outcome["schema_version"] = kReportSchemaVersion;
    outcome["baseline_accuracy"] = res.baseline_accuracy;
    outcome["overall_ratio"] = overall_ratio(res.mask, base.spec());
    outcome["filters_removed"] = res.mask.total_removed();
    outcome["target_reached"] = res.target_reached;
    outcome["iterations"] = res.log.size();
    write_json(out_path(cfg, kPruneOutcome), outcome);
    return res;
  });
}

nlohmann::json run_report_stage(const ExperimentConfig& cfg) {
  return in_stage(cfg, "report", [&] {
    const ModelSpec spec = cfg.model_spec();
    nlohmann::json report = {{"schema_version", kReportSchemaVersion},
                             {"model", spec.name},
                             {"seed", cfg.seed},
                             {"dataset",
                              {{"kind", to_string(cfg.dataset.kind)},
                               {"train_subset", cfg.dataset.train_subset},
                               {"test_subset", cfg.dataset.test_subset}}}};
    auto embed = [&](const char* key, const char* file) {
      const auto path = out_path(cfg, file);
      if (std::filesystem::exists(path)) report[key] = read_json_file(path);
    };
    const auto base_path = out_path(cfg, artifacts::kBaseCheckpoint);
    if (std::filesystem::exists(base_path)) {
      const Network base = load_checkpoint(base_path, spec);
      const auto log_path = out_path(cfg, artifacts::kTrainLog);
      if (std::filesystem::exists(log_path)) {
        const nlohmann::json log = read_json_file(log_path);
        report["normalization"] = log.at("normalization");
        report["base"] = model_stats(base, log.at("test_accuracy").get<double>());
      }
    }
    embed("sensitivity", artifacts::kSensitivity);
    embed("groups", artifacts::kGroups);
    embed("pruned", kPruneOutcome);
    write_json(out_path(cfg, artifacts::kReport), report);
    return report;
  });
}

nlohmann::json run_pipeline(const ExperimentConfig& cfg, const Progress& progress) {
  cfg.validate();
  const Dataset data = in_stage(cfg, "data", [&] { return load_dataset(cfg); });
  const Network base = run_train_stage(cfg, data, progress);
  const HierarchyResult h = run_sensitivity_stage(cfg, data, base, progress);
  const GroupAssignment groups = run_group_stage(cfg, h.report);
  run_prune_stage(cfg, data, base, groups, progress);
  return run_report_stage(cfg);
}

}  // namespace sensprune
