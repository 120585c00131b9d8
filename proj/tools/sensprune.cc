// Command-line front end: one subcommand per pipeline stage.
//
// Exit codes: 0 success, 2 configuration error, 3 data-format error,
// 4 training failure, 1 anything else.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sensprune/checkpoint.h"
#include "sensprune/config.h"
#include "sensprune/errors.h"
#include "sensprune/pipeline.h"

namespace {

using namespace sensprune;

// Command-line values that override the config file when given.
struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<std::string> model;
  std::optional<std::string> dataset_path;
  std::optional<int> train_subset;
  std::optional<int> test_subset;
  std::optional<int> epochs;
  std::optional<int> workers;
  std::optional<int> rounds;
  std::optional<int> samples;
  std::optional<double> threshold_frac;
  std::optional<double> ratio_step;
  std::optional<double> target_overall;
  std::optional<std::string> selection;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Overrides& o, bool seed_required) {
  cmd->add_option("-c,--config", o.config, "Experiment config (YAML)")->required();
  auto* seed = cmd->add_option("--seed", o.seed, "Master seed");
  if (seed_required) seed->required();
  cmd->add_option("--output-dir", o.output_dir, "Directory for artifacts");
  cmd->add_option("--model", o.model, "Zoo model name");
  cmd->add_option("--dataset-path", o.dataset_path, "Dataset directory");
  cmd->add_option("--train-subset", o.train_subset, "Training samples (0 = all)");
  cmd->add_option("--test-subset", o.test_subset, "Test samples (0 = all)");
  cmd->add_option("--epochs", o.epochs, "Base training epochs");
  cmd->add_option("--workers", o.workers, "Sensitivity worker threads");
  cmd->add_option("--rounds", o.rounds, "Hierarchy rounds N");
  cmd->add_option("--samples", o.samples, "Hierarchy ratio steps T");
  cmd->add_option("--threshold-frac", o.threshold_frac, "Grouping gap threshold");
  cmd->add_option("--ratio-step", o.ratio_step, "Planner ratio increment");
  cmd->add_option("--target-overall", o.target_overall, "Planner stop ratio");
  cmd->add_option("--selection", o.selection, "random, l1_norm or l2_norm");
  cmd->add_flag("-q,--quiet", o.quiet, "Suppress progress output");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig cfg = load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.output_dir) cfg.output_dir = *o.output_dir;
  if (o.model) {
    cfg.model = *o.model;
    cfg.spec.reset();
  }
  if (o.dataset_path) cfg.dataset.path = *o.dataset_path;
  if (o.train_subset) cfg.dataset.train_subset = *o.train_subset;
  if (o.test_subset) cfg.dataset.test_subset = *o.test_subset;
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.workers) cfg.workers = *o.workers;
  if (o.rounds) cfg.hierarchy.rounds = *o.rounds;
  if (o.samples) cfg.hierarchy.samples = *o.samples;
  if (o.threshold_frac) cfg.planner.threshold_frac = *o.threshold_frac;
  if (o.ratio_step) cfg.planner.ratio_step = *o.ratio_step;
  if (o.target_overall) cfg.planner.target_overall = *o.target_overall;
  if (o.selection) cfg.planner.selection = selection_kind_from_string(*o.selection);
  cfg.validate();
  return cfg;
}

Network load_base(const ExperimentConfig& cfg, const std::string& path) {
  return load_checkpoint(path.empty() ? cfg.output_dir / artifacts::kBaseCheckpoint
                                      : std::filesystem::path(path),
                         cfg.model_spec());
}

int exit_code_for(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 3;
  } catch (const TrainingError& e) {
    std::cerr << "training failure: " << e.what() << "\n";
    return 4;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ConstraintError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidRequest& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensitiveness-based structured filter pruning"};
  app.require_subcommand(1);

  Overrides o;
  std::string checkpoint, sensitivity_file, groups_file;
  auto* train_cmd = app.add_subcommand("train", "Train the base model");
  add_common(train_cmd, o, false);
  auto* sens_cmd = app.add_subcommand("sensitivity", "Measure per-layer sensitiveness");
  add_common(sens_cmd, o, false);
  sens_cmd->add_option("--checkpoint", checkpoint, "Base checkpoint (default: output dir)");
  auto* group_cmd = app.add_subcommand("group", "Group layers by sensitiveness");
  add_common(group_cmd, o, false);
  group_cmd->add_option("--sensitivity", sensitivity_file, "Sensitivity report JSON");
  auto* prune_cmd = app.add_subcommand("prune", "Iteratively prune grouped layers");
  add_common(prune_cmd, o, false);
  prune_cmd->add_option("--checkpoint", checkpoint, "Base checkpoint (default: output dir)");
  prune_cmd->add_option("--groups", groups_file, "Group assignment JSON");
  auto* report_cmd = app.add_subcommand("report", "Collect artifacts into report.json");
  add_common(report_cmd, o, false);
  auto* pipe_cmd = app.add_subcommand("pipeline", "Run every stage");
  add_common(pipe_cmd, o, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const ExperimentConfig cfg = resolve(o);
    const Progress progress = o.quiet ? Progress{} : Progress([](const std::string& msg) {
      std::cerr << msg << std::endl;
    });
    auto default_path = [&](const std::string& given, const char* name) {
      return given.empty() ? cfg.output_dir / name : std::filesystem::path(given);
    };

    if (*train_cmd) {
      run_train_stage(cfg, load_dataset(cfg), progress);
    } else if (*sens_cmd) {
      const Network base = load_base(cfg, checkpoint);
      run_sensitivity_stage(cfg, load_dataset(cfg), base, progress);
    } else if (*group_cmd) {
      const auto report = sensitivity_report_from_json(
          read_json_file(default_path(sensitivity_file, artifacts::kSensitivity)));
      const GroupAssignment g = run_group_stage(cfg, report);
      std::cout << to_json(g).dump(2) << "\n";
    } else if (*prune_cmd) {
      const Network base = load_base(cfg, checkpoint);
      const auto groups = group_assignment_from_json(
          read_json_file(default_path(groups_file, artifacts::kGroups)));
      run_prune_stage(cfg, load_dataset(cfg), base, groups, progress);
    } else if (*report_cmd) {
      std::cout << run_report_stage(cfg).dump(2) << "\n";
    } else if (*pipe_cmd) {
      run_pipeline(cfg, progress);
      std::cout << "artifacts written to " << cfg.output_dir.string() << "\n";
    }
  } catch (...) {
    return exit_code_for(std::current_exception());
  }
  return 0;
}
