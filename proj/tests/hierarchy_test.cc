#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "sensprune/checkpoint.h"
#include "sensprune/errors.h"
#include "sensprune/sensitivity.h"

namespace sensprune {
namespace {

ModelSpec small_net() {
  ModelSpec s;
  s.name = "small";
  s.input_channels = 1;
  s.input_height = s.input_width = 6;
  s.num_classes = 2;
  s.layers = {LayerSpec::Conv(1, 4).named("Conv1"), LayerSpec::BatchNorm(4), LayerSpec::Relu(),
              LayerSpec::MaxPool(),                 LayerSpec::Conv(4, 6).named("Conv2"),
              LayerSpec::BatchNorm(6),              LayerSpec::Relu(),
              LayerSpec::Dense(54, 2),              LayerSpec::SoftmaxXent()};
  s.prunable = {0, 4};
  return s;
}

// Class 1 images are brighter in the top half.
DatasetSplit blobs(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> noise(0.0f, 0.5f);
  DatasetSplit d;
  d.num_classes = 2;
  d.images = Tensor4({n, 1, 6, 6});
  for (int i = 0; i < n; ++i) {
    const int y = i % 2;
    for (int p = 0; p < 36; ++p) {
      d.images.data()[i * 36 + p] = noise(rng) + (y == 1 && p < 18 ? 1.0f : 0.0f);
    }
    d.labels.push_back(y);
  }
  return d;
}

HierarchyConfig small_config() {
  HierarchyConfig cfg;
  cfg.samples = 2;
  cfg.rounds = 3;
  cfg.retrain_epochs_struct = 1;
  cfg.reliability_epochs = 1;
  cfg.retrain.batch_size = 16;
  return cfg;
}

class HierarchyTest : public ::testing::Test {
 protected:
  HierarchyTest() : net_(small_net(), 3), train_(blobs(64, 1)), eval_(blobs(32, 2)) {
    TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 16;
    tc.seed = 4;
    train(net_, train_, tc);
  }
  Network net_;
  DatasetSplit train_, eval_;
};

TEST_F(HierarchyTest, RecordShape) {
  const HierarchyConfig cfg = small_config();
  const auto r = run_hierarchy(net_, train_, eval_, cfg, 11);
  EXPECT_EQ(r.record.layers, (std::vector<int>{0, 4}));
  EXPECT_EQ(r.record.names, (std::vector<std::string>{"Conv1", "Conv2"}));
  EXPECT_EQ(r.record.ratios, ratio_set(cfg));
  EXPECT_EQ(r.record.p_o, evaluate(net_, eval_));
  ASSERT_EQ(r.record.accuracy.size(), 2u);
  for (const auto& layer : r.record.accuracy) {
    ASSERT_EQ(layer.size(), 3u);
    for (const auto& curve : layer) {
      ASSERT_EQ(curve.size(), 3u);
      for (double a : curve) {
        EXPECT_GE(a, 0.0);
        EXPECT_LE(a, 1.0);
      }
    }
  }
  EXPECT_EQ(r.report, aggregate(r.record, cfg));
}

TEST_F(HierarchyTest, SourceNetworkIsUntouched) {
  const std::uint64_t before = state_digest(net_);
  run_hierarchy(net_, train_, eval_, small_config(), 11);
  EXPECT_EQ(state_digest(net_), before);
}

TEST_F(HierarchyTest, WorkersAndLayerOrderDoNotChangeResults) {
  const HierarchyConfig cfg = small_config();
  const auto serial = run_hierarchy(net_, train_, eval_, cfg, 11);
  HierarchyOptions opts;
  opts.workers = 3;
  opts.layer_order = {4, 0};
  const auto parallel = run_hierarchy(net_, train_, eval_, cfg, 11, opts);
  EXPECT_EQ(parallel.record, serial.record);
  EXPECT_EQ(to_json(parallel.record).dump(), to_json(serial.record).dump());
  const auto other_seed = run_hierarchy(net_, train_, eval_, cfg, 12);
  EXPECT_NE(other_seed.record, serial.record);
}

TEST_F(HierarchyTest, RejectsBadLayerOrder) {
  HierarchyOptions opts;
  opts.layer_order = {0, 0};
  EXPECT_THROW(run_hierarchy(net_, train_, eval_, small_config(), 1, opts), ConfigError);
}

TEST_F(HierarchyTest, ReliabilityKeepsTheFrozenLayer) {
  const HierarchyConfig cfg = small_config();
  const Reliability r = measure_reliability(net_, 4, train_, eval_, 0.5, cfg, 7);
  EXPECT_NEAR(r.fr, r.p0 - 0.5, 1e-15);
  // Re-running with the same seed is deterministic.
  EXPECT_EQ(measure_reliability(net_, 4, train_, eval_, 0.5, cfg, 7).p0, r.p0);
}

TEST_F(HierarchyTest, CurveStartsWithTheReliabilitySample) {
  const HierarchyConfig cfg = small_config();
  const auto curve = measure_stability_curve(net_, 0, train_, eval_, cfg, 21);
  const Reliability r = measure_reliability(net_, 0, train_, eval_, 0.0, cfg, 21);
  ASSERT_EQ(curve.size(), 3u);
  EXPECT_EQ(curve.front(), r.p0);
}

TEST_F(HierarchyTest, SerializationRoundTrips) {
  const auto r = run_hierarchy(net_, train_, eval_, small_config(), 11);
  EXPECT_EQ(round_record_from_json(to_json(r.record)), r.record);
  EXPECT_EQ(sensitivity_report_from_json(to_json(r.report)), r.report);
  EXPECT_EQ(to_json(r.report).at("schema_version"), kReportSchemaVersion);
  const std::string csv = curves_csv(r.record);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "layer,round,ratio,accuracy");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 3 * 3);
}

TEST(HierarchyConfigTest, Validation) {
  HierarchyConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  for (auto bad : {+[](HierarchyConfig& c) { c.gamma = 1.0; },
                   +[](HierarchyConfig& c) { c.lambda = 0.0; },
                   +[](HierarchyConfig& c) { c.samples = 0; },
                   +[](HierarchyConfig& c) { c.rounds = 0; },
                   +[](HierarchyConfig& c) { c.r_max = 0.0; }}) {
    HierarchyConfig c;
    bad(c);
    EXPECT_THROW(c.validate(), ConfigError);
  }
}

}  // namespace
}  // namespace sensprune
