#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "sensprune/checkpoint.h"
#include "sensprune/errors.h"
#include "sensprune/surgery.h"
#include "sensprune/zoo.h"

namespace sensprune {
namespace {

namespace fs = std::filesystem;

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / (name + "-" + std::to_string(std::random_device{}()));
}

std::vector<char> bytes_of(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write(const fs::path& p, const std::vector<char>& b) {
  std::ofstream(p, std::ios::binary).write(b.data(), static_cast<std::streamsize>(b.size()));
}

std::uint64_t offset_of_error(const fs::path& p, const std::optional<ModelSpec>& expected = {}) {
  try {
    load_checkpoint(p, expected);
  } catch (const FormatError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "expected FormatError";
  return ~0ULL;
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override { path_ = temp_file("ckpt"); }
  void TearDown() override { fs::remove(path_); }
  fs::path path_;
};

TEST_F(CheckpointTest, RoundTripPreservesEveryBit) {
  for (const std::string& name : {"conv4-mini", "resnet-mini"}) {
    const Network net(build_model(name), 17);
    save_checkpoint(net, path_);
    const Network back = load_checkpoint(path_, net.spec());
    EXPECT_EQ(back.spec(), net.spec());
    EXPECT_EQ(state_digest(back), state_digest(net));
    for (std::size_t i = 0; i < net.params().size(); ++i) {
      EXPECT_EQ(back.params()[i].weight, net.params()[i].weight);
      EXPECT_EQ(back.params()[i].running_var, net.params()[i].running_var);
    }
  }
}

TEST_F(CheckpointTest, PrunedNetworkKeepsFilterIds) {
  const Network net(build_model("conv4-mini"), 2);
  PruneMask mask;
  mask.removed[net.spec().prunable[1]] = {0, 3, 9};
  const Network pruned = apply_mask(net, mask);
  save_checkpoint(pruned, path_);
  const Network back = load_checkpoint(path_);
  EXPECT_EQ(prune_mask(back), mask);
  EXPECT_EQ(state_digest(back), state_digest(pruned));
  EXPECT_EQ(back.original_filter_count(net.spec().prunable[1]), 16);
}

TEST_F(CheckpointTest, HeaderLayout) {
  save_checkpoint(Network(build_model("conv4-mini"), 1), path_);
  const auto b = bytes_of(path_);
  ASSERT_GT(b.size(), 20u);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 8), "SPRNCKPT");
  EXPECT_EQ(b[8], 1);  // little-endian version
  EXPECT_EQ(b[9], 0);
}

TEST_F(CheckpointTest, CorruptionIsRejectedWithOffsets) {
  const Network net(build_model("conv4-mini"), 1);
  save_checkpoint(net, path_);
  const auto good = bytes_of(path_);

  auto bad = good;
  bad[0] = 'X';
  write(path_, bad);
  EXPECT_EQ(offset_of_error(path_), 0u);

  bad = good;
  bad[8] = 7;
  write(path_, bad);
  EXPECT_EQ(offset_of_error(path_), 8u);

  bad = good;
  bad[12] ^= 0x55;  // spec digest
  write(path_, bad);
  EXPECT_EQ(offset_of_error(path_), 12u);

  bad.assign(good.begin(), good.end() - 3);
  write(path_, bad);
  EXPECT_GT(offset_of_error(path_), 20u);

  bad = good;
  bad.push_back(0);
  write(path_, bad);
  EXPECT_EQ(offset_of_error(path_), good.size());

  write(path_, good);
  EXPECT_EQ(offset_of_error(path_, build_model("vgg16-mini")), 12u);
  EXPECT_NO_THROW(load_checkpoint(path_, net.spec()));
}

TEST(StateDigest, CloneMatchesAndEditsDiffer) {
  const Network net(build_model("conv4-mini"), 1);
  Network c = clone(net);
  EXPECT_EQ(state_digest(c), state_digest(net));
  c.params()[0].bias[0] += 1e-3f;
  EXPECT_NE(state_digest(c), state_digest(net));
  EXPECT_NE(state_digest(remove_filters(net, 0, {1})), state_digest(net));
}

}  // namespace
}  // namespace sensprune
