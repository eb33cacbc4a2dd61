#include <gtest/gtest.h>

#include <fstream>

#include "hdrfuse/config.hpp"
#include "support.hpp"

using namespace hdr;

TEST(Config, ParsesEveryKey) {
  const std::string text = R"(# training
patch_size = 64
patch_stride = 32
batch_size = 8   # trailing comment
lr0 = 5e-3
lr_decay = 0.95
epochs = 12
seed = 7
width_multiplier = 0.125
max_iterations = 100
deterministic = true

gamma_kind = wellexp
window_size = 9
window_stride = 3
sigma_e = 0.25
gamma_floor = 0.001
)";
  const RunConfig rc = parse_config(text);
  EXPECT_EQ(rc.train.patch_size, 64u);
  EXPECT_EQ(rc.train.patch_stride, 32u);
  EXPECT_EQ(rc.train.batch_size, 8u);
  EXPECT_DOUBLE_EQ(rc.train.lr0, 5e-3);
  EXPECT_DOUBLE_EQ(rc.train.lr_decay, 0.95);
  EXPECT_EQ(rc.train.epochs, 12u);
  EXPECT_EQ(rc.train.seed, 7u);
  EXPECT_DOUBLE_EQ(rc.train.width_multiplier, 0.125);
  EXPECT_EQ(rc.train.max_iterations, 100u);
  EXPECT_TRUE(rc.train.deterministic);
  EXPECT_EQ(rc.loss.gamma_kind, AttributeKind::WellExposedness);
  EXPECT_EQ(rc.loss.window.window_size, 9u);
  EXPECT_EQ(rc.loss.window.stride, 3u);
  EXPECT_DOUBLE_EQ(rc.loss.sigma_e, 0.25);
  EXPECT_DOUBLE_EQ(rc.loss.gamma_floor, 0.001);
}

TEST(Config, KeepsBaseForMissingKeys) {
  RunConfig base;
  base.train.seed = 42;
  const RunConfig rc = parse_config("epochs = 3\n", base);
  EXPECT_EQ(rc.train.seed, 42u);
  EXPECT_EQ(rc.train.epochs, 3u);
  EXPECT_EQ(rc.train.patch_size, 250u);
  EXPECT_EQ(rc.loss.gamma_kind, AttributeKind::VarGrad);
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_THROW(parse_config("learning_rate = 1\n"), ContractError);
  EXPECT_THROW(parse_config("epochs\n"), ContractError);
  EXPECT_THROW(parse_config("epochs = ten\n"), ContractError);
  EXPECT_THROW(parse_config("epochs = -1\n"), ContractError);
  EXPECT_THROW(parse_config("lr0 = 1e-3x\n"), ContractError);
  EXPECT_THROW(parse_config("deterministic = maybe\n"), ContractError);
  EXPECT_THROW(parse_config("gamma_kind = entropy\n"), ContractError);
}

TEST(Config, LoadsFromFile) {
  test::TempDir dir("config");
  {
    std::ofstream out(dir / "run.cfg");
    out << "seed = 9\r\nwindow_stride = 1\r\n";
  }
  const RunConfig rc = load_config(dir / "run.cfg");
  EXPECT_EQ(rc.train.seed, 9u);
  EXPECT_EQ(rc.loss.window.stride, 1u);
  EXPECT_THROW(load_config(dir / "absent.cfg"), IoError);
}
