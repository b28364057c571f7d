/* Copyright 2026 The HYLDA Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "hylda/config.hpp"

#include <cstdlib>

#include <gtest/gtest.h>

#include "hylda/common.hpp"

namespace hylda {
namespace {

TEST(ConfigTest, ParsesSectionsAndTypes) {
  const Config c = Config::parse("[train]\nbeta = 0.5\nepochs = 3\naugment = off\nmode = oracle\n");
  EXPECT_DOUBLE_EQ(c.get_double("train.beta", 0.0), 0.5);
  EXPECT_EQ(c.get_int("train.epochs", 0), 3);
  EXPECT_FALSE(c.get_bool("train.augment", true));
  EXPECT_EQ(c.get_string("train.mode", ""), "oracle");
  EXPECT_EQ(c.get_int("train.missing", 42), 42);
}

TEST(ConfigTest, BadValuesAreUsageErrors) {
  const Config c = Config::parse("[train]\nbeta = abc\nepochs = 2.5\naugment = maybe\n");
  EXPECT_THROW(c.get_double("train.beta", 0.0), UsageError);
  EXPECT_THROW(c.get_int("train.epochs", 0), UsageError);
  EXPECT_THROW(c.get_bool("train.augment", true), UsageError);
  EXPECT_THROW(Config::parse("[train\nbeta = 1\n"), UsageError);
}

TEST(ConfigTest, OverridesWin) {
  Config c = Config::parse("[train]\nbeta = 0.5\n");
  c.set_override("train.beta=0.25");
  c.set_override("model.num_classes=4");
  EXPECT_DOUBLE_EQ(c.get_double("train.beta", 0.0), 0.25);
  EXPECT_EQ(c.get_int("model.num_classes", 0), 4);
  EXPECT_THROW(c.set_override("beta=1"), UsageError);
  EXPECT_THROW(c.set_override("train.beta"), UsageError);
}

TEST(ConfigTest, UnknownKeyNamed) {
  const Config c = Config::parse("[train]\nbeta = 0.5\nbetta = 1\n");
  try {
    c.check_keys(known_config_keys());
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("train.betta"), std::string::npos);
  }
}

TEST(ConfigTest, DefaultsFollowContract) {
  ::unsetenv("HYLDA_SEED");
  const TrainConfig t = TrainConfig::from(Config{});
  EXPECT_DOUBLE_EQ(t.beta, 0.1);
  EXPECT_DOUBLE_EQ(t.gamma, 1.0);
  EXPECT_DOUBLE_EQ(t.lr_seg, 0.01);
  EXPECT_DOUBLE_EQ(t.lr_i2i, 0.002);
  EXPECT_EQ(t.i2i_optimizer, "sgd");
  EXPECT_EQ(t.mode, Mode::kHylda);
  EXPECT_FALSE(t.update_disc_in_unsup);
}

TEST(ConfigTest, SeedEnvironmentOverride) {
  const Config c = Config::parse("[train]\nseed = 3\n");
  ::setenv("HYLDA_SEED", "17", 1);
  EXPECT_EQ(TrainConfig::from(c).seed, 17u);
  ::setenv("HYLDA_SEED", "x", 1);
  EXPECT_THROW(TrainConfig::from(c), UsageError);
  ::unsetenv("HYLDA_SEED");
  EXPECT_EQ(TrainConfig::from(c).seed, 3u);
}

TEST(ConfigTest, TrainTextRoundTrip) {
  ::unsetenv("HYLDA_SEED");
  Config c = Config::parse("[train]\nbeta = 0.3\nuse_semisup = false\nmode = finetune\n"
                           "[model]\ngen_widths = 4,8,12\n");
  const TrainConfig a = TrainConfig::from(c);
  const Config back = Config::parse(a.to_text());
  back.check_keys(known_config_keys());
  const TrainConfig b = TrainConfig::from(back);
  EXPECT_EQ(a.to_text(), b.to_text());
  EXPECT_EQ(b.gen_widths, (std::array<int, 3>{4, 8, 12}));
  EXPECT_FALSE(b.use_semisup);
  EXPECT_EQ(b.mode, Mode::kFinetune);
}

TEST(ConfigTest, PairTextRoundTrip) {
  Config c = Config::parse("[target]\nbeams = 4\nremission_gain = 0.5\n");
  const synth::DomainPairSpec a = pair_spec_from(c);
  EXPECT_EQ(a.target.sensor.beams, 4);
  const Config back = Config::parse(to_text(a));
  back.check_keys(known_config_keys());
  EXPECT_EQ(to_text(pair_spec_from(back)), to_text(a));
}

TEST(ConfigTest, ValidationRejectsBadValues) {
  ::unsetenv("HYLDA_SEED");
  for (const char* bad : {"train.beta=-1", "train.lr_seg=0", "train.epochs=0", "train.batch_size=0",
                          "train.mode=bogus", "train.i2i_optimizer=rmsprop",
                          "model.gen_widths=4,8", "train.disc_lr_scale=0"}) {
    Config c;
    c.set_override(bad);
    EXPECT_THROW(TrainConfig::from(c), UsageError) << bad;
  }
  Config p;
  p.set_override("target.beams=0");
  EXPECT_THROW(pair_spec_from(p), UsageError);
}

}  // namespace
}  // namespace hylda
