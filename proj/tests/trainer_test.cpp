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
#include "hylda/trainer.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>

#include <gtest/gtest.h>

#include "hylda/common.hpp"
#include "hylda/datasets.hpp"
#include "hylda/evaluate.hpp"
#include "tiny_corpus.hpp"

namespace hylda::train {
namespace {

namespace fs = std::filesystem;
using hylda::testing::tiny_config;
using hylda::testing::tiny_corpus;

const seg::SegNet& tiny_ref() {
  static const PretrainResult r = pretrain_ref_source(tiny_config(), tiny_corpus());
  return r.net;
}

std::string bytes_of(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

GroupMask mask(std::initializer_list<Group> groups) {
  GroupMask m;
  for (Group g : groups) m.set(g);
  return m;
}

std::string names(const GroupMask& m) {
  std::string s;
  for (int g = 0; g < kNumGroups; ++g) {
    if (m[g]) s += std::string(s.empty() ? "" : ",") + group_name(g);
  }
  return "{" + s + "}";
}

TEST(PretrainTest, FrozenAndBetterThanChance) {
  const seg::SegNet& ref = tiny_ref();
  EXPECT_TRUE(ref.frozen());
  EXPECT_EQ(ref.role(), seg::Role::kRefSource);
  // Chance level: predicting class c with its val prevalence p_c gives
  // IoU about p_c^2 / (2 p_c - p_c^2) = p_c / (2 - p_c).
  const auto& val = tiny_corpus().source_val;
  const auto counts = seg::class_counts(val.labels.masked_select(val.valid), 7);
  double total = 0.0, chance = 0.0;
  int present = 0;
  for (int c = 0; c < 7; ++c) total += static_cast<double>(counts[c]);
  for (int c = 1; c < 7; ++c) {
    if (counts[c] == 0) continue;
    const double p = counts[c] / total;
    chance += p / (2 - p);
    ++present;
  }
  seg::SegNet net = seg::SegNet::from_checkpoint(ref.to_checkpoint(), seg::Role::kTarget);
  EXPECT_GT(eval::evaluate(net, val).mean, chance / present);
}

TEST(PretrainTest, Deterministic) {
  const PretrainResult again = pretrain_ref_source(tiny_config(), tiny_corpus());
  EXPECT_EQ(again.net.hash(), tiny_ref().hash());
}

TEST(HyldaStateTest, TargetStartsAsReference) {
  const Corpus& c = tiny_corpus();
  HyldaState s(tiny_config(), c, &tiny_ref(), c.target_train.labels.narrow(0, 0, 2));
  EXPECT_EQ(s.target.hash(), tiny_ref().hash());
  EXPECT_EQ(s.ref->hash(), tiny_ref().hash());
  EXPECT_TRUE(s.ref->frozen());
}

TEST(HyldaStepTest, PerStepUpdateIsolationOverOneEpoch) {
  const Corpus& c = tiny_corpus();
  TrainConfig cfg = tiny_config();
  const auto& trg = c.target_train;
  const DomainSplit labeled = trg.select({0, 1});
  HyldaState s(cfg, c, &tiny_ref(), labeled.labels);
  s.track_updates = true;
  const std::uint64_t ref_hash = tiny_ref().hash();

  const GroupMask gens = mask({kEncS, kDecS, kEncT, kDecT});
  const GroupMask discs = mask({kDiscX, kDiscY});
  const auto batches = data::make_batches(c.source_train.size(), trg.size(), labeled.size(), cfg.batch_size,
                                          cfg.seed, 1, true);
  ASSERT_FALSE(batches.empty());
  for (std::size_t i = 0; i < batches.size(); ++i) {
    const auto& b = batches[i];
    auto take = [](const torch::Tensor& t, const std::vector<std::size_t>& rows) {
      std::vector<std::int64_t> r(rows.begin(), rows.end());
      return t.index_select(0, torch::tensor(r, torch::kInt64));
    };
    StepInputs in{take(c.source_train.images, b.source), take(c.source_train.labels, b.source),
                  take(trg.images, b.target), take(labeled.images, b.labeled), take(labeled.labels, b.labeled)};
    const StepReport r = hylda_step(s, in);
    for (int st = 0; st < kNumSteps; ++st) EXPECT_TRUE(r.ran[st]) << step_name(st);
    EXPECT_EQ(r.updated[kStep1], gens) << "batch " << i << " " << names(r.updated[kStep1]);
    EXPECT_EQ(r.updated[kStep2], gens) << names(r.updated[kStep2]);
    EXPECT_EQ(r.updated[kStep3], discs) << names(r.updated[kStep3]);
    EXPECT_EQ(r.updated[kStep4], mask({kFEnc, kAuxDec})) << names(r.updated[kStep4]);
    EXPECT_EQ(r.updated[kStep5], mask({kFEnc, kFDec})) << names(r.updated[kStep5]);
    // F = Dec_t . Enc_s carries the Step-6 gradient.
    EXPECT_EQ(r.updated[kStep6Gen], mask({kEncS, kDecT})) << names(r.updated[kStep6Gen]);
    EXPECT_EQ(r.updated[kStep6Seg], mask({kFEnc, kFDec})) << names(r.updated[kStep6Seg]);
    for (int st = 0; st < kNumSteps; ++st) EXPECT_FALSE(r.updated[st][kRefSrc]);
    for (double v : r.losses) EXPECT_TRUE(std::isfinite(v));
  }
  EXPECT_EQ(s.ref->hash(), ref_hash);
}

TEST(HyldaStepTest, SelfLossDecreasesOnFixedBatch) {
  const Corpus& c = tiny_corpus();
  TrainConfig cfg = tiny_config();
  cfg.use_semisup = cfg.use_aux_selfsup = cfg.use_unsup_step = false;
  HyldaState s(cfg, c, &tiny_ref(), torch::Tensor());
  s.plan = StepPlan{true, false, false, false, false};
  StepInputs in;
  in.source = c.source_train.images.narrow(0, 0, 2);
  in.source_labels = c.source_train.labels.narrow(0, 0, 2);
  in.target = c.target_train.images.narrow(0, 0, 2);
  double prev = hylda_step(s, in).losses[kXself];
  for (int i = 1; i < 50; ++i) {
    const double now = hylda_step(s, in).losses[kXself];
    EXPECT_LT(now, prev) << "step " << i;
    prev = now;
  }
}

TEST(HyldaStepTest, MissingLabeledBatchIsAnError) {
  const Corpus& c = tiny_corpus();
  HyldaState s(tiny_config(), c, &tiny_ref(), c.target_train.labels.narrow(0, 0, 2));
  s.plan = StepPlan{false, false, false, true, false};
  StepInputs in;
  in.source = c.source_train.images.narrow(0, 0, 2);
  in.target = c.target_train.images.narrow(0, 0, 2);
  EXPECT_THROW(hylda_step(s, in), Error);
}

TEST(AugmentTest, ImagesAndLabelsMoveTogether) {
  const Corpus& c = tiny_corpus();
  std::mt19937_64 rng(3);
  const auto x = c.source_train.images.narrow(0, 0, 4);
  const auto l = c.source_train.labels.narrow(0, 0, 4);
  const auto [xa, la] = augment(x, l, rng);
  for (long b = 0; b < 4; ++b) {
    bool found = false;
    for (bool flip : {false, true}) {
      auto xi = flip ? x[b].flip({2}) : x[b];
      auto li = flip ? l[b].flip({1}) : l[b];
      for (long k = 0; k < x.size(3) && !found; ++k) {
        found = torch::equal(torch::roll(xi, {k}, {2}), xa[b]) && torch::equal(torch::roll(li, {k}, {1}), la[b]);
      }
    }
    EXPECT_TRUE(found) << b;
  }
}

TEST(RunTest, SwitchesOffExceptSemisupEqualsFinetune) {
  const Corpus& c = tiny_corpus();
  TrainConfig ft = tiny_config();
  ft.epochs = 2;
  ft.mode = Mode::kFinetune;
  TrainConfig hy = ft;
  hy.mode = Mode::kHylda;
  hy.use_hylda_i2i = hy.use_aux_selfsup = hy.use_unsup_step = hy.use_stats_loss = false;
  const RunResult a = run(ft, c, &tiny_ref(), {});
  const RunResult b = run(hy, c, &tiny_ref(), {});
  ASSERT_EQ(a.epochs.size(), b.epochs.size());
  for (std::size_t e = 0; e < a.epochs.size(); ++e) EXPECT_EQ(a.epochs[e].iou.mean, b.epochs[e].iou.mean);
  EXPECT_EQ(a.best->hash(), b.best->hash());
  EXPECT_EQ(a.labeled_ids, b.labeled_ids);
}

TEST(RunTest, ModesNeedReference) {
  TrainConfig cfg = tiny_config();
  for (Mode m : {Mode::kHylda, Mode::kFinetune, Mode::kNaive}) {
    cfg.mode = m;
    EXPECT_THROW(run(cfg, tiny_corpus(), nullptr, {}), UsageError);
  }
}

TEST(RunTest, OutputsAreDeterministic) {
  const Corpus& c = tiny_corpus();
  TrainConfig cfg = tiny_config();
  const auto d1 = hylda::testing::scratch_dir("run_a"), d2 = hylda::testing::scratch_dir("run_b");
  run(cfg, c, &tiny_ref(), d1);
  run(cfg, c, &tiny_ref(), d2);
  for (const char* f : {"metrics.csv", "f_target_best.ckpt", "engine_final.ckpt", "stats.csv", "labeled_subset.txt"}) {
    ASSERT_TRUE(fs::exists(d1 / f)) << f;
    EXPECT_EQ(bytes_of(d1 / f), bytes_of(d2 / f)) << f;
  }
  EXPECT_EQ(hylda::data::load_subset(d1 / "labeled_subset.txt").size(), 2u);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST(RunTest, NaiveIsReferenceOnTarget) {
  TrainConfig cfg = tiny_config();
  cfg.mode = Mode::kNaive;
  const RunResult r = run(cfg, tiny_corpus(), &tiny_ref(), {});
  seg::SegNet net = seg::SegNet::from_checkpoint(tiny_ref().to_checkpoint(), seg::Role::kTarget);
  EXPECT_EQ(r.best_miou, eval::evaluate(net, tiny_corpus().target_val).mean);
  EXPECT_EQ(r.best->hash(), tiny_ref().hash());
}

TEST(RunTest, OracleUsesEveryTargetFrame) {
  TrainConfig cfg = tiny_config();
  cfg.mode = Mode::kOracle;
  const RunResult r = run(cfg, tiny_corpus(), nullptr, {});
  EXPECT_EQ(r.labeled_ids, tiny_corpus().target_train.ids);
  EXPECT_TRUE(std::isfinite(r.best_miou));
}

TEST(AblationTest, RowCountAndDeterminism) {
  TrainConfig cfg = tiny_config();
  const auto variants = default_ablation_variants();
  const auto d1 = hylda::testing::scratch_dir("abl_a"), d2 = hylda::testing::scratch_dir("abl_b");
  const auto rows = run_ablation_suite(cfg, tiny_corpus(), {0}, {&tiny_ref()}, variants, d1);
  run_ablation_suite(cfg, tiny_corpus(), {0}, {&tiny_ref()}, variants, d2);
  EXPECT_EQ(rows.size(), variants.size());
  EXPECT_EQ(bytes_of(d1 / "ablation.csv"), bytes_of(d2 / "ablation.csv"));
  std::ifstream in(d1 / "ablation.csv");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, variants.size() + 1);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST(MetricsCsvTest, HeaderAndRowAgree) {
  TrainConfig cfg = tiny_config();
  EpochRecord rec;
  rec.epoch = 3;
  rec.iou.per_class.assign(cfg.num_classes, 0.5);
  rec.iou.mean = 0.5;
  auto count = [](const std::string& s) { return std::count(s.begin(), s.end(), ','); };
  EXPECT_EQ(count(metrics_header(cfg.num_classes)), count(metrics_row(cfg, rec)));
  EXPECT_EQ(metrics_row(cfg, rec).rfind("3,hylda,0,2,", 0), 0u);
}

}  // namespace
}  // namespace hylda::train
