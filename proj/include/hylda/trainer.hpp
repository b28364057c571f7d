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
#ifndef HYLDA_TRAINER_HPP_
#define HYLDA_TRAINER_HPP_

// Reference pretraining, the six-step training procedure and full runs for
// every training mode.

#include <array>
#include <bitset>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "hylda/config.hpp"
#include "hylda/corpus.hpp"
#include "hylda/domainstats.hpp"
#include "hylda/metrics.hpp"
#include "hylda/segmentation.hpp"
#include "hylda/translation.hpp"

namespace hylda::train {

// Parameter groups whose updates are tracked per step.
enum Group : int {
  kEncS, kDecS, kEncT, kDecT, kDiscX, kDiscY, kFEnc, kFDec, kAuxDec, kRefSrc, kNumGroups
};
const char* group_name(int g);
using GroupMask = std::bitset<kNumGroups>;

// Sub-steps in execution order. Step 6 first updates the generators, then
// the segmentation network.
enum StepId : int { kStep1, kStep2, kStep3, kStep4, kStep5, kStep6Gen, kStep6Seg, kNumSteps };
const char* step_name(int s);

enum Loss : int {
  kXself, kLsganG, kLsganF, kStats, kI2i, kDisc, kSsSelf, kWce, kUwce, kSem, kUnsup, kNumLosses
};
const char* loss_name(int l);
using LossValues = std::array<double, kNumLosses>;
LossValues nan_losses();

struct StepReport {
  LossValues losses = nan_losses();
  std::array<bool, kNumSteps> ran{};
  // Filled only when update tracking is on.
  std::array<GroupMask, kNumSteps> updated{};
};

struct StepPlan {
  bool self = true;         // 1
  bool adversarial = true;  // 2, 3
  bool aux = true;          // 4
  bool semisup = true;      // 5
  bool unsup = true;        // 6
};
StepPlan plan_for(const TrainConfig& cfg);

struct StepInputs {
  torch::Tensor source;         // y, [B, C, H, W]
  torch::Tensor source_labels;  // [B, H, W]
  torch::Tensor target;         // x, unlabeled pool
  torch::Tensor labeled;        // labeled target frames (may be undefined)
  torch::Tensor labeled_labels;
};

/// Flip along azimuth with probability 1/2, then a random azimuth roll;
/// images and labels move together.
std::pair<torch::Tensor, torch::Tensor> augment(const torch::Tensor& images,
                                                const torch::Tensor& labels,
                                                std::mt19937_64& rng);

/// Everything that survives across steps of one run.
class HyldaState {
 public:
  /// `ref` initializes f_target and becomes the frozen f_RefSrc; a null
  /// `ref` (oracle) gives a randomly initialized f_target.
  HyldaState(const TrainConfig& cfg, const Corpus& corpus, const seg::SegNet* ref,
             const torch::Tensor& labeled_labels);

  std::array<std::uint64_t, kNumGroups> hashes() const;

  TrainConfig config;
  StepPlan plan;
  i2i::TranslationEngine engine;
  std::optional<seg::SegNet> ref;
  seg::SegNet target;
  seg::SegDecoder aux{nullptr};
  // Step 5 updates f_target through opt_fenc/opt_fdec; Steps 4 and 6 use
  // opt_fenc_aux and opt_seg_unsup when per_step_optimizers is set.
  std::unique_ptr<torch::optim::Adam> opt_fenc, opt_fdec, opt_aux, opt_fenc_aux, opt_seg_unsup;
  std::unique_ptr<torch::optim::Optimizer> opt_gen, opt_disc;
  i2i::ImagePool pool_fake_target, pool_fake_source;
  stats::DomainStats source_stats, target_stats;
  torch::Tensor alpha_labeled;  // from the labeled subset
  torch::Tensor alpha_source;   // from the source train split
  std::mt19937_64 aug_rng;
  bool track_updates = false;

 private:
  void zero_all();
  friend StepReport hylda_step(HyldaState& state, const StepInputs& in);
};

/// One iteration of the enabled steps. A non-finite loss raises Error
/// naming the step.
StepReport hylda_step(HyldaState& state, const StepInputs& in);

struct EpochRecord {
  int epoch = 0;
  eval::IouResult iou;
  LossValues losses = nan_losses();  // epoch means over steps that ran
};

using Logger = std::function<void(const std::string&)>;

struct PretrainResult {
  seg::SegNet net;  // frozen, best source-val epoch
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
};

/// f_RefSrc on the labeled source train split, selected on source val.
PretrainResult pretrain_ref_source(const TrainConfig& cfg, const Corpus& corpus,
                                   const Logger& log = {});

struct RunResult {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_miou = std::numeric_limits<double>::quiet_NaN();
  std::optional<seg::SegNet> best;        // f_target at best_epoch
  std::shared_ptr<HyldaState> state;      // final state (absent for naive)
  std::vector<std::string> labeled_ids;   // labeled target subset used
};

/// Trains per cfg.mode and evaluates on target val after every epoch.
/// hylda, finetune and naive need `ref`. When `out_dir` is non-empty the
/// run writes metrics.csv, f_target_best.ckpt, labeled_subset.txt and, for
/// hylda, engine_final.ckpt and stats.csv.
RunResult run(const TrainConfig& cfg, const Corpus& corpus, const seg::SegNet* ref,
              const std::filesystem::path& out_dir, const Logger& log = {});

std::string metrics_header(int num_classes);
/// `mode_label` replaces the mode column when non-empty.
std::string metrics_row(const TrainConfig& cfg, const EpochRecord& rec, const std::string& mode_label = "");
void write_metrics(const std::filesystem::path& path, const TrainConfig& cfg,
                   const std::vector<EpochRecord>& epochs, const std::string& mode_label = "");

struct AblationVariant {
  std::string name;
  std::function<void(TrainConfig&)> apply;
};
std::vector<AblationVariant> default_ablation_variants();

struct AblationRow {
  std::string variant;
  std::uint64_t seed = 0;
  double miou = 0.0;
};

/// Every variant for every (seed, ref) pair; writes ablation.csv and
/// ablation_summary.csv under out_dir when non-empty.
std::vector<AblationRow> run_ablation_suite(const TrainConfig& base, const Corpus& corpus,
                                            const std::vector<std::uint64_t>& seeds,
                                            const std::vector<const seg::SegNet*>& refs,
                                            const std::vector<AblationVariant>& variants,
                                            const std::filesystem::path& out_dir,
                                            const Logger& log = {});

}  // namespace hylda::train

#endif  // HYLDA_TRAINER_HPP_
