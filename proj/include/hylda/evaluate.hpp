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
#ifndef HYLDA_EVALUATE_HPP_
#define HYLDA_EVALUATE_HPP_

// Inference, mIoU over valid pixels, statistics comparisons and the
// aggregate report.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "hylda/corpus.hpp"
#include "hylda/datasets.hpp"
#include "hylda/metrics.hpp"
#include "hylda/segmentation.hpp"
#include "hylda/synthlidar.hpp"
#include "hylda/translation.hpp"

namespace hylda::eval {

/// Class ids [N, H, W]. Errors when the network's class count differs from
/// `expected_num_classes` (K, skipped when negative).
torch::Tensor infer(seg::SegNet& net, const torch::Tensor& images, int expected_num_classes = -1);
std::vector<LabelMap> infer(seg::SegNet& net, std::span<const RangeImage> normalized,
                            int expected_num_classes = -1);

/// Counts over valid pixels only.
ConfusionMatrix confusion(const torch::Tensor& pred, const torch::Tensor& gt,
                          const torch::Tensor& valid, int num_classes_with_bg);
ConfusionMatrix confusion(seg::SegNet& net, const DomainSplit& split);
IouResult evaluate(seg::SegNet& net, const DomainSplit& split);

/// Point-level counts over one split of a generated pair. Each frame's
/// cloud is regenerated from its manifest seed under `pair`, and pixel
/// predictions are back-projected onto its in-view points. Errors when the
/// regenerated frames do not match the stored labels.
ConfusionMatrix point_confusion(seg::SegNet& net, const Corpus& corpus, const synth::DomainPairSpec& pair,
                                data::Domain domain, data::Split split);

/// Images translated (or not) in one direction, scored against the
/// whole-dataset statistics of the other domain.
struct StatsRow {
  std::string setting;  // "naive" or "fake"
  std::string images;   // e.g. "source_val", "F(source_val)"
  std::string against;  // "target_train" or "source_train"
  double mean_mae = 0.0;
  double cov_mae = 0.0;
};

std::vector<StatsRow> translation_stats(i2i::TranslationEngine& engine, const Corpus& corpus);
void write_stats_csv(const std::filesystem::path& path, const std::vector<StatsRow>& rows);

struct ReportSummary {
  std::vector<std::string> warnings;  // missing or unreadable runs
  std::vector<std::filesystem::path> written;
};

/// Collects runs laid out as <runs_dir>/<mode>/<subset>/seed_<n>/metrics.csv
/// (naive and oracle have no subset level) into runs.csv (one row per run),
/// table1.csv (seed mean and spread per method and subset), the stats table
/// table3.csv, and SVG plots. Missing runs are reported, not fatal.
ReportSummary emit_report(const std::filesystem::path& runs_dir, const std::filesystem::path& out_dir,
                          const std::vector<int>& subset_sizes, const std::vector<std::uint64_t>& seeds);

}  // namespace hylda::eval

#endif  // HYLDA_EVALUATE_HPP_
