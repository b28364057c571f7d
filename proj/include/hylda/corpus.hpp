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
#ifndef HYLDA_CORPUS_HPP_
#define HYLDA_CORPUS_HPP_

// In-memory, normalized view of a generated domain pair.

#include <filesystem>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "hylda/datasets.hpp"
#include "hylda/domainstats.hpp"
#include "hylda/rangeview.hpp"

namespace hylda {

struct DomainSplit {
  torch::Tensor images;  // [N, C, H, W] float32, normalized
  torch::Tensor labels;  // [N, H, W] int64
  torch::Tensor valid;   // [N, H, W] bool
  std::vector<std::string> ids;

  long size() const { return images.defined() ? images.size(0) : 0; }
  DomainSplit select(const std::vector<std::size_t>& rows) const;
  std::vector<std::size_t> rows_of(const std::vector<std::string>& frame_ids) const;
};

struct Corpus {
  DomainSplit source_train, source_val, target_train, target_val;
  NormStats norm;
  stats::DomainStats source_stats;  // whole source train split
  stats::DomainStats target_stats;  // all target train frames
  std::filesystem::path root;

  long height() const { return source_train.images.size(2); }
  long width() const { return source_train.images.size(3); }
};

inline std::filesystem::path norm_stats_path(const std::filesystem::path& data_dir) {
  return data_dir / "norm_stats.txt";
}
inline std::filesystem::path source_stats_path(const std::filesystem::path& data_dir) {
  return data_dir / "source_stats.hyls";
}
inline std::filesystem::path target_stats_path(const std::filesystem::path& data_dir) {
  return data_dir / "target_stats.hyls";
}

/// Percentile normalization bounds over both train splits, then the mean
/// image and beam covariance of each normalized train split.
void precompute_corpus_stats(const std::filesystem::path& data_dir);

/// Requires the files written by precompute_corpus_stats.
Corpus load_corpus(const std::filesystem::path& data_dir);

}  // namespace hylda

#endif  // HYLDA_CORPUS_HPP_
