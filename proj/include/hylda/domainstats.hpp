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
#ifndef HYLDA_DOMAINSTATS_HPP_
#define HYLDA_DOMAINSTATS_HPP_

// Mean range image and beam covariance of a set of normalized range images.
// The covariance treats each azimuth column's H-vector of normalized range
// values as one sample, pooled across all columns of all frames.

#include <filesystem>
#include <span>

#include <torch/torch.h>

#include "hylda/rangeview.hpp"

namespace hylda::stats {

struct DomainStats {
  torch::Tensor mean_image;  // [H, W]
  torch::Tensor cov;         // [H, H], symmetric

  long height() const { return mean_image.size(0); }
  long width() const { return mean_image.size(1); }

  // HYLS file: magic, u32 H, W, then mean then row-major cov as float32.
  void save(const std::filesystem::path& path) const;
  static DomainStats load(const std::filesystem::path& path);
};

/// Differentiable statistics of a [B, H, W] range-channel tensor, in the
/// tensor's dtype. Unbiased covariance over n = B * W column samples.
DomainStats range_stats(const torch::Tensor& range);

/// Statistics of a [B, C, H, W] normalized batch (range channel only).
DomainStats batch_stats(const torch::Tensor& batch);

/// Whole-dataset statistics, accumulated in float64.
DomainStats precompute_stats(std::span<const RangeImage> frames);

struct StatsMae {
  double mean_mae = 0.0;
  double cov_mae = 0.0;
};

StatsMae stats_mae(const DomainStats& a, const DomainStats& b);

/// Element-wise mean |batch - target| summed over the covariance and mean
/// terms of both translation directions. `fake_source` are images translated
/// into the source domain (compared with `source_target`), `fake_target` the
/// images translated into the target domain.
torch::Tensor statistics_loss(const torch::Tensor& fake_source, const torch::Tensor& fake_target,
                              const DomainStats& source_target, const DomainStats& target_target);

}  // namespace hylda::stats

#endif  // HYLDA_DOMAINSTATS_HPP_
