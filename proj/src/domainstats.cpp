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
#include "hylda/domainstats.hpp"

#include <fstream>

#include "hylda/common.hpp"
#include "hylda/tensor_bridge.hpp"

namespace hylda::stats {
namespace {

torch::Tensor mean_abs_diff(const torch::Tensor& a, const torch::Tensor& b) {
  return (a - b.to(a.dtype())).abs().mean();
}

}  // namespace

DomainStats range_stats(const torch::Tensor& range) {
  require(range.dim() == 3, "range statistics expect a [B, H, W] tensor");
  const long b = range.size(0), h = range.size(1), w = range.size(2);
  const long n = b * w;
  if (n < 2) throw Error("covariance needs at least two column samples");
  DomainStats s;
  s.mean_image = range.mean(0);
  // Samples as rows: [B*W, H].
  const auto columns = range.permute({0, 2, 1}).reshape({n, h});
  const auto centered = columns - columns.mean(0, /*keepdim=*/true);
  s.cov = torch::matmul(centered.transpose(0, 1), centered) / static_cast<double>(n - 1);
  return s;
}

DomainStats batch_stats(const torch::Tensor& batch) {
  require(batch.dim() == 4 && batch.size(1) > kRange, "batch statistics expect [B, C, H, W]");
  return range_stats(batch.select(1, kRange));
}

DomainStats precompute_stats(std::span<const RangeImage> frames) {
  require(!frames.empty(), "statistics need at least one frame");
  for (const auto& f : frames) {
    require(f.normalized, "statistics expect normalized frames");
  }
  const auto batch = to_tensor(frames).to(torch::kFloat64);
  torch::NoGradGuard no_grad;
  return batch_stats(batch);
}

StatsMae stats_mae(const DomainStats& a, const DomainStats& b) {
  if (a.mean_image.sizes() != b.mean_image.sizes() || a.cov.sizes() != b.cov.sizes()) {
    throw Error("statistics shapes differ");
  }
  torch::NoGradGuard no_grad;
  return {mean_abs_diff(a.mean_image.to(torch::kFloat64), b.mean_image).item<double>(),
          mean_abs_diff(a.cov.to(torch::kFloat64), b.cov).item<double>()};
}

torch::Tensor statistics_loss(const torch::Tensor& fake_source, const torch::Tensor& fake_target,
                              const DomainStats& source_target, const DomainStats& target_target) {
  const DomainStats s = batch_stats(fake_source);
  const DomainStats t = batch_stats(fake_target);
  if (s.mean_image.sizes() != source_target.mean_image.sizes() ||
      t.mean_image.sizes() != target_target.mean_image.sizes()) {
    throw Error("statistics loss: batch and target shapes differ");
  }
  const auto cov_terms = mean_abs_diff(s.cov, source_target.cov) + mean_abs_diff(t.cov, target_target.cov);
  const auto mean_terms = mean_abs_diff(s.mean_image, source_target.mean_image) +
                          mean_abs_diff(t.mean_image, target_target.mean_image);
  return cov_terms + mean_terms;
}

void DomainStats::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  io::write_magic(out, "HYLS");
  io::write_u32(out, static_cast<std::uint32_t>(height()));
  io::write_u32(out, static_cast<std::uint32_t>(width()));
  for (const auto& t : {mean_image, cov}) {
    const auto c = t.detach().to(torch::kFloat32).contiguous();
    const float* p = c.data_ptr<float>();
    for (long i = 0; i < c.numel(); ++i) io::write_f32(out, p[i]);
  }
  if (!out) throw Error("write failed: " + path.string());
}

DomainStats DomainStats::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  io::expect_magic(in, "HYLS", path);
  const long h = io::read_u32(in);
  const long w = io::read_u32(in);
  if (h <= 0 || w <= 0 || h > 4096 || w > 1 << 16) throw Error("implausible stats shape");
  DomainStats s;
  s.mean_image = torch::empty({h, w}, torch::kFloat32);
  s.cov = torch::empty({h, h}, torch::kFloat32);
  for (auto* t : {&s.mean_image, &s.cov}) {
    float* p = t->data_ptr<float>();
    for (long i = 0; i < t->numel(); ++i) p[i] = io::read_f32(in);
  }
  return s;
}

}  // namespace hylda::stats
