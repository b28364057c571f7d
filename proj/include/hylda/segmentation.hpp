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
#ifndef HYLDA_SEGMENTATION_HPP_
#define HYLDA_SEGMENTATION_HPP_

// Range-view segmentation network (encoder/decoder with a skip at every
// stage), the auxiliary reconstruction decoder, and the task losses.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <torch/torch.h>

#include "hylda/checkpoint.hpp"
#include "hylda/rangeview.hpp"

namespace hylda::seg {

struct SegFeatures {
  torch::Tensor full;        // H
  torch::Tensor half;        // H/2
  torch::Tensor quarter;     // H/4
  torch::Tensor bottleneck;  // H/8
};

class SegEncoderImpl : public torch::nn::Module {
 public:
  SegEncoderImpl(int in_channels, std::array<int, 3> widths);
  SegFeatures forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential stem_{nullptr}, down1_{nullptr}, down2_{nullptr}, down3_{nullptr};
};
TORCH_MODULE(SegEncoder);

/// Mirrors the encoder; `out_channels` scores (or a tanh image when
/// `tanh_output`).
class SegDecoderImpl : public torch::nn::Module {
 public:
  SegDecoderImpl(int out_channels, std::array<int, 3> widths, bool tanh_output);
  torch::Tensor forward(const SegFeatures& f);

 private:
  torch::nn::Sequential up3_{nullptr}, up2_{nullptr}, up1_{nullptr};
  torch::nn::Conv2d head_{nullptr};
  bool tanh_output_;
};
TORCH_MODULE(SegDecoder);

enum class Role { kTarget, kRefSource };

struct SegOptions {
  int channels = kNumChannels;
  int num_classes = 6;  // K; outputs K + 1 scores
  std::array<int, 3> widths = {16, 32, 32};
};

class SegNet {
 public:
  SegNet(const SegOptions& options, Role role);

  torch::Tensor forward(const torch::Tensor& x);  // [B, K+1, H, W]
  torch::Tensor predict(const torch::Tensor& x);  // argmax, [B, H, W]

  /// Marks every parameter non-trainable and switches the role to
  /// reference; later optimizer steps cannot touch it.
  void freeze();
  bool frozen() const { return frozen_; }
  Role role() const { return role_; }
  void copy_weights_from(const SegNet& other);
  void set_trainable(bool trainable);

  std::uint64_t hash() const;
  Checkpoint to_checkpoint() const;
  static SegNet from_checkpoint(const Checkpoint& ck, Role role);

  const SegOptions& options() const { return options_; }

  SegEncoder encoder{nullptr};
  SegDecoder decoder{nullptr};

 private:
  SegOptions options_;
  Role role_;
  bool frozen_ = false;
};

/// Auxiliary decoder: reconstructs the C-channel input from encoder
/// features; tanh-bounded.
SegDecoder make_aux_decoder(const SegOptions& options);

/// alpha_i = 1 / sqrt(f_i) from per-class pixel counts; alpha = 0 where f_i = 0.
torch::Tensor class_weights(std::span<const std::uint64_t> counts);
std::vector<std::uint64_t> class_counts(const torch::Tensor& labels, int num_classes_with_bg);

torch::Tensor aux_loss(const torch::Tensor& x, const torch::Tensor& x_rec);
/// Mean over all pixels of alpha[c] * -log p(c) for the true class c.
torch::Tensor weighted_cross_entropy(const torch::Tensor& scores, const torch::Tensor& labels,
                                     const torch::Tensor& alpha);
/// Same weighted form applied to predictions on translated images with
/// source labels.
torch::Tensor unsupervised_cross_entropy(const torch::Tensor& scores_on_fake,
                                         const torch::Tensor& source_labels,
                                         const torch::Tensor& alpha);
/// Mean |softmax(ref) - softmax(target)|; the reference side carries no gradient.
torch::Tensor semantic_consistency_loss(const torch::Tensor& ref_scores,
                                        const torch::Tensor& target_scores);
torch::Tensor combined_unsupervised_loss(const torch::Tensor& uwce, const torch::Tensor& sem,
                                         double gamma);

}  // namespace hylda::seg

#endif  // HYLDA_SEGMENTATION_HPP_
