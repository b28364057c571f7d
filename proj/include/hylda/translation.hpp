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
#ifndef HYLDA_TRANSLATION_HPP_
#define HYLDA_TRANSLATION_HPP_

// Image-to-image translation engine: two generators split into independent
// encoder and decoder halves whose skip taps can be re-wired at run time,
// plus one dual-head patch discriminator per domain.
//
//   IDENTITY     Enc_s -> Dec_s, Enc_t -> Dec_t   (reconstruction)
//   TRANSLATION  Enc_s -> Dec_t, Enc_t -> Dec_s   (source->target, target->source)

#include <array>
#include <deque>
#include <random>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "hylda/checkpoint.hpp"

namespace hylda::i2i {

enum class SkipRoute { kIdentity, kTranslation };

struct EncoderOutput {
  torch::Tensor half;        // skip tap at H/2 x W/2
  torch::Tensor quarter;     // skip tap at H/4 x W/4
  torch::Tensor bottleneck;  // H/8 x W/8
};

class GeneratorEncoderImpl : public torch::nn::Module {
 public:
  GeneratorEncoderImpl(int in_channels, std::array<int, 3> widths);
  EncoderOutput forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential down1_{nullptr}, down2_{nullptr}, down3_{nullptr};
};
TORCH_MODULE(GeneratorEncoder);

class GeneratorDecoderImpl : public torch::nn::Module {
 public:
  GeneratorDecoderImpl(int out_channels, std::array<int, 3> widths);
  /// When `use_skips` is false the skip inputs are replaced by zeros, leaving
  /// only the bottleneck path.
  torch::Tensor forward(const EncoderOutput& enc, bool use_skips = true);

  torch::nn::Conv2d& output_layer() { return out_; }

 private:
  torch::nn::Sequential up3_{nullptr}, merge3_{nullptr}, up2_{nullptr}, merge2_{nullptr}, up1_{nullptr};
  torch::nn::Conv2d out_{nullptr};
};
TORCH_MODULE(GeneratorDecoder);

struct DiscScores {
  torch::Tensor full;   // final head, H/8 x W/8
  torch::Tensor early;  // head on layer 2, H/4 x W/4
};

class DualHeadDiscriminatorImpl : public torch::nn::Module {
 public:
  DualHeadDiscriminatorImpl(int in_channels, std::array<int, 4> widths);
  DiscScores forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential layer1_{nullptr}, layer2_{nullptr}, layer3_{nullptr}, layer4_{nullptr};
  torch::nn::Conv2d early_head_{nullptr}, final_head_{nullptr};
};
TORCH_MODULE(DualHeadDiscriminator);

struct EngineOptions {
  int channels = 5;
  std::array<int, 3> gen_widths = {8, 16, 32};
  std::array<int, 4> disc_widths = {8, 16, 32, 32};
  bool use_skips = true;
  bool dual_head = true;
};

/// Enc_s, Dec_s, Enc_t, Dec_t, D_X (target domain) and D_Y (source domain).
/// The two generators start from identical weights, so before any
/// training the translation route reproduces the identity route.
class TranslationEngine {
 public:
  explicit TranslationEngine(const EngineOptions& options);

  /// IDENTITY: (Dec_s(Enc_s(y)), Dec_t(Enc_t(x))).
  /// TRANSLATION: (Dec_t(Enc_s(y)), Dec_s(Enc_t(x))).
  std::pair<torch::Tensor, torch::Tensor> route_forward(const torch::Tensor& source,
                                                        const torch::Tensor& target,
                                                        SkipRoute route);
  torch::Tensor source_to_target(const torch::Tensor& source);  // F = Dec_t . Enc_s
  torch::Tensor target_to_source(const torch::Tensor& target);  // G = Dec_s . Enc_t

  std::vector<torch::Tensor> generator_parameters() const;
  std::vector<torch::Tensor> discriminator_parameters() const;
  void set_discriminators_trainable(bool trainable);

  Checkpoint to_checkpoint() const;
  void load(const Checkpoint& ck);

  const EngineOptions& options() const { return options_; }

  GeneratorEncoder enc_s{nullptr}, enc_t{nullptr};
  GeneratorDecoder dec_s{nullptr}, dec_t{nullptr};
  DualHeadDiscriminator disc_x{nullptr}, disc_y{nullptr};

 private:
  EngineOptions options_;
};

// Losses. Scores from both heads are averaged with equal weight unless
// `dual_head` is false, in which case only the final head counts.

torch::Tensor i2i_self_loss(const torch::Tensor& y, const torch::Tensor& y_rec,
                            const torch::Tensor& x, const torch::Tensor& x_rec);
/// Mean (score - 1)^2.
torch::Tensor lsgan_generator_loss(const DiscScores& fake, bool dual_head = true);
/// 0.5 mean (real - 1)^2 + 0.5 mean fake^2.
torch::Tensor lsgan_discriminator_loss(const DiscScores& real, const DiscScores& fake,
                                       bool dual_head = true);
torch::Tensor combined_i2i_loss(const torch::Tensor& lsgan_g, const torch::Tensor& lsgan_f,
                                const torch::Tensor& stats_loss, double beta);

/// History of generated images fed to the discriminator. While filling, a
/// query returns its input; once full, each image is swapped with a random
/// stored one with probability 1/2.
class ImagePool {
 public:
  ImagePool(std::size_t capacity, std::uint64_t seed);
  torch::Tensor query(const torch::Tensor& images);

 private:
  std::size_t capacity_;
  std::vector<torch::Tensor> items_;
  std::mt19937_64 rng_;
};

}  // namespace hylda::i2i

#endif  // HYLDA_TRANSLATION_HPP_
