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
#include "hylda/translation.hpp"

#include "hylda/common.hpp"

namespace hylda::i2i {
namespace {

namespace F = torch::nn::functional;
constexpr double kLeak = 0.2;

torch::nn::Sequential conv_block(int in, int out, int stride) {
  return torch::nn::Sequential(
      torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).stride(stride).padding(1)),
      torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(kLeak)));
}

torch::Tensor upsample_to(const torch::Tensor& x, long h, long w) {
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .size(std::vector<int64_t>{h, w})
                               .mode(torch::kNearest));
}

void copy_parameters(const torch::nn::Module& from, torch::nn::Module& to) {
  torch::NoGradGuard no_grad;
  auto src = from.parameters();
  auto dst = to.parameters();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i].copy_(src[i]);
}

torch::Tensor square_error(const torch::Tensor& scores, double target) {
  return (scores - target).pow(2).mean();
}

}  // namespace

GeneratorEncoderImpl::GeneratorEncoderImpl(int in_channels, std::array<int, 3> widths) {
  down1_ = register_module("down1", conv_block(in_channels, widths[0], 2));
  down2_ = register_module("down2", conv_block(widths[0], widths[1], 2));
  down3_ = register_module("down3", conv_block(widths[1], widths[2], 2));
}

EncoderOutput GeneratorEncoderImpl::forward(const torch::Tensor& x) {
  require(x.dim() == 4, "generator encoder expects [B, C, H, W]");
  require(x.size(2) % 8 == 0 && x.size(3) % 8 == 0, "generator input sides must be multiples of 8");
  EncoderOutput out;
  out.half = down1_->forward(x);
  out.quarter = down2_->forward(out.half);
  out.bottleneck = down3_->forward(out.quarter);
  return out;
}

GeneratorDecoderImpl::GeneratorDecoderImpl(int out_channels, std::array<int, 3> widths) {
  up3_ = register_module("up3", conv_block(widths[2], widths[1], 1));
  merge3_ = register_module("merge3", conv_block(2 * widths[1], widths[1], 1));
  up2_ = register_module("up2", conv_block(widths[1], widths[0], 1));
  merge2_ = register_module("merge2", conv_block(2 * widths[0], widths[0], 1));
  up1_ = register_module("up1", conv_block(widths[0], widths[0], 1));
  out_ = register_module(
      "out", torch::nn::Conv2d(torch::nn::Conv2dOptions(widths[0], out_channels, 3).padding(1)));
}

torch::Tensor GeneratorDecoderImpl::forward(const EncoderOutput& enc, bool use_skips) {
  auto skip = [use_skips](const torch::Tensor& t) { return use_skips ? t : torch::zeros_like(t); };
  auto h = up3_->forward(upsample_to(enc.bottleneck, enc.quarter.size(2), enc.quarter.size(3)));
  h = merge3_->forward(torch::cat({h, skip(enc.quarter)}, 1));
  h = up2_->forward(upsample_to(h, enc.half.size(2), enc.half.size(3)));
  h = merge2_->forward(torch::cat({h, skip(enc.half)}, 1));
  h = up1_->forward(upsample_to(h, 2 * enc.half.size(2), 2 * enc.half.size(3)));
  return torch::tanh(out_->forward(h));
}

DualHeadDiscriminatorImpl::DualHeadDiscriminatorImpl(int in_channels, std::array<int, 4> widths) {
  auto strided = [](int in, int out) {
    return torch::nn::Sequential(
        torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 4).stride(2).padding(1)),
        torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(kLeak)));
  };
  layer1_ = register_module("layer1", strided(in_channels, widths[0]));
  layer2_ = register_module("layer2", strided(widths[0], widths[1]));
  layer3_ = register_module("layer3", strided(widths[1], widths[2]));
  layer4_ = register_module("layer4", conv_block(widths[2], widths[3], 1));
  early_head_ = register_module(
      "early_head", torch::nn::Conv2d(torch::nn::Conv2dOptions(widths[1], 1, 3).padding(1)));
  final_head_ = register_module(
      "final_head", torch::nn::Conv2d(torch::nn::Conv2dOptions(widths[3], 1, 3).padding(1)));
}

DiscScores DualHeadDiscriminatorImpl::forward(const torch::Tensor& x) {
  require(x.dim() == 4, "discriminator expects [B, C, H, W]");
  auto h2 = layer2_->forward(layer1_->forward(x));
  auto h4 = layer4_->forward(layer3_->forward(h2));
  return {final_head_->forward(h4), early_head_->forward(h2)};
}

TranslationEngine::TranslationEngine(const EngineOptions& options) : options_(options) {
  enc_s = GeneratorEncoder(options.channels, options.gen_widths);
  dec_s = GeneratorDecoder(options.channels, options.gen_widths);
  enc_t = GeneratorEncoder(options.channels, options.gen_widths);
  dec_t = GeneratorDecoder(options.channels, options.gen_widths);
  copy_parameters(*enc_s, *enc_t);
  copy_parameters(*dec_s, *dec_t);
  disc_x = DualHeadDiscriminator(options.channels, options.disc_widths);
  disc_y = DualHeadDiscriminator(options.channels, options.disc_widths);
}

std::pair<torch::Tensor, torch::Tensor> TranslationEngine::route_forward(const torch::Tensor& source,
                                                                         const torch::Tensor& target,
                                                                         SkipRoute route) {
  if (source.sizes() != target.sizes()) throw Error("source and target batches differ in shape");
  const EncoderOutput es = enc_s->forward(source);
  const EncoderOutput et = enc_t->forward(target);
  if (route == SkipRoute::kIdentity) {
    return {dec_s->forward(es, options_.use_skips), dec_t->forward(et, options_.use_skips)};
  }
  return {dec_t->forward(es, options_.use_skips), dec_s->forward(et, options_.use_skips)};
}

torch::Tensor TranslationEngine::source_to_target(const torch::Tensor& source) {
  return dec_t->forward(enc_s->forward(source), options_.use_skips);
}

torch::Tensor TranslationEngine::target_to_source(const torch::Tensor& target) {
  return dec_s->forward(enc_t->forward(target), options_.use_skips);
}

std::vector<torch::Tensor> TranslationEngine::generator_parameters() const {
  std::vector<torch::Tensor> out;
  for (const torch::nn::Module* m :
       std::initializer_list<const torch::nn::Module*>{enc_s.get(), dec_s.get(), enc_t.get(), dec_t.get()}) {
    for (const auto& p : m->parameters()) out.push_back(p);
  }
  return out;
}

std::vector<torch::Tensor> TranslationEngine::discriminator_parameters() const {
  std::vector<torch::Tensor> out;
  for (const torch::nn::Module* m : {disc_x.get(), disc_y.get()}) {
    for (const auto& p : m->parameters()) out.push_back(p);
  }
  return out;
}

void TranslationEngine::set_discriminators_trainable(bool trainable) {
  for (auto& p : discriminator_parameters()) p.set_requires_grad(trainable);
}

Checkpoint TranslationEngine::to_checkpoint() const {
  Checkpoint ck;
  ck.meta["kind"] = "translation_engine";
  ck.meta["channels"] = std::to_string(options_.channels);
  ck.meta["use_skips"] = options_.use_skips ? "1" : "0";
  ck.meta["dual_head"] = options_.dual_head ? "1" : "0";
  for (int i = 0; i < 3; ++i) ck.meta["gen_width" + std::to_string(i)] = std::to_string(options_.gen_widths[i]);
  for (int i = 0; i < 4; ++i) ck.meta["disc_width" + std::to_string(i)] = std::to_string(options_.disc_widths[i]);
  ck.add_module("enc_s", *enc_s);
  ck.add_module("dec_s", *dec_s);
  ck.add_module("enc_t", *enc_t);
  ck.add_module("dec_t", *dec_t);
  ck.add_module("disc_x", *disc_x);
  ck.add_module("disc_y", *disc_y);
  return ck;
}

void TranslationEngine::load(const Checkpoint& ck) {
  if (ck.meta.count("kind") == 0 || ck.meta.at("kind") != "translation_engine") {
    throw Error("checkpoint is not a translation engine");
  }
  ck.load_module("enc_s", *enc_s);
  ck.load_module("dec_s", *dec_s);
  ck.load_module("enc_t", *enc_t);
  ck.load_module("dec_t", *dec_t);
  ck.load_module("disc_x", *disc_x);
  ck.load_module("disc_y", *disc_y);
}

torch::Tensor i2i_self_loss(const torch::Tensor& y, const torch::Tensor& y_rec, const torch::Tensor& x,
                            const torch::Tensor& x_rec) {
  if (y.sizes() != y_rec.sizes() || x.sizes() != x_rec.sizes()) {
    throw Error("reconstruction shape mismatch");
  }
  return (y_rec - y).abs().mean() + (x_rec - x).abs().mean();
}

torch::Tensor lsgan_generator_loss(const DiscScores& fake, bool dual_head) {
  if (!dual_head) return square_error(fake.full, 1.0);
  return 0.5 * (square_error(fake.full, 1.0) + square_error(fake.early, 1.0));
}

torch::Tensor lsgan_discriminator_loss(const DiscScores& real, const DiscScores& fake, bool dual_head) {
  auto head = [](const torch::Tensor& r, const torch::Tensor& f) {
    return 0.5 * square_error(r, 1.0) + 0.5 * square_error(f, 0.0);
  };
  if (!dual_head) return head(real.full, fake.full);
  return 0.5 * (head(real.full, fake.full) + head(real.early, fake.early));
}

torch::Tensor combined_i2i_loss(const torch::Tensor& lsgan_g, const torch::Tensor& lsgan_f,
                                const torch::Tensor& stats_loss, double beta) {
  return lsgan_g + lsgan_f + beta * stats_loss;
}

ImagePool::ImagePool(std::size_t capacity, std::uint64_t seed)
    : capacity_(capacity), rng_(mix_seed(seed, 0x9001)) {}

torch::Tensor ImagePool::query(const torch::Tensor& images) {
  auto detached = images.detach();
  if (capacity_ == 0) return detached;
  std::vector<torch::Tensor> out;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (long i = 0; i < detached.size(0); ++i) {
    auto img = detached[i].clone();
    if (items_.size() < capacity_) {
      items_.push_back(img);
      out.push_back(img);
    } else if (coin(rng_) < 0.5) {
      const std::size_t k = std::uniform_int_distribution<std::size_t>(0, capacity_ - 1)(rng_);
      out.push_back(items_[k]);
      items_[k] = img;
    } else {
      out.push_back(img);
    }
  }
  return torch::stack(out);
}

}  // namespace hylda::i2i
