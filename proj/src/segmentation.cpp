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
#include "hylda/segmentation.hpp"

#include <cmath>

#include "hylda/common.hpp"

namespace hylda::seg {
namespace {

namespace F = torch::nn::functional;

torch::nn::Sequential block(int in, int out, int stride, int dilation = 1) {
  return torch::nn::Sequential(
      torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3)
                            .stride(stride)
                            .padding(dilation)
                            .dilation(dilation)),
      torch::nn::GroupNorm(torch::nn::GroupNormOptions(std::min(4, out), out)),
      torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.1)));
}

torch::nn::Sequential chain(std::initializer_list<torch::nn::Sequential> parts) {
  torch::nn::Sequential out;
  for (const auto& part : parts) {
    for (const auto& m : *part) out->push_back(m);
  }
  return out;
}

torch::Tensor upsample_like(const torch::Tensor& x, const torch::Tensor& like) {
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .size(std::vector<int64_t>{like.size(2), like.size(3)})
                               .mode(torch::kNearest));
}

}  // namespace

SegEncoderImpl::SegEncoderImpl(int in_channels, std::array<int, 3> w) {
  stem_ = register_module("stem", chain({block(in_channels, w[0], 1), block(w[0], w[0], 1)}));
  down1_ = register_module("down1", block(w[0], w[1], 2));
  down2_ = register_module("down2", block(w[1], w[2], 2));
  down3_ = register_module("down3", chain({block(w[2], w[2], 2), block(w[2], w[2], 1, 2)}));
}

SegFeatures SegEncoderImpl::forward(const torch::Tensor& x) {
  require(x.dim() == 4, "segmentation encoder expects [B, C, H, W]");
  SegFeatures f;
  f.full = stem_->forward(x);
  f.half = down1_->forward(f.full);
  f.quarter = down2_->forward(f.half);
  f.bottleneck = down3_->forward(f.quarter);
  return f;
}

SegDecoderImpl::SegDecoderImpl(int out_channels, std::array<int, 3> w, bool tanh_output)
    : tanh_output_(tanh_output) {
  up3_ = register_module("up3", block(w[2] + w[2], w[2], 1));
  up2_ = register_module("up2", block(w[2] + w[1], w[1], 1));
  up1_ = register_module("up1", block(w[1] + w[0], w[0], 1));
  head_ = register_module("head", torch::nn::Conv2d(torch::nn::Conv2dOptions(w[0], out_channels, 1)));
}

torch::Tensor SegDecoderImpl::forward(const SegFeatures& f) {
  auto h = up3_->forward(torch::cat({upsample_like(f.bottleneck, f.quarter), f.quarter}, 1));
  h = up2_->forward(torch::cat({upsample_like(h, f.half), f.half}, 1));
  h = up1_->forward(torch::cat({upsample_like(h, f.full), f.full}, 1));
  auto out = head_->forward(h);
  return tanh_output_ ? torch::tanh(out) : out;
}

SegNet::SegNet(const SegOptions& options, Role role) : options_(options), role_(role) {
  encoder = SegEncoder(options.channels, options.widths);
  decoder = SegDecoder(options.num_classes + 1, options.widths, false);
}

torch::Tensor SegNet::forward(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != options_.channels) {
    throw Error("segmentation input must be [B, " + std::to_string(options_.channels) + ", H, W]");
  }
  return decoder->forward(encoder->forward(x));
}

torch::Tensor SegNet::predict(const torch::Tensor& x) {
  torch::NoGradGuard no_grad;
  return forward(x).argmax(1);
}

void SegNet::set_trainable(bool trainable) {
  if (frozen_ && trainable) throw Error("a frozen reference network cannot be made trainable");
  for (auto& p : encoder->parameters()) p.set_requires_grad(trainable);
  for (auto& p : decoder->parameters()) p.set_requires_grad(trainable);
}

void SegNet::freeze() {
  set_trainable(false);
  frozen_ = true;
  role_ = Role::kRefSource;
}

void SegNet::copy_weights_from(const SegNet& other) {
  require(frozen_ == false, "cannot overwrite a frozen network");
  torch::NoGradGuard no_grad;
  auto copy = [](const torch::nn::Module& from, torch::nn::Module& to) {
    auto src = from.parameters();
    auto dst = to.parameters();
    require(src.size() == dst.size(), "network layouts differ");
    for (std::size_t i = 0; i < src.size(); ++i) dst[i].copy_(src[i]);
  };
  copy(*other.encoder, *encoder);
  copy(*other.decoder, *decoder);
}

std::uint64_t SegNet::hash() const {
  Fnv1a h;
  for (const torch::nn::Module* m : std::initializer_list<const torch::nn::Module*>{encoder.get(), decoder.get()}) {
    const auto v = parameter_hash(*m);
    h.update(std::as_bytes(std::span(&v, 1)));
  }
  return h.digest();
}

Checkpoint SegNet::to_checkpoint() const {
  Checkpoint ck;
  ck.meta["kind"] = "segnet";
  ck.meta["channels"] = std::to_string(options_.channels);
  ck.meta["num_classes"] = std::to_string(options_.num_classes);
  for (int i = 0; i < 3; ++i) ck.meta["width" + std::to_string(i)] = std::to_string(options_.widths[i]);
  ck.meta["frozen"] = frozen_ ? "1" : "0";
  ck.add_module("f_enc", *encoder);
  ck.add_module("f_dec", *decoder);
  return ck;
}

SegNet SegNet::from_checkpoint(const Checkpoint& ck, Role role) {
  auto get = [&ck](const std::string& k) {
    const auto it = ck.meta.find(k);
    if (it == ck.meta.end()) throw Error("segmentation checkpoint lacks '" + k + "'");
    return std::stoi(it->second);
  };
  if (ck.meta.count("kind") == 0 || ck.meta.at("kind") != "segnet") {
    throw Error("checkpoint is not a segmentation network");
  }
  SegOptions o;
  o.channels = get("channels");
  o.num_classes = get("num_classes");
  for (int i = 0; i < 3; ++i) o.widths[i] = get("width" + std::to_string(i));
  SegNet net(o, Role::kTarget);
  ck.load_module("f_enc", *net.encoder);
  ck.load_module("f_dec", *net.decoder);
  if (role == Role::kRefSource) net.freeze();
  return net;
}

SegDecoder make_aux_decoder(const SegOptions& options) {
  return SegDecoder(options.channels, options.widths, true);
}

torch::Tensor class_weights(std::span<const std::uint64_t> counts) {
  auto alpha = torch::zeros({static_cast<long>(counts.size())}, torch::kFloat64);
  auto* a = alpha.data_ptr<double>();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    a[i] = counts[i] > 0 ? 1.0 / std::sqrt(static_cast<double>(counts[i])) : 0.0;
  }
  return alpha;
}

std::vector<std::uint64_t> class_counts(const torch::Tensor& labels, int num_classes_with_bg) {
  const auto flat = labels.reshape({-1}).to(torch::kInt64).contiguous();
  if (flat.numel() > 0 && flat.max().item<std::int64_t>() >= num_classes_with_bg) {
    throw Error("label id exceeds the class count");
  }
  const auto hist = torch::bincount(flat, {}, num_classes_with_bg);
  std::vector<std::uint64_t> out(static_cast<std::size_t>(num_classes_with_bg));
  for (int i = 0; i < num_classes_with_bg; ++i) out[static_cast<std::size_t>(i)] = hist[i].item<std::int64_t>();
  return out;
}

torch::Tensor aux_loss(const torch::Tensor& x, const torch::Tensor& x_rec) {
  if (x.sizes() != x_rec.sizes()) throw Error("reconstruction shape mismatch");
  return (x_rec - x).abs().mean();
}

torch::Tensor weighted_cross_entropy(const torch::Tensor& scores, const torch::Tensor& labels,
                                     const torch::Tensor& alpha) {
  if (scores.dim() != 4 || labels.dim() != 3 || scores.size(0) != labels.size(0) ||
      scores.size(2) != labels.size(1) || scores.size(3) != labels.size(2)) {
    throw Error("scores [B, K+1, H, W] and labels [B, H, W] are not aligned");
  }
  if (alpha.numel() != scores.size(1)) throw Error("class weight count differs from score channels");
  const auto idx = labels.to(torch::kInt64);
  if (idx.numel() > 0 && (idx.max().item<std::int64_t>() >= scores.size(1) || idx.min().item<std::int64_t>() < 0)) {
    throw Error("label id outside 0..K");
  }
  const auto logp = torch::log_softmax(scores, 1).gather(1, idx.unsqueeze(1)).squeeze(1);
  const auto w = alpha.to(scores.dtype()).index({idx});
  return -(w * logp).mean();
}

torch::Tensor unsupervised_cross_entropy(const torch::Tensor& scores_on_fake,
                                         const torch::Tensor& source_labels, const torch::Tensor& alpha) {
  return weighted_cross_entropy(scores_on_fake, source_labels, alpha);
}

torch::Tensor semantic_consistency_loss(const torch::Tensor& ref_scores, const torch::Tensor& target_scores) {
  if (ref_scores.sizes() != target_scores.sizes()) throw Error("score grids differ in shape");
  const auto p_ref = torch::softmax(ref_scores.detach(), 1);
  const auto p_tgt = torch::softmax(target_scores, 1);
  return (p_ref - p_tgt).abs().mean();
}

torch::Tensor combined_unsupervised_loss(const torch::Tensor& uwce, const torch::Tensor& sem, double gamma) {
  return uwce + gamma * sem;
}

}  // namespace hylda::seg
