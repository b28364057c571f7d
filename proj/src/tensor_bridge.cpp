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
#include "hylda/tensor_bridge.hpp"

#include <algorithm>

#include "hylda/common.hpp"

namespace hylda {

torch::Tensor to_tensor(std::span<const RangeImage> images) {
  require(!images.empty(), "cannot batch zero images");
  const auto& first = images.front();
  auto out = torch::empty({static_cast<long>(images.size()), first.channels, first.height, first.width},
                          torch::kFloat32);
  float* dst = out.data_ptr<float>();
  for (const auto& img : images) {
    if (img.channels != first.channels || img.height != first.height || img.width != first.width) {
      throw Error("images in a batch must share one shape");
    }
    dst = std::copy(img.data.begin(), img.data.end(), dst);
  }
  return out;
}

torch::Tensor to_tensor(std::span<const LabelMap> labels) {
  require(!labels.empty(), "cannot batch zero label maps");
  const auto& first = labels.front();
  auto out = torch::empty({static_cast<long>(labels.size()), first.height, first.width}, torch::kInt64);
  auto* dst = out.data_ptr<std::int64_t>();
  for (const auto& l : labels) {
    if (l.height != first.height || l.width != first.width) {
      throw Error("label maps in a batch must share one shape");
    }
    dst = std::copy(l.ids.begin(), l.ids.end(), dst);
  }
  return out;
}

torch::Tensor valid_tensor(std::span<const RangeImage> images) {
  require(!images.empty(), "cannot batch zero images");
  const auto& first = images.front();
  auto out = torch::empty({static_cast<long>(images.size()), first.height, first.width}, torch::kBool);
  bool* dst = out.data_ptr<bool>();
  for (const auto& img : images) {
    for (std::uint8_t m : img.valid) *dst++ = m != 0;
  }
  return out;
}

RangeImage to_range_image(const torch::Tensor& chw, float fill_tolerance) {
  require(chw.dim() == 3, "expected a [C, H, W] tensor");
  const auto t = chw.detach().to(torch::kFloat32).contiguous();
  RangeImage img(static_cast<int>(t.size(1)), static_cast<int>(t.size(2)), static_cast<int>(t.size(0)));
  std::copy_n(t.data_ptr<float>(), img.data.size(), img.data.begin());
  img.normalized = true;
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      const bool valid = img.at(kRange, v, u) > -1.0f + fill_tolerance;
      img.valid[static_cast<std::size_t>(v) * img.width + u] = valid ? 1 : 0;
    }
  }
  return img;
}

LabelMap to_label_map(const torch::Tensor& hw) {
  require(hw.dim() == 2, "expected an [H, W] tensor");
  const auto t = hw.detach().to(torch::kInt64).contiguous();
  LabelMap out(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)));
  const auto* src = t.data_ptr<std::int64_t>();
  for (auto& id : out.ids) {
    const auto v = *src++;
    require(v >= 0 && v < 256, "class id out of byte range");
    id = static_cast<std::uint8_t>(v);
  }
  return out;
}

}  // namespace hylda
