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
#ifndef HYLDA_TENSOR_BRIDGE_HPP_
#define HYLDA_TENSOR_BRIDGE_HPP_

#include <span>
#include <vector>

#include <torch/torch.h>

#include "hylda/rangeview.hpp"

namespace hylda {

// [B, C, H, W] float32 from a set of same-shaped images.
torch::Tensor to_tensor(std::span<const RangeImage> images);
// [B, H, W] int64 class ids.
torch::Tensor to_tensor(std::span<const LabelMap> labels);
// [B, H, W] bool validity.
torch::Tensor valid_tensor(std::span<const RangeImage> images);

/// One [C, H, W] tensor back to a normalized RangeImage. Pixels whose range
/// channel sits at the fill value (within `fill_tolerance`) are marked invalid.
RangeImage to_range_image(const torch::Tensor& chw, float fill_tolerance = 5e-3f);
LabelMap to_label_map(const torch::Tensor& hw);

}  // namespace hylda

#endif  // HYLDA_TENSOR_BRIDGE_HPP_
