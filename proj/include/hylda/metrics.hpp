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
#ifndef HYLDA_METRICS_HPP_
#define HYLDA_METRICS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "hylda/rangeview.hpp"

namespace hylda::eval {

/// (K+1) x (K+1) pixel counts; rows are ground truth, columns predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);  // K + 1, including background

  int num_classes() const { return n_; }
  std::uint64_t at(int gt, int pred) const { return counts_[index(gt, pred)]; }
  std::uint64_t total() const;

  /// Adds one count per pixel where `valid` is non-zero (empty = all pixels).
  void accumulate(const LabelMap& pred, const LabelMap& gt, std::span<const std::uint8_t> valid);
  /// Point-level counts: every in-view point of `cloud` takes the
  /// prediction of its pixel in `proj`; points outside the grid are skipped.
  void accumulate_points(const LabelMap& pred, const PointCloud& cloud, const Projection& proj);
  void add(int gt, int pred, std::uint64_t n = 1);

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix& other) const = default;

 private:
  std::size_t index(int gt, int pred) const {
    return static_cast<std::size_t>(gt) * n_ + pred;
  }
  int n_;
  std::vector<std::uint64_t> counts_;
};

struct IouResult {
  // Object classes 1..K; entry c-1 is class c. NaN where the class never
  // occurs in ground truth.
  std::vector<double> per_class;
  double mean = 0.0;
  int classes_counted = 0;
};

/// Per-class IoU = TP / (TP + FP + FN) over object classes; background is
/// excluded and classes absent from ground truth drop out of the mean.
IouResult miou(const ConfusionMatrix& cm);

}  // namespace hylda::eval

#endif  // HYLDA_METRICS_HPP_
