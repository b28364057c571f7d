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
#include "hylda/metrics.hpp"

#include <limits>
#include <numeric>

#include "hylda/common.hpp"

namespace hylda::eval {

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : n_(num_classes), counts_(static_cast<std::size_t>(num_classes) * num_classes, 0) {
  require(num_classes >= 2, "confusion matrix needs at least two classes");
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

void ConfusionMatrix::add(int gt, int pred, std::uint64_t n) {
  if (gt < 0 || gt >= n_ || pred < 0 || pred >= n_) {
    throw Error("class id outside the confusion matrix");
  }
  counts_[index(gt, pred)] += n;
}

void ConfusionMatrix::accumulate(const LabelMap& pred, const LabelMap& gt,
                                 std::span<const std::uint8_t> valid) {
  if (pred.height != gt.height || pred.width != gt.width) {
    throw Error("prediction and ground truth shapes differ");
  }
  if (!valid.empty() && valid.size() != gt.ids.size()) {
    throw Error("validity mask shape differs from the label map");
  }
  for (std::size_t i = 0; i < gt.ids.size(); ++i) {
    if (!valid.empty() && valid[i] == 0) continue;
    add(gt.ids[i], pred.ids[i]);
  }
}

void ConfusionMatrix::accumulate_points(const LabelMap& pred, const PointCloud& cloud, const Projection& proj) {
  if (!cloud.has_labels()) throw Error("point-level evaluation needs labeled points");
  const auto point_pred = backproject(pred, proj.index_map, proj.point_pixel, cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (proj.point_pixel[i] >= 0) add(cloud.labels[i], point_pred[i]);
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  require(other.n_ == n_, "confusion matrices of different sizes");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

IouResult miou(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error("empty confusion matrix");
  const int n = cm.num_classes();
  IouResult out;
  out.per_class.assign(static_cast<std::size_t>(n - 1), std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  for (int c = 1; c < n; ++c) {
    std::uint64_t tp = cm.at(c, c), fp = 0, fn = 0;
    for (int o = 0; o < n; ++o) {
      if (o == c) continue;
      fp += cm.at(o, c);
      fn += cm.at(c, o);
    }
    if (tp + fn == 0) continue;  // absent from ground truth
    const double iou = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
    out.per_class[static_cast<std::size_t>(c - 1)] = iou;
    sum += iou;
    ++out.classes_counted;
  }
  out.mean = out.classes_counted > 0 ? sum / out.classes_counted : 0.0;
  return out;
}

}  // namespace hylda::eval
