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
#ifndef HYLDA_RANGEVIEW_HPP_
#define HYLDA_RANGEVIEW_HPP_

// Spherical projection of LiDAR point clouds into range-view images.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace hylda {

enum Channel : int { kX = 0, kY = 1, kZ = 2, kRange = 3, kRemission = 4 };
inline constexpr int kNumChannels = 5;

struct PointCloud {
  // x, y, z in meters; remission in [0, 1].
  std::vector<std::array<float, 4>> points;
  // Empty, or one class id per point.
  std::vector<std::uint8_t> labels;
  std::string frame_id;

  std::size_t size() const { return points.size(); }
  bool has_labels() const { return !labels.empty(); }
  void validate() const;
};

struct SensorModel {
  int beams = 16;
  int width = 128;
  double fov_up = 3.0;     // degrees
  double fov_down = -15.0; // degrees
  double max_range = 60.0;
  double noise_sigma = 0.0;
  double dropout_prob = 0.0;

  void validate() const;
};

/// C x H x W range-view grid (channel-major) with a per-pixel validity mask.
/// Invalid pixels hold 0 before normalization and -1 afterwards.
struct RangeImage {
  int channels = kNumChannels;
  int height = 0;
  int width = 0;
  std::vector<float> data;
  std::vector<std::uint8_t> valid;
  bool normalized = false;

  RangeImage() = default;
  RangeImage(int h, int w, int c = kNumChannels);

  float& at(int c, int v, int u) {
    return data[(static_cast<std::size_t>(c) * height + v) * width + u];
  }
  float at(int c, int v, int u) const {
    return data[(static_cast<std::size_t>(c) * height + v) * width + u];
  }
  bool is_valid(int v, int u) const {
    return valid[static_cast<std::size_t>(v) * width + u] != 0;
  }
  std::size_t pixels() const {
    return static_cast<std::size_t>(height) * width;
  }
};

struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> ids;

  LabelMap() = default;
  LabelMap(int h, int w) : height(h), width(w), ids(static_cast<std::size_t>(h) * w, 0) {}

  std::uint8_t& at(int v, int u) { return ids[static_cast<std::size_t>(v) * width + u]; }
  std::uint8_t at(int v, int u) const { return ids[static_cast<std::size_t>(v) * width + u]; }
};

struct NormStats {
  std::array<double, kNumChannels> low{};
  std::array<double, kNumChannels> high{};

  void validate() const;
  void save(const std::filesystem::path& path) const;
  static NormStats load(const std::filesystem::path& path);
};

struct Projection {
  RangeImage image;
  LabelMap labels;
  // Winning point per pixel, -1 where empty.
  std::vector<std::int32_t> index_map;
  // Pixel each point fell into (v * W + u), -1 when outside the field of view.
  std::vector<std::int32_t> point_pixel;
};

// Pixel column of an azimuth direction, and row of an elevation (radians).
int azimuth_column(double x, double y, int width);
int elevation_row(double elevation_rad, const SensorModel& sensor);

/// Projects onto an H = sensor.beams by W = sensor.width grid; the nearest
/// point wins when several land in one pixel.
Projection project(const PointCloud& cloud, const SensorModel& sensor);

NormStats compute_norm_stats(std::span<const RangeImage> frames);
RangeImage normalize(const RangeImage& img, const NormStats& stats);
// Inverse affine map of normalize() for valid pixels (clipping is lossy).
RangeImage denormalize(const RangeImage& img, const NormStats& stats);

std::vector<std::uint8_t> backproject(const LabelMap& labels,
                                      std::span<const std::int32_t> index_map,
                                      std::span<const std::int32_t> point_pixel,
                                      std::size_t n_points);

// Linear-interpolated percentile (q in [0, 1]) of an unsorted sample.
double percentile(std::vector<double> values, double q);

// HYL1 frame and HYLL label files.
void write_frame(const std::filesystem::path& path, const RangeImage& img);
RangeImage read_frame(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const LabelMap& labels);
LabelMap read_labels(const std::filesystem::path& path);

}  // namespace hylda

#endif  // HYLDA_RANGEVIEW_HPP_
