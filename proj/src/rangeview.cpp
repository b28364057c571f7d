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
#include "hylda/rangeview.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "hylda/common.hpp"

namespace hylda {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
// Slack on the elevation window so beams placed exactly on the field-of-view
// edges survive float rounding of their coordinates.
constexpr double kFovSlackRad = 1e-5;
constexpr double kDegenerateWidening = 1e-6;
constexpr float kNormalizedFill = -1.0f;

}  // namespace

RangeImage::RangeImage(int h, int w, int c)
    : channels(c),
      height(h),
      width(w),
      data(static_cast<std::size_t>(c) * h * w, 0.0f),
      valid(static_cast<std::size_t>(h) * w, 0) {}

void PointCloud::validate() const {
  if (points.empty()) throw Error("empty input");
  if (has_labels() && labels.size() != points.size()) {
    throw Error("label count does not match point count");
  }
  for (const auto& p : points) {
    for (float c : p) {
      if (!std::isfinite(c)) throw Error("non-finite point coordinate");
    }
    if (p[3] < 0.0f || p[3] > 1.0f) throw Error("remission outside [0, 1]");
  }
}

void SensorModel::validate() const {
  if (!(fov_up > fov_down)) throw Error("sensor fov_up must exceed fov_down");
  if (beams < 2) throw Error("sensor needs at least 2 beams");
  if (width < 4) throw Error("sensor width must be at least 4");
  if (!(max_range > 0.0)) throw Error("sensor max_range must be positive");
  if (!(dropout_prob >= 0.0 && dropout_prob < 1.0)) {
    throw Error("sensor dropout_prob must lie in [0, 1)");
  }
  if (!(noise_sigma >= 0.0)) throw Error("sensor noise_sigma must be >= 0");
}

int azimuth_column(double x, double y, int width) {
  const double yaw = std::atan2(y, x);
  const int u = static_cast<int>(
      std::floor(0.5 * (1.0 - yaw / std::numbers::pi) * width));
  return std::clamp(u, 0, width - 1);
}

int elevation_row(double elevation_rad, const SensorModel& sensor) {
  const double up = sensor.fov_up * kDegToRad;
  const double down = sensor.fov_down * kDegToRad;
  const double t = 1.0 - (elevation_rad - down) / (up - down);
  const int v = static_cast<int>(std::floor(t * sensor.beams));
  return std::clamp(v, 0, sensor.beams - 1);
}

Projection project(const PointCloud& cloud, const SensorModel& sensor) {
  cloud.validate();
  sensor.validate();
  const int h = sensor.beams;
  const int w = sensor.width;
  const double up = sensor.fov_up * kDegToRad;
  const double down = sensor.fov_down * kDegToRad;

  Projection out;
  out.image = RangeImage(h, w);
  out.labels = LabelMap(h, w);
  out.index_map.assign(static_cast<std::size_t>(h) * w, -1);
  out.point_pixel.assign(cloud.size(), -1);
  std::vector<double> best(static_cast<std::size_t>(h) * w,
                           std::numeric_limits<double>::infinity());

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    const double range = std::sqrt(double(p[0]) * p[0] + double(p[1]) * p[1] +
                                   double(p[2]) * p[2]);
    if (range <= 0.0) continue;
    const double elevation = std::asin(std::clamp(p[2] / range, -1.0, 1.0));
    if (elevation > up + kFovSlackRad || elevation < down - kFovSlackRad) continue;
    const int v = elevation_row(elevation, sensor);
    const int u = azimuth_column(p[0], p[1], w);
    const std::size_t pix = static_cast<std::size_t>(v) * w + u;
    out.point_pixel[i] = static_cast<std::int32_t>(pix);
    // Ties keep the earlier point so the result is order-stable.
    if (range < best[pix]) {
      best[pix] = range;
      out.index_map[pix] = static_cast<std::int32_t>(i);
    }
  }

  for (std::size_t pix = 0; pix < out.index_map.size(); ++pix) {
    const std::int32_t idx = out.index_map[pix];
    if (idx < 0) continue;
    const auto& p = cloud.points[static_cast<std::size_t>(idx)];
    const int v = static_cast<int>(pix / w);
    const int u = static_cast<int>(pix % w);
    out.image.at(kX, v, u) = p[0];
    out.image.at(kY, v, u) = p[1];
    out.image.at(kZ, v, u) = p[2];
    out.image.at(kRange, v, u) = static_cast<float>(best[pix]);
    out.image.at(kRemission, v, u) = p[3];
    out.image.valid[pix] = 1;
    if (cloud.has_labels()) out.labels.ids[pix] = cloud.labels[static_cast<std::size_t>(idx)];
  }
  return out;
}

double percentile(std::vector<double> values, double q) {
  require(!values.empty(), "percentile of an empty sample");
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo),
                   values.end());
  const double a = values[lo];
  double b = a;
  if (hi != lo) {
    b = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(hi), values.end());
  }
  return a + (pos - static_cast<double>(lo)) * (b - a);
}

void NormStats::validate() const {
  for (int c = 0; c < kNumChannels; ++c) {
    if (!(low[c] < high[c])) throw Error("normalization bounds need low < high");
  }
}

NormStats compute_norm_stats(std::span<const RangeImage> frames) {
  require(!frames.empty(), "normalization statistics need at least one frame");
  std::array<std::vector<double>, kNumChannels> samples;
  for (const RangeImage& f : frames) {
    if (f.normalized) throw Error("normalization statistics need raw frames");
    for (int v = 0; v < f.height; ++v) {
      for (int u = 0; u < f.width; ++u) {
        if (!f.is_valid(v, u)) continue;
        for (int c = 0; c < kNumChannels; ++c) samples[c].push_back(f.at(c, v, u));
      }
    }
  }
  if (samples[0].empty()) throw Error("no valid pixels in any frame");
  NormStats stats;
  for (int c = 0; c < kNumChannels; ++c) {
    double lo = percentile(samples[c], 0.01);
    double hi = percentile(samples[c], 0.99);
    if (hi - lo < kDegenerateWidening) {
      lo -= kDegenerateWidening;
      hi += kDegenerateWidening;
    }
    stats.low[c] = lo;
    stats.high[c] = hi;
  }
  return stats;
}

RangeImage normalize(const RangeImage& img, const NormStats& stats) {
  if (img.normalized) throw Error("double normalization");
  stats.validate();
  RangeImage out = img;
  for (int c = 0; c < img.channels; ++c) {
    const double scale = 2.0 / (stats.high[c] - stats.low[c]);
    for (int v = 0; v < img.height; ++v) {
      for (int u = 0; u < img.width; ++u) {
        if (!img.is_valid(v, u)) {
          out.at(c, v, u) = kNormalizedFill;
          continue;
        }
        const double mapped = (img.at(c, v, u) - stats.low[c]) * scale - 1.0;
        out.at(c, v, u) = static_cast<float>(std::clamp(mapped, -1.0, 1.0));
      }
    }
  }
  out.normalized = true;
  return out;
}

RangeImage denormalize(const RangeImage& img, const NormStats& stats) {
  require(img.normalized, "denormalize expects a normalized image");
  RangeImage out = img;
  for (int c = 0; c < img.channels; ++c) {
    const double half = 0.5 * (stats.high[c] - stats.low[c]);
    for (int v = 0; v < img.height; ++v) {
      for (int u = 0; u < img.width; ++u) {
        out.at(c, v, u) = img.is_valid(v, u)
                              ? static_cast<float>((img.at(c, v, u) + 1.0) * half + stats.low[c])
                              : 0.0f;
      }
    }
  }
  out.normalized = false;
  return out;
}

std::vector<std::uint8_t> backproject(const LabelMap& labels,
                                      std::span<const std::int32_t> index_map,
                                      std::span<const std::int32_t> point_pixel,
                                      std::size_t n_points) {
  const std::size_t pixels = labels.ids.size();
  if (index_map.size() != pixels) throw Error("index map does not match label map");
  if (point_pixel.size() != n_points) throw Error("n_points mismatch");
  for (std::int32_t idx : index_map) {
    if (idx < -1 || (idx >= 0 && static_cast<std::size_t>(idx) >= n_points)) {
      throw Error("index map entry out of bounds");
    }
  }
  std::vector<std::uint8_t> out(n_points, 0);
  for (std::size_t i = 0; i < n_points; ++i) {
    const std::int32_t pix = point_pixel[i];
    if (pix < 0) continue;
    if (static_cast<std::size_t>(pix) >= pixels) throw Error("point pixel out of bounds");
    out[i] = labels.ids[static_cast<std::size_t>(pix)];
  }
  return out;
}

void NormStats::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(17);
  for (int c = 0; c < kNumChannels; ++c) out << low[c] << ' ' << high[c] << '\n';
}

NormStats NormStats::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  NormStats s;
  for (int c = 0; c < kNumChannels; ++c) {
    if (!(in >> s.low[c] >> s.high[c])) throw Error("truncated " + path.string());
  }
  s.validate();
  return s;
}

void write_frame(const std::filesystem::path& path, const RangeImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  io::write_magic(out, "HYL1");
  io::write_u32(out, static_cast<std::uint32_t>(img.channels));
  io::write_u32(out, static_cast<std::uint32_t>(img.height));
  io::write_u32(out, static_cast<std::uint32_t>(img.width));
  for (float v : img.data) io::write_f32(out, v);
  for (std::uint8_t m : img.valid) out.put(static_cast<char>(m ? 1 : 0));
  if (!out) throw Error("write failed: " + path.string());
}

RangeImage read_frame(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  io::expect_magic(in, "HYL1", path);
  const auto c = io::read_u32(in);
  const auto h = io::read_u32(in);
  const auto w = io::read_u32(in);
  if (c == 0 || h == 0 || w == 0 || c > 64 || h > 1 << 16 || w > 1 << 16) {
    throw Error("implausible frame shape in " + path.string());
  }
  RangeImage img(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
  for (float& v : img.data) v = io::read_f32(in);
  in.read(reinterpret_cast<char*>(img.valid.data()),
          static_cast<std::streamsize>(img.valid.size()));
  if (!in) throw Error("truncated frame " + path.string());
  return img;
}

void write_labels(const std::filesystem::path& path, const LabelMap& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  io::write_magic(out, "HYLL");
  io::write_u32(out, static_cast<std::uint32_t>(labels.height));
  io::write_u32(out, static_cast<std::uint32_t>(labels.width));
  out.write(reinterpret_cast<const char*>(labels.ids.data()),
            static_cast<std::streamsize>(labels.ids.size()));
  if (!out) throw Error("write failed: " + path.string());
}

LabelMap read_labels(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  io::expect_magic(in, "HYLL", path);
  const auto h = io::read_u32(in);
  const auto w = io::read_u32(in);
  if (h == 0 || w == 0 || h > 1 << 16 || w > 1 << 16) {
    throw Error("implausible label shape in " + path.string());
  }
  LabelMap labels(static_cast<int>(h), static_cast<int>(w));
  in.read(reinterpret_cast<char*>(labels.ids.data()),
          static_cast<std::streamsize>(labels.ids.size()));
  if (!in) throw Error("truncated labels " + path.string());
  return labels;
}

}  // namespace hylda
