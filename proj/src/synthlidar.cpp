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
#include "hylda/synthlidar.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "hylda/common.hpp"
#include "hylda/datasets.hpp"

namespace hylda::synth {
namespace {

using Vec3 = std::array<double, 3>;
constexpr double kEps = 1e-9;
constexpr double kRemissionJitter = 0.05;
// Objects are kept out of this radius around the sensor.
constexpr double kClearRadius = 4.0;

std::optional<double> nearest_positive(double t0, double t1) {
  if (t0 > t1) std::swap(t0, t1);
  if (t0 > kEps) return t0;
  if (t1 > kEps) return t1;
  return std::nullopt;
}

std::optional<double> intersect_box(const Primitive& p, const Vec3& dir) {
  const double c = std::cos(p.yaw), s = std::sin(p.yaw);
  // Ray origin and direction expressed in the box frame.
  const Vec3 o = {-(c * p.center[0] + s * p.center[1]),
                  -(-s * p.center[0] + c * p.center[1]), -p.center[2]};
  const Vec3 d = {c * dir[0] + s * dir[1], -s * dir[0] + c * dir[1], dir[2]};
  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < kEps) {
      if (std::abs(o[a]) > p.half_extent[a]) return std::nullopt;
      continue;
    }
    double t0 = (-p.half_extent[a] - o[a]) / d[a];
    double t1 = (p.half_extent[a] - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return std::nullopt;
  }
  return nearest_positive(tmin, tmax);
}

std::optional<double> intersect_cylinder(const Primitive& p, const Vec3& dir) {
  const double r = p.half_extent[0];
  const double z0 = p.center[2];
  const double z1 = p.center[2] + p.half_extent[2];
  const double ox = -p.center[0], oy = -p.center[1];
  std::optional<double> best;
  auto consider = [&](double t) {
    if (t > kEps && (!best || t < *best)) best = t;
  };
  const double a = dir[0] * dir[0] + dir[1] * dir[1];
  if (a > kEps) {
    const double b = 2.0 * (ox * dir[0] + oy * dir[1]);
    const double cc = ox * ox + oy * oy - r * r;
    const double disc = b * b - 4.0 * a * cc;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
        const double z = t * dir[2];
        if (z >= z0 && z <= z1) consider(t);
      }
    }
  }
  if (std::abs(dir[2]) > kEps) {
    for (double zc : {z0, z1}) {
      const double t = zc / dir[2];
      const double x = t * dir[0] + ox, y = t * dir[1] + oy;
      if (x * x + y * y <= r * r) consider(t);
    }
  }
  return best;
}

std::optional<double> intersect_sphere(const Primitive& p, const Vec3& dir) {
  const Vec3 oc = {-p.center[0], -p.center[1], -p.center[2]};
  const double b = oc[0] * dir[0] + oc[1] * dir[1] + oc[2] * dir[2];
  const double c = oc[0] * oc[0] + oc[1] * oc[1] + oc[2] * oc[2] -
                   p.half_extent[0] * p.half_extent[0];
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  return nearest_positive(-b - sq, -b + sq);
}

int poisson(std::mt19937_64& rng, double mean) {
  if (mean <= 0.0) return 0;
  return std::poisson_distribution<int>(mean)(rng);
}

}  // namespace

void SceneSpec::validate() const {
  if (!(extent > 0.0)) throw Error("scene extent must be positive");
  for (int c : counts) {
    if (c < 0) throw Error("primitive counts must be non-negative");
  }
}

std::optional<double> intersect(const Primitive& prim, const std::array<double, 3>& dir) {
  switch (prim.shape) {
    case Shape::kPlane: {
      if (std::abs(dir[2]) < kEps) return std::nullopt;
      const double t = prim.center[2] / dir[2];
      if (t > kEps) return t;
      return std::nullopt;
    }
    case Shape::kBox:
      return intersect_box(prim, dir);
    case Shape::kCylinder:
      return intersect_cylinder(prim, dir);
    case Shape::kSphere:
      return intersect_sphere(prim, dir);
  }
  return std::nullopt;
}

Scene generate_scene(const SceneSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(mix_seed(seed, 0x5ce9e));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  const double ground = -spec.sensor_height;
  const double reach = std::max(spec.extent, kClearRadius + 1.0);

  Scene scene;
  scene.ground_z = ground;
  auto place = [&](double min_radius) {
    const double r = uni(std::min(min_radius, reach - 0.5), reach);
    const double a = uni(-std::numbers::pi, std::numbers::pi);
    return std::pair{r * std::cos(a), r * std::sin(a)};
  };

  for (int i = 0; i < spec.counts[0]; ++i) {
    Primitive p{Shape::kPlane, kGround, {0.0, 0.0, ground}, {}, 0.0};
    scene.primitives.push_back(p);
  }
  for (int i = 0; i < spec.counts[1]; ++i) {
    const auto [x, y] = place(kClearRadius + 1.0);
    const Vec3 he = {uni(1.9, 2.5), uni(0.85, 1.0), uni(0.7, 0.9)};
    scene.primitives.push_back(
        {Shape::kBox, kVehicle, {x, y, ground + he[2]}, he, uni(-std::numbers::pi, std::numbers::pi)});
  }
  for (int i = 0; i < spec.counts[2]; ++i) {
    const auto [x, y] = place(kClearRadius);
    scene.primitives.push_back(
        {Shape::kCylinder, kPedestrian, {x, y, ground}, {uni(0.25, 0.35), 0.0, uni(1.55, 1.9)}, 0.0});
  }
  for (int i = 0; i < spec.counts[3]; ++i) {
    const auto [x, y] = place(0.45 * reach);
    const Vec3 he = {uni(3.0, 9.0), uni(2.0, 5.0), uni(3.0, 7.5)};
    scene.primitives.push_back(
        {Shape::kBox, kBuilding, {x, y, ground + he[2]}, he, uni(-std::numbers::pi, std::numbers::pi)});
  }
  for (int i = 0; i < spec.counts[4]; ++i) {
    const auto [x, y] = place(kClearRadius);
    scene.primitives.push_back(
        {Shape::kCylinder, kPole, {x, y, ground}, {uni(0.1, 0.18), 0.0, uni(4.0, 7.0)}, 0.0});
  }
  for (int i = 0; i < spec.counts[5]; ++i) {
    const auto [x, y] = place(kClearRadius + 1.0);
    const double r = uni(1.0, 2.5);
    // Center at least one radius above ground so blobs rest on it.
    scene.primitives.push_back(
        {Shape::kSphere, kVegetation, {x, y, ground + r + uni(0.0, 1.5)}, {r, r, r}, 0.0});
  }
  return scene;
}

double class_remission(std::uint8_t class_id) {
  switch (class_id) {
    case kGround: return 0.25;
    case kVehicle: return 0.75;
    case kPedestrian: return 0.45;
    case kBuilding: return 0.35;
    case kPole: return 0.6;
    case kVegetation: return 0.15;
    default: return 0.1;
  }
}

PointCloud raycast(const Scene& scene, const SensorModel& sensor, std::uint64_t seed,
                   double remission_gain) {
  sensor.validate();
  constexpr double kDeg = std::numbers::pi / 180.0;
  std::mt19937_64 rng(mix_seed(seed, 0x4a7ca57));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  PointCloud cloud;
  for (int b = 0; b < sensor.beams; ++b) {
    const double el = (sensor.fov_up - b * (sensor.fov_up - sensor.fov_down) / (sensor.beams - 1)) * kDeg;
    for (int j = 0; j < sensor.width; ++j) {
      const double az = std::numbers::pi * (1.0 - 2.0 * (j + 0.5) / sensor.width);
      const Vec3 dir = {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
      // Draw every variate for every ray so streams stay aligned regardless of hits.
      const double drop = unit(rng);
      const double n_range = noise(rng);
      const double n_rem = noise(rng);

      std::optional<double> hit;
      std::uint8_t cls = kBackground;
      for (const auto& p : scene.primitives) {
        const auto t = intersect(p, dir);
        if (t && (!hit || *t < *hit)) {
          hit = t;
          cls = p.class_id;
        }
      }
      if (!hit || *hit > sensor.max_range) continue;
      if (drop < sensor.dropout_prob) continue;
      const double r = std::max(0.05, *hit + sensor.noise_sigma * n_range);
      const double rem = std::clamp(
          (class_remission(cls) + kRemissionJitter * n_rem) * remission_gain, 0.0, 1.0);
      cloud.points.push_back({static_cast<float>(r * dir[0]), static_cast<float>(r * dir[1]),
                              static_cast<float>(r * dir[2]), static_cast<float>(rem)});
      cloud.labels.push_back(cls);
    }
  }
  return cloud;
}

void DomainSpec::validate() const {
  sensor.validate();
  scene.validate();
  if (n_train < 1 || n_val < 1) throw Error("domain " + name + " needs n_train, n_val >= 1");
  if (!(remission_gain > 0.0)) throw Error("remission_gain must be positive");
}

void DomainPairSpec::validate() const {
  source.validate();
  target.validate();
  if (image_height < 2 || image_width < 4) throw Error("range image too small");
}

DomainPairSpec default_pair_spec() {
  DomainPairSpec pair;
  pair.source.name = "source";
  pair.source.sensor = SensorModel{16, 128, 3.0, -15.0, 50.0, 0.02, 0.0};
  pair.source.scene.counts = {1, 7, 2, 4, 5, 5};
  pair.source.remission_gain = 1.0;
  pair.source.n_train = 32;
  pair.source.n_val = 8;

  pair.target.name = "target";
  pair.target.sensor = SensorModel{8, 128, 3.0, -25.0, 50.0, 0.05, 0.0};
  pair.target.scene.counts = {1, 4, 6, 4, 5, 5};
  pair.target.remission_gain = 0.6;
  pair.target.n_train = 40;
  pair.target.n_val = 16;
  return pair;
}

SensorModel projection_geometry(const DomainPairSpec& pair, const DomainSpec& domain) {
  // Both domains share one grid spanning the union of the two fields of view.
  SensorModel g = domain.sensor;
  g.beams = pair.image_height;
  g.width = pair.image_width;
  g.fov_up = std::max(pair.source.sensor.fov_up, pair.target.sensor.fov_up);
  g.fov_down = std::min(pair.source.sensor.fov_down, pair.target.sensor.fov_down);
  return g;
}

GeneratedFrame generate_frame(const DomainPairSpec& pair, const DomainSpec& domain,
                              std::uint64_t frame_seed) {
  std::mt19937_64 rng(mix_seed(frame_seed, 0xc0));
  SceneSpec spec = domain.scene;
  spec.counts[0] = domain.scene.counts[0];
  for (int c = 1; c < kNumObjectClasses; ++c) spec.counts[c] = poisson(rng, domain.scene.counts[c]);
  const Scene scene = generate_scene(spec, mix_seed(frame_seed, 1));
  PointCloud cloud = raycast(scene, domain.sensor, mix_seed(frame_seed, 2), domain.remission_gain);

  GeneratedFrame out;
  if (cloud.points.empty()) {
    // No returns at all: an all-invalid frame.
    const auto g = projection_geometry(pair, domain);
    out.image = RangeImage(g.beams, g.width);
    out.labels = LabelMap(g.beams, g.width);
  } else {
    Projection proj = project(cloud, projection_geometry(pair, domain));
    out.image = std::move(proj.image);
    out.labels = std::move(proj.labels);
  }
  out.cloud = std::move(cloud);
  return out;
}

void build_domain_pair(const DomainPairSpec& pair, const std::filesystem::path& out_dir) {
  pair.validate();
  namespace fs = std::filesystem;
  int domain_tag = 0;
  for (const DomainSpec* domain : {&pair.source, &pair.target}) {
    const bool is_source = domain_tag == 0;
    const fs::path root = out_dir / (is_source ? "source" : "target");
    std::error_code ec;
    fs::create_directories(root / "train", ec);
    fs::create_directories(root / "val", ec);
    if (ec) throw Error("cannot create " + root.string() + ": " + ec.message());

    data::DatasetIndex index;
    index.domain = is_source ? data::Domain::kSource : data::Domain::kTarget;
    index.root = root;
    for (const data::Split split : {data::Split::kTrain, data::Split::kVal}) {
      const int n = split == data::Split::kTrain ? domain->n_train : domain->n_val;
      for (int i = 0; i < n; ++i) {
        const std::uint64_t stream =
            (static_cast<std::uint64_t>(domain_tag) << 40) |
            (static_cast<std::uint64_t>(split == data::Split::kVal) << 32) |
            static_cast<std::uint64_t>(i);
        const std::uint64_t seed = mix_seed(pair.seed, stream);
        std::ostringstream id;
        id << (is_source ? "src" : "trg") << '_' << data::to_string(split) << '_'
           << std::setw(5) << std::setfill('0') << i;
        const fs::path rel_frame = fs::path(data::to_string(split)) / (id.str() + ".hyl1");
        const fs::path rel_label = fs::path(data::to_string(split)) / (id.str() + ".hyll");
        const GeneratedFrame f = generate_frame(pair, *domain, seed);
        write_frame(root / rel_frame, f.image);
        write_labels(root / rel_label, f.labels);
        // Target train labels exist on disk but count as unlabeled until a
        // subset is sampled; validation labels are always usable.
        const bool labeled = is_source || split == data::Split::kVal;
        index.records.push_back({id.str(), split, rel_frame, rel_label, seed, labeled});
      }
    }
    index.save(root / "manifest.txt");
    ++domain_tag;
  }
}

}  // namespace hylda::synth
