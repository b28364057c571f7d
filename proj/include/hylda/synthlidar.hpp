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
#ifndef HYLDA_SYNTHLIDAR_HPP_
#define HYLDA_SYNTHLIDAR_HPP_

// Two-domain synthetic LiDAR corpus: labeled geometric scenes, a ray-casting
// sensor, and the on-disk dataset layout consumed by the training pipeline.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hylda/rangeview.hpp"

namespace hylda::synth {

// Desk-scale palette. 0 is background / no return.
enum ClassId : std::uint8_t {
  kBackground = 0,
  kGround = 1,
  kVehicle = 2,
  kPedestrian = 3,
  kBuilding = 4,
  kPole = 5,
  kVegetation = 6,
};
inline constexpr int kNumObjectClasses = 6;
inline constexpr std::array<const char*, kNumObjectClasses + 1> kClassNames = {
    "background", "ground", "vehicle", "pedestrian", "building", "pole", "vegetation"};

enum class Shape { kPlane, kBox, kCylinder, kSphere };

struct Primitive {
  Shape shape = Shape::kPlane;
  std::uint8_t class_id = kBackground;
  // Plane: center[2] is the height. Box: center + half extents + yaw.
  // Cylinder: center is the base, half_extent = (radius, -, height).
  // Sphere: center + half_extent[0] radius.
  std::array<double, 3> center{};
  std::array<double, 3> half_extent{};
  double yaw = 0.0;
};

struct Scene {
  std::vector<Primitive> primitives;
  double ground_z = 0.0;
};

struct SceneSpec {
  double extent = 40.0;
  double sensor_height = 1.73;
  // Primitive counts in class order: ground, vehicle, pedestrian, building,
  // pole, vegetation.
  std::array<int, kNumObjectClasses> counts = {1, 6, 3, 4, 5, 5};
  std::uint64_t seed = 0;

  void validate() const;
};

/// Ray/primitive intersection distance along a unit direction from the origin.
std::optional<double> intersect(const Primitive& prim, const std::array<double, 3>& dir);

Scene generate_scene(const SceneSpec& spec, std::uint64_t seed);
inline Scene generate_scene(const SceneSpec& spec) { return generate_scene(spec, spec.seed); }

double class_remission(std::uint8_t class_id);

/// One ray per (beam, azimuth bin). Beam elevations are evenly spaced from
/// fov_up to fov_down inclusive; azimuth bins are centered on the
/// range-view columns.
PointCloud raycast(const Scene& scene, const SensorModel& sensor, std::uint64_t seed,
                   double remission_gain = 1.0);

struct DomainSpec {
  std::string name;
  SensorModel sensor;
  // Mean primitive counts; each frame draws Poisson counts around them.
  SceneSpec scene;
  double remission_gain = 1.0;
  int n_train = 8;
  int n_val = 4;

  void validate() const;
};

struct DomainPairSpec {
  DomainSpec source;
  DomainSpec target;
  int image_height = 16;
  int image_width = 128;
  std::uint64_t seed = 7;

  void validate() const;
};

// Default desk-scale domain gap (16 vs 8 beams, wider target fov, more noise,
// dimmer remission, more pedestrians and fewer vehicles in the target).
DomainPairSpec default_pair_spec();

// Range-view geometry shared by both domains: the pair's image size, the union of the fovs.
SensorModel projection_geometry(const DomainPairSpec& pair, const DomainSpec& domain);

struct GeneratedFrame {
  RangeImage image;
  LabelMap labels;
  PointCloud cloud;
};

GeneratedFrame generate_frame(const DomainPairSpec& pair, const DomainSpec& domain,
                              std::uint64_t frame_seed);

/// Writes <out>/source and <out>/target, each with train/ and val/ HYL1/HYLL
/// files and a manifest.txt.
void build_domain_pair(const DomainPairSpec& pair, const std::filesystem::path& out_dir);

}  // namespace hylda::synth

#endif  // HYLDA_SYNTHLIDAR_HPP_
