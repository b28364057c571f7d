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
#ifndef HYLDA_CONFIG_HPP_
#define HYLDA_CONFIG_HPP_

// Flat "key = value" configuration with [section] headers, plus the typed
// training and corpus configurations built from it.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

#include "hylda/synthlidar.hpp"

namespace hylda {

class Config {
 public:
  Config() = default;
  static Config load(const std::filesystem::path& path);
  static Config parse(const std::string& text);

  /// "section.key=value"; overrides win over file values.
  void set_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// UsageError naming the first key outside `known`.
  void check_keys(const std::vector<std::string>& known_sections_and_keys) const;
  std::vector<std::string> keys() const;

 private:
  boost::property_tree::ptree tree_;
};

enum class Mode { kHylda, kNaive, kFinetune, kOracle };
const char* to_string(Mode m);
Mode parse_mode(const std::string& s);

struct TrainConfig {
  double beta = 0.1;
  double gamma = 1.0;
  double lr_seg = 0.01;   // Adam, segmentation side
  double lr_i2i = 0.002;  // plain SGD, translation engine
  int epochs = 20;
  int pretrain_epochs = 20;
  int batch_size = 2;
  std::uint64_t seed = 0;
  int labeled_subset_size = 10;
  Mode mode = Mode::kHylda;

  bool use_hylda_i2i = true;   // identity-route self-supervision + skips + stats
  bool use_aux_selfsup = true;
  bool use_semisup = true;
  bool use_unsup_step = true;
  bool use_stats_loss = true;
  bool dual_head_disc = true;
  bool update_disc_in_unsup = false;
  bool augment = true;
  // Steps 4 and 6 keep their own Adam moments for f_target instead of
  // sharing the Step-5 optimizer state.
  bool per_step_optimizers = true;
  // Translation-engine optimizer: "sgd" (optionally with momentum) or "adam".
  std::string i2i_optimizer = "sgd";
  double i2i_momentum = 0.0;
  double i2i_beta1 = 0.5;
  // Gaussian noise added to every discriminator input (0 disables).
  double disc_noise = 0.0;
  // Discriminator learning rate as a multiple of lr_i2i.
  double disc_lr_scale = 1.0;
  // Eq-(7)-style weighting alphas from source frequencies (else from the
  // labeled target subset).
  bool unsup_alpha_from_source = true;

  int num_classes = synth::kNumObjectClasses;  // K, background excluded
  std::array<int, 3> gen_widths = {8, 16, 32};
  std::array<int, 4> disc_widths = {8, 16, 32, 32};
  std::array<int, 3> seg_widths = {16, 32, 32};
  int image_pool_size = 16;

  void validate() const;
  /// Reads the [train] and [model] sections; HYLDA_SEED overrides train.seed.
  static TrainConfig from(const Config& cfg);
  std::string to_text() const;
};

synth::DomainPairSpec pair_spec_from(const Config& cfg);
std::string to_text(const synth::DomainPairSpec& pair);

// All keys the config reader understands, as "section.key".
std::vector<std::string> known_config_keys();

}  // namespace hylda

#endif  // HYLDA_CONFIG_HPP_
