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
#ifndef HYLDA_CHECKPOINT_HPP_
#define HYLDA_CHECKPOINT_HPP_

// Versioned checkpoint container: string metadata plus named float tensors,
// all little-endian, written in a fixed order so identical weights give
// identical bytes.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

namespace hylda {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, torch::Tensor>> tensors;

  void add_module(const std::string& prefix, const torch::nn::Module& module);
  /// Copies tensors named `prefix.*` into the module's parameters; every
  /// parameter must be present with a matching shape.
  void load_module(const std::string& prefix, torch::nn::Module& module) const;
  bool has_prefix(const std::string& prefix) const;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

/// FNV-1a over every parameter's bytes in registration order.
std::uint64_t parameter_hash(const torch::nn::Module& module);

}  // namespace hylda

#endif  // HYLDA_CHECKPOINT_HPP_
