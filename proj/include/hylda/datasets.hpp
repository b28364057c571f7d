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
#ifndef HYLDA_DATASETS_HPP_
#define HYLDA_DATASETS_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hylda/rangeview.hpp"

namespace hylda::data {

enum class Domain { kSource, kTarget };
enum class Split { kTrain, kVal };

const char* to_string(Domain d);
const char* to_string(Split s);
Domain parse_domain(const std::string& s);
Split parse_split(const std::string& s);

struct FrameRecord {
  std::string frame_id;
  Split split = Split::kTrain;
  std::filesystem::path frame_path;  // relative to the manifest directory
  std::filesystem::path label_path;
  std::uint64_t seed = 0;
  bool labeled = false;
};

/// Manifest-backed index of one domain. Text format, one record per line:
///   frame_id split frame_path label_path seed labeled
/// with '#' header lines carrying the domain tag.
struct DatasetIndex {
  Domain domain = Domain::kSource;
  std::filesystem::path root;
  std::vector<FrameRecord> records;

  std::vector<const FrameRecord*> split(Split s) const;
  std::filesystem::path resolve(const std::filesystem::path& rel) const { return root / rel; }

  void save(const std::filesystem::path& manifest) const;
  /// Loads and checks that every referenced file exists; a source index
  /// must have every train frame labeled.
  static DatasetIndex load(const std::filesystem::path& manifest);
};

struct SubsetSpec {
  std::vector<std::size_t> sizes;  // strictly ascending
  std::uint64_t seed = 0;
};

/// Nested uniform labeled subsets of the train split: subset i is a prefix
/// of one seeded permutation, so subset_i is contained in subset_{i+1}.
std::vector<std::vector<std::string>> sample_nested_subsets(const DatasetIndex& index,
                                                            const SubsetSpec& spec);
std::vector<std::vector<std::string>> sample_nested_subsets(const std::vector<std::string>& train_ids,
                                                            const SubsetSpec& spec);

void save_subset(const std::filesystem::path& path, const std::vector<std::string>& ids);
std::vector<std::string> load_subset(const std::filesystem::path& path);

/// Raw-id to class-id lookup. Ids without an entry map to 0 (background).
class LabelRemap {
 public:
  LabelRemap() { table_.fill(0); }
  LabelRemap(std::uint8_t num_classes, const std::map<std::uint8_t, std::uint8_t>& mapping);
  static LabelRemap identity(std::uint8_t num_classes);

  std::uint8_t operator()(std::uint8_t raw) const { return table_[raw]; }

 private:
  std::array<std::uint8_t, 256> table_{};
};

LabelMap remap_labels(const LabelMap& raw, const LabelRemap& mapping);

/// Frame indices for one training step. `source` indexes the source train
/// set, `target` the unlabeled target pool (all target train frames), and
/// `labeled` positions within the labeled-subset list.
struct StepBatch {
  std::vector<std::size_t> source;
  std::vector<std::size_t> target;
  std::vector<std::size_t> labeled;
};

/// One epoch of aligned batches. The epoch is driven by the source set
/// (ceil(n_source / batch_size) steps); the target pool and the labeled
/// subset are each shuffled once per (seed, epoch) and cycled.
std::vector<StepBatch> make_batches(std::size_t n_source, std::size_t n_target,
                                    std::size_t n_labeled, std::size_t batch_size,
                                    std::uint64_t seed, std::size_t epoch,
                                    bool require_labeled);

}  // namespace hylda::data

#endif  // HYLDA_DATASETS_HPP_
