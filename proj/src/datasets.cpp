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
#include "hylda/datasets.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "hylda/common.hpp"

namespace hylda::data {

const char* to_string(Domain d) { return d == Domain::kSource ? "source" : "target"; }
const char* to_string(Split s) { return s == Split::kTrain ? "train" : "val"; }

Domain parse_domain(const std::string& s) {
  if (s == "source") return Domain::kSource;
  if (s == "target") return Domain::kTarget;
  throw Error("unknown domain tag '" + s + "'");
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  throw Error("unknown split tag '" + s + "'");
}

std::vector<const FrameRecord*> DatasetIndex::split(Split s) const {
  std::vector<const FrameRecord*> out;
  for (const auto& r : records) {
    if (r.split == s) out.push_back(&r);
  }
  return out;
}

void DatasetIndex::save(const std::filesystem::path& manifest) const {
  std::ofstream out(manifest);
  if (!out) throw Error("cannot write " + manifest.string());
  out << "# hylda manifest v1\n";
  out << "# domain " << to_string(domain) << '\n';
  out << "# frame_id split frame_path label_path seed labeled\n";
  for (const auto& r : records) {
    out << r.frame_id << ' ' << to_string(r.split) << ' ' << r.frame_path.generic_string()
        << ' ' << r.label_path.generic_string() << ' ' << r.seed << ' '
        << (r.labeled ? 1 : 0) << '\n';
  }
  if (!out) throw Error("write failed: " + manifest.string());
}

DatasetIndex DatasetIndex::load(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error("cannot open manifest " + manifest.string());
  DatasetIndex index;
  index.root = manifest.parent_path();
  bool have_domain = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key, value;
      hs >> key >> value;
      if (key == "domain") {
        index.domain = parse_domain(value);
        have_domain = true;
      }
      continue;
    }
    std::istringstream ls(line);
    FrameRecord r;
    std::string split, frame, label;
    int labeled = 0;
    if (!(ls >> r.frame_id >> split >> frame >> label >> r.seed >> labeled)) {
      throw Error("malformed manifest line: " + line);
    }
    r.split = parse_split(split);
    r.frame_path = frame;
    r.label_path = label;
    r.labeled = labeled != 0;
    index.records.push_back(std::move(r));
  }
  if (!have_domain) throw Error("manifest lacks a domain header: " + manifest.string());
  for (const auto& r : index.records) {
    for (const auto& p : {r.frame_path, r.label_path}) {
      if (!std::filesystem::exists(index.resolve(p))) {
        throw Error("manifest references missing file " + index.resolve(p).string());
      }
    }
    if (index.domain == Domain::kSource && r.split == Split::kTrain && !r.labeled) {
      throw Error("source train frame " + r.frame_id + " is not labeled");
    }
  }
  return index;
}

std::vector<std::vector<std::string>> sample_nested_subsets(const std::vector<std::string>& train_ids,
                                                            const SubsetSpec& spec) {
  for (std::size_t i = 0; i < spec.sizes.size(); ++i) {
    if (i > 0 && spec.sizes[i] <= spec.sizes[i - 1]) {
      throw Error("subset sizes must be strictly ascending");
    }
    if (spec.sizes[i] > train_ids.size()) {
      throw Error("subset size " + std::to_string(spec.sizes[i]) + " exceeds the " +
                  std::to_string(train_ids.size()) + " available frames");
    }
  }
  std::vector<std::size_t> order(train_ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(mix_seed(spec.seed, 0x5b5e7));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::string>> out;
  for (std::size_t size : spec.sizes) {
    std::vector<std::string> ids;
    for (std::size_t k = 0; k < size; ++k) ids.push_back(train_ids[order[k]]);
    out.push_back(std::move(ids));
  }
  return out;
}

std::vector<std::vector<std::string>> sample_nested_subsets(const DatasetIndex& index,
                                                            const SubsetSpec& spec) {
  std::vector<std::string> ids;
  for (const auto* r : index.split(Split::kTrain)) ids.push_back(r->frame_id);
  return sample_nested_subsets(ids, spec);
}

void save_subset(const std::filesystem::path& path, const std::vector<std::string>& ids) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& id : ids) out << id << '\n';
}

std::vector<std::string> load_subset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open subset file " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

LabelRemap::LabelRemap(std::uint8_t num_classes,
                       const std::map<std::uint8_t, std::uint8_t>& mapping) {
  table_.fill(0);
  for (const auto& [raw, cls] : mapping) {
    if (cls > num_classes) throw Error("remap target exceeds the class count");
    table_[raw] = cls;
  }
}

LabelRemap LabelRemap::identity(std::uint8_t num_classes) {
  std::map<std::uint8_t, std::uint8_t> m;
  for (int i = 0; i <= num_classes; ++i) {
    m[static_cast<std::uint8_t>(i)] = static_cast<std::uint8_t>(i);
  }
  return LabelRemap(num_classes, m);
}

LabelMap remap_labels(const LabelMap& raw, const LabelRemap& mapping) {
  LabelMap out = raw;
  for (auto& id : out.ids) id = mapping(id);
  return out;
}

std::vector<StepBatch> make_batches(std::size_t n_source, std::size_t n_target,
                                    std::size_t n_labeled, std::size_t batch_size,
                                    std::uint64_t seed, std::size_t epoch,
                                    bool require_labeled) {
  if (batch_size == 0) throw Error("batch_size must be at least 1");
  if (n_source == 0) throw Error("no source frames to batch");
  if (require_labeled && n_labeled == 0) {
    throw Error("semi-supervision enabled but the labeled subset is empty");
  }
  std::mt19937_64 rng(mix_seed(seed, 0xba7c0000ULL + epoch));
  auto permutation = [&rng](std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    return p;
  };
  const auto src = permutation(n_source);
  const auto trg = permutation(n_target);
  const auto lab = permutation(n_labeled);

  const std::size_t steps = (n_source + batch_size - 1) / batch_size;
  std::vector<StepBatch> out(steps);
  std::size_t trg_cursor = 0;
  std::size_t lab_cursor = 0;
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t begin = s * batch_size;
    const std::size_t end = std::min(n_source, begin + batch_size);
    StepBatch& b = out[s];
    for (std::size_t i = begin; i < end; ++i) b.source.push_back(src[i]);
    const std::size_t n = b.source.size();
    for (std::size_t i = 0; i < n && n_target > 0; ++i) {
      b.target.push_back(trg[trg_cursor++ % n_target]);
    }
    for (std::size_t i = 0; i < n && n_labeled > 0; ++i) {
      b.labeled.push_back(lab[lab_cursor++ % n_labeled]);
    }
  }
  return out;
}

}  // namespace hylda::data
