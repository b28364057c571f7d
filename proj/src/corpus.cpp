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
#include "hylda/corpus.hpp"

#include <map>

#include "hylda/common.hpp"
#include "hylda/tensor_bridge.hpp"

namespace hylda {
namespace {

struct RawSplit {
  std::vector<RangeImage> images;
  std::vector<LabelMap> labels;
  std::vector<std::string> ids;
};

RawSplit read_split(const data::DatasetIndex& index, data::Split split) {
  RawSplit out;
  for (const auto* r : index.split(split)) {
    out.images.push_back(read_frame(index.resolve(r->frame_path)));
    out.labels.push_back(read_labels(index.resolve(r->label_path)));
    out.ids.push_back(r->frame_id);
  }
  if (out.images.empty()) {
    throw Error(std::string("no ") + data::to_string(split) + " frames in the " +
                data::to_string(index.domain) + " manifest");
  }
  return out;
}

DomainSplit to_split(const RawSplit& raw, const NormStats& norm) {
  std::vector<RangeImage> normed;
  normed.reserve(raw.images.size());
  for (const auto& img : raw.images) normed.push_back(normalize(img, norm));
  DomainSplit s;
  s.images = to_tensor(normed);
  s.labels = to_tensor(raw.labels);
  s.valid = valid_tensor(normed);
  s.ids = raw.ids;
  return s;
}

data::DatasetIndex load_domain(const std::filesystem::path& data_dir, const char* name) {
  return data::DatasetIndex::load(data_dir / name / "manifest.txt");
}

}  // namespace

DomainSplit DomainSplit::select(const std::vector<std::size_t>& rows) const {
  std::vector<std::int64_t> idx(rows.begin(), rows.end());
  const auto t = torch::tensor(idx, torch::kInt64);
  DomainSplit out;
  out.images = images.index_select(0, t);
  out.labels = labels.index_select(0, t);
  out.valid = valid.index_select(0, t);
  for (std::size_t r : rows) out.ids.push_back(ids.at(r));
  return out;
}

std::vector<std::size_t> DomainSplit::rows_of(const std::vector<std::string>& frame_ids) const {
  std::map<std::string, std::size_t> lookup;
  for (std::size_t i = 0; i < ids.size(); ++i) lookup[ids[i]] = i;
  std::vector<std::size_t> rows;
  for (const auto& id : frame_ids) {
    const auto it = lookup.find(id);
    if (it == lookup.end()) throw Error("unknown frame id " + id);
    rows.push_back(it->second);
  }
  return rows;
}

void precompute_corpus_stats(const std::filesystem::path& data_dir) {
  const auto src = load_domain(data_dir, "source");
  const auto trg = load_domain(data_dir, "target");
  const RawSplit src_train = read_split(src, data::Split::kTrain);
  const RawSplit trg_train = read_split(trg, data::Split::kTrain);

  std::vector<RangeImage> both = src_train.images;
  both.insert(both.end(), trg_train.images.begin(), trg_train.images.end());
  const NormStats norm = compute_norm_stats(both);
  norm.save(norm_stats_path(data_dir));

  auto normalized = [&norm](const std::vector<RangeImage>& raw) {
    std::vector<RangeImage> out;
    for (const auto& img : raw) out.push_back(normalize(img, norm));
    return out;
  };
  stats::precompute_stats(normalized(src_train.images)).save(source_stats_path(data_dir));
  stats::precompute_stats(normalized(trg_train.images)).save(target_stats_path(data_dir));
}

Corpus load_corpus(const std::filesystem::path& data_dir) {
  for (const auto& p : {norm_stats_path(data_dir), source_stats_path(data_dir), target_stats_path(data_dir)}) {
    if (!std::filesystem::exists(p)) {
      throw UsageError("missing " + p.string() + " (run precompute-stats first)");
    }
  }
  Corpus c;
  c.root = data_dir;
  c.norm = NormStats::load(norm_stats_path(data_dir));
  const auto src = load_domain(data_dir, "source");
  const auto trg = load_domain(data_dir, "target");
  c.source_train = to_split(read_split(src, data::Split::kTrain), c.norm);
  c.source_val = to_split(read_split(src, data::Split::kVal), c.norm);
  c.target_train = to_split(read_split(trg, data::Split::kTrain), c.norm);
  c.target_val = to_split(read_split(trg, data::Split::kVal), c.norm);
  c.source_stats = stats::DomainStats::load(source_stats_path(data_dir));
  c.target_stats = stats::DomainStats::load(target_stats_path(data_dir));
  if (c.source_train.images.sizes().slice(1) != c.target_train.images.sizes().slice(1)) {
    throw Error("source and target range images differ in shape");
  }
  return c;
}

}  // namespace hylda
