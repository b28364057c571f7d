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
#include "hylda/checkpoint.hpp"

#include <fstream>

#include "hylda/common.hpp"

namespace hylda {
namespace {

void write_string(std::ostream& os, const std::string& s) {
  io::write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
  const auto n = io::read_u32(is);
  if (n > (1u << 20)) throw Error("implausible string length in checkpoint");
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw Error("truncated checkpoint");
  return s;
}

}  // namespace

void Checkpoint::add_module(const std::string& prefix, const torch::nn::Module& module) {
  for (const auto& item : module.named_parameters(/*recurse=*/true)) {
    tensors.emplace_back(prefix + "." + item.key(), item.value().detach().clone());
  }
}

void Checkpoint::load_module(const std::string& prefix, torch::nn::Module& module) const {
  std::map<std::string, const torch::Tensor*> lookup;
  for (const auto& [name, t] : tensors) lookup[name] = &t;
  torch::NoGradGuard no_grad;
  for (auto& item : module.named_parameters(true)) {
    const std::string name = prefix + "." + item.key();
    const auto it = lookup.find(name);
    if (it == lookup.end()) throw Error("checkpoint lacks parameter " + name);
    if (it->second->sizes() != item.value().sizes()) {
      throw Error("checkpoint shape mismatch for " + name);
    }
    item.value().copy_(*it->second);
  }
}

bool Checkpoint::has_prefix(const std::string& prefix) const {
  for (const auto& [name, t] : tensors) {
    if (name.rfind(prefix + ".", 0) == 0) return true;
  }
  return false;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  io::write_magic(out, "HYLC");
  io::write_u32(out, kCheckpointVersion);
  io::write_u32(out, static_cast<std::uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {
    write_string(out, k);
    write_string(out, v);
  }
  io::write_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    write_string(out, name);
    const auto c = t.detach().to(torch::kFloat32).contiguous();
    io::write_u32(out, static_cast<std::uint32_t>(c.dim()));
    for (auto d : c.sizes()) io::write_u32(out, static_cast<std::uint32_t>(d));
    const float* p = c.data_ptr<float>();
    for (std::int64_t i = 0; i < c.numel(); ++i) io::write_f32(out, p[i]);
  }
  if (!out) throw Error("write failed: " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  io::expect_magic(in, "HYLC", path);
  const auto version = io::read_u32(in);
  if (version != kCheckpointVersion) {
    throw Error("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  const auto n_meta = io::read_u32(in);
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = read_string(in);
    ck.meta[k] = read_string(in);
  }
  const auto n_tensors = io::read_u32(in);
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = read_string(in);
    const auto dim = io::read_u32(in);
    if (dim > 8) throw Error("implausible tensor rank in checkpoint");
    std::vector<std::int64_t> sizes(dim);
    for (auto& s : sizes) s = io::read_u32(in);
    auto t = torch::empty(sizes, torch::kFloat32);
    float* p = t.data_ptr<float>();
    for (std::int64_t k = 0; k < t.numel(); ++k) p[k] = io::read_f32(in);
    ck.tensors.emplace_back(std::move(name), std::move(t));
  }
  return ck;
}

std::uint64_t parameter_hash(const torch::nn::Module& module) {
  Fnv1a h;
  for (const auto& item : module.named_parameters(true)) {
    const auto c = item.value().detach().contiguous();
    h.update(item.key());
    h.update(std::span(static_cast<const std::byte*>(c.data_ptr()),
                       static_cast<std::size_t>(c.numel()) * c.element_size()));
  }
  return h.digest();
}

}  // namespace hylda
