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
#include "hylda/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <iomanip>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

#include "hylda/common.hpp"

namespace hylda {
namespace {

const std::array<const char*, 6> kCountKeys = {"count_ground",   "count_vehicle",
                                               "count_pedestrian", "count_building",
                                               "count_pole",     "count_vegetation"};

template <std::size_t N>
std::array<int, N> parse_widths(const std::string& text, const std::string& key) {
  std::array<int, N> out{};
  std::istringstream in(text);
  std::string item;
  std::size_t i = 0;
  while (std::getline(in, item, ',')) {
    if (i >= N) break;
    try {
      out[i++] = std::stoi(item);
    } catch (const std::exception&) {
      throw UsageError("bad integer list for " + key + ": " + text);
    }
  }
  if (i != N) throw UsageError(key + " needs " + std::to_string(N) + " comma-separated widths");
  for (int w : out) {
    if (w < 1) throw UsageError(key + " widths must be positive");
  }
  return out;
}

template <std::size_t N>
std::string join(const std::array<int, N>& v) {
  std::string s;
  for (std::size_t i = 0; i < N; ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

void read_domain(const Config& cfg, const std::string& sec, synth::DomainSpec& d) {
  auto key = [&](const char* k) { return sec + "." + k; };
  d.name = sec;
  d.sensor.beams = static_cast<int>(cfg.get_int(key("beams"), d.sensor.beams));
  d.sensor.width = static_cast<int>(cfg.get_int(key("width"), d.sensor.width));
  d.sensor.fov_up = cfg.get_double(key("fov_up"), d.sensor.fov_up);
  d.sensor.fov_down = cfg.get_double(key("fov_down"), d.sensor.fov_down);
  d.sensor.max_range = cfg.get_double(key("max_range"), d.sensor.max_range);
  d.sensor.noise_sigma = cfg.get_double(key("noise_sigma"), d.sensor.noise_sigma);
  d.sensor.dropout_prob = cfg.get_double(key("dropout_prob"), d.sensor.dropout_prob);
  d.remission_gain = cfg.get_double(key("remission_gain"), d.remission_gain);
  d.n_train = static_cast<int>(cfg.get_int(key("n_train"), d.n_train));
  d.n_val = static_cast<int>(cfg.get_int(key("n_val"), d.n_val));
  d.scene.extent = cfg.get_double(key("extent"), d.scene.extent);
  d.scene.sensor_height = cfg.get_double(key("sensor_height"), d.scene.sensor_height);
  for (std::size_t c = 0; c < kCountKeys.size(); ++c) {
    d.scene.counts[c] = static_cast<int>(cfg.get_int(key(kCountKeys[c]), d.scene.counts[c]));
  }
}

void write_domain(std::ostream& os, const synth::DomainSpec& d) {
  os << "beams = " << d.sensor.beams << "\nwidth = " << d.sensor.width
     << "\nfov_up = " << fmt(d.sensor.fov_up) << "\nfov_down = " << fmt(d.sensor.fov_down)
     << "\nmax_range = " << fmt(d.sensor.max_range)
     << "\nnoise_sigma = " << fmt(d.sensor.noise_sigma)
     << "\ndropout_prob = " << fmt(d.sensor.dropout_prob)
     << "\nremission_gain = " << fmt(d.remission_gain) << "\nn_train = " << d.n_train
     << "\nn_val = " << d.n_val << "\nextent = " << fmt(d.scene.extent)
     << "\nsensor_height = " << fmt(d.scene.sensor_height) << '\n';
  for (std::size_t c = 0; c < kCountKeys.size(); ++c) {
    os << kCountKeys[c] << " = " << d.scene.counts[c] << '\n';
  }
}

}  // namespace

Config Config::load(const std::filesystem::path& path) {
  Config c;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), c.tree_);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw UsageError("cannot read config " + path.string() + ": " + e.message());
  }
  return c;
}

Config Config::parse(const std::string& text) {
  Config c;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, c.tree_);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw UsageError("cannot parse config: " + e.message());
  }
  return c;
}

void Config::set(const std::string& key, const std::string& value) { tree_.put(key, value); }

void Config::set_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0 || assignment.find('.') > eq) {
    throw UsageError("override must look like section.key=value: " + assignment);
  }
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

bool Config::has(const std::string& key) const { return tree_.get_optional<std::string>(key).has_value(); }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return tree_.get<std::string>(key, fallback);
}

double Config::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const std::string s = get_string(key, "");
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key " + key + " is not a number: '" + s + "'");
  }
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string s = get_string(key, "");
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key " + key + " is not an integer: '" + s + "'");
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  std::string s = get_string(key, "");
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw UsageError("config key " + key + " is not a boolean: '" + s + "'");
}

std::vector<std::string> Config::keys() const {
  std::vector<std::string> out;
  for (const auto& [section, sub] : tree_) {
    if (sub.empty()) {
      out.push_back(section);
      continue;
    }
    for (const auto& [k, v] : sub) out.push_back(section + "." + k);
  }
  return out;
}

void Config::check_keys(const std::vector<std::string>& known) const {
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& k : keys()) {
    if (!allowed.contains(k)) throw UsageError("unknown config key '" + k + "'");
  }
}

const char* to_string(Mode m) {
  switch (m) {
    case Mode::kHylda: return "hylda";
    case Mode::kNaive: return "naive";
    case Mode::kFinetune: return "finetune";
    case Mode::kOracle: return "oracle";
  }
  return "?";
}

Mode parse_mode(const std::string& s) {
  if (s == "hylda") return Mode::kHylda;
  if (s == "naive") return Mode::kNaive;
  if (s == "finetune") return Mode::kFinetune;
  if (s == "oracle") return Mode::kOracle;
  throw UsageError("unknown mode '" + s + "' (expected hylda|naive|finetune|oracle)");
}

void TrainConfig::validate() const {
  if (beta < 0.0 || gamma < 0.0) throw UsageError("beta and gamma must be non-negative");
  if (!(lr_seg > 0.0) || !(lr_i2i > 0.0)) throw UsageError("learning rates must be positive");
  if (epochs < 1 || pretrain_epochs < 1) throw UsageError("epochs must be at least 1");
  if (batch_size < 1) throw UsageError("batch_size must be at least 1");
  if (labeled_subset_size < 0) throw UsageError("labeled_subset_size must be >= 0");
  if (num_classes < 1 || num_classes > 254) throw UsageError("num_classes out of range");
  if (image_pool_size < 0) throw UsageError("image_pool_size must be >= 0");
  if (i2i_optimizer != "sgd" && i2i_optimizer != "adam") {
    throw UsageError("i2i_optimizer must be sgd or adam, got '" + i2i_optimizer + "'");
  }
  if (i2i_momentum < 0.0 || i2i_momentum >= 1.0) throw UsageError("i2i_momentum must be in [0, 1)");
  if (disc_noise < 0.0) throw UsageError("disc_noise must be >= 0");
  if (disc_lr_scale <= 0.0) throw UsageError("disc_lr_scale must be > 0");
}

TrainConfig TrainConfig::from(const Config& cfg) {
  TrainConfig t;
  t.beta = cfg.get_double("train.beta", t.beta);
  t.gamma = cfg.get_double("train.gamma", t.gamma);
  t.lr_seg = cfg.get_double("train.lr_seg", t.lr_seg);
  t.lr_i2i = cfg.get_double("train.lr_i2i", t.lr_i2i);
  t.epochs = static_cast<int>(cfg.get_int("train.epochs", t.epochs));
  t.pretrain_epochs = static_cast<int>(cfg.get_int("train.pretrain_epochs", t.pretrain_epochs));
  t.batch_size = static_cast<int>(cfg.get_int("train.batch_size", t.batch_size));
  t.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed", static_cast<std::int64_t>(t.seed)));
  t.labeled_subset_size =
      static_cast<int>(cfg.get_int("train.labeled_subset_size", t.labeled_subset_size));
  t.mode = parse_mode(cfg.get_string("train.mode", to_string(t.mode)));
  t.use_hylda_i2i = cfg.get_bool("train.use_hylda_i2i", t.use_hylda_i2i);
  t.use_aux_selfsup = cfg.get_bool("train.use_aux_selfsup", t.use_aux_selfsup);
  t.use_semisup = cfg.get_bool("train.use_semisup", t.use_semisup);
  t.use_unsup_step = cfg.get_bool("train.use_unsup_step", t.use_unsup_step);
  t.use_stats_loss = cfg.get_bool("train.use_stats_loss", t.use_stats_loss);
  t.dual_head_disc = cfg.get_bool("train.dual_head_disc", t.dual_head_disc);
  t.update_disc_in_unsup = cfg.get_bool("train.update_disc_in_unsup", t.update_disc_in_unsup);
  t.augment = cfg.get_bool("train.augment", t.augment);
  t.per_step_optimizers = cfg.get_bool("train.per_step_optimizers", t.per_step_optimizers);
  t.i2i_optimizer = cfg.get_string("train.i2i_optimizer", t.i2i_optimizer);
  t.i2i_momentum = cfg.get_double("train.i2i_momentum", t.i2i_momentum);
  t.i2i_beta1 = cfg.get_double("train.i2i_beta1", t.i2i_beta1);
  t.disc_noise = cfg.get_double("train.disc_noise", t.disc_noise);
  t.disc_lr_scale = cfg.get_double("train.disc_lr_scale", t.disc_lr_scale);
  t.unsup_alpha_from_source = cfg.get_bool("train.unsup_alpha_from_source", t.unsup_alpha_from_source);
  t.num_classes = static_cast<int>(cfg.get_int("model.num_classes", t.num_classes));
  if (cfg.has("model.gen_widths")) t.gen_widths = parse_widths<3>(cfg.get_string("model.gen_widths", ""), "model.gen_widths");
  if (cfg.has("model.disc_widths")) t.disc_widths = parse_widths<4>(cfg.get_string("model.disc_widths", ""), "model.disc_widths");
  if (cfg.has("model.seg_widths")) t.seg_widths = parse_widths<3>(cfg.get_string("model.seg_widths", ""), "model.seg_widths");
  t.image_pool_size = static_cast<int>(cfg.get_int("model.image_pool_size", t.image_pool_size));
  if (const char* env = std::getenv("HYLDA_SEED"); env != nullptr && *env != '\0') {
    try {
      t.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError(std::string("HYLDA_SEED is not an unsigned integer: ") + env);
    }
  }
  t.validate();
  return t;
}

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  auto b = [](bool v) { return v ? "true" : "false"; };
  os << "[train]\n"
     << "mode = " << to_string(mode) << "\nbeta = " << fmt(beta) << "\ngamma = " << fmt(gamma)
     << "\nlr_seg = " << fmt(lr_seg) << "\nlr_i2i = " << fmt(lr_i2i) << "\nepochs = " << epochs
     << "\npretrain_epochs = " << pretrain_epochs << "\nbatch_size = " << batch_size
     << "\nseed = " << seed << "\nlabeled_subset_size = " << labeled_subset_size
     << "\nuse_hylda_i2i = " << b(use_hylda_i2i) << "\nuse_aux_selfsup = " << b(use_aux_selfsup)
     << "\nuse_semisup = " << b(use_semisup) << "\nuse_unsup_step = " << b(use_unsup_step)
     << "\nuse_stats_loss = " << b(use_stats_loss) << "\ndual_head_disc = " << b(dual_head_disc)
     << "\nupdate_disc_in_unsup = " << b(update_disc_in_unsup) << "\naugment = " << b(augment)
     << "\nper_step_optimizers = " << b(per_step_optimizers)
     << "\ni2i_optimizer = " << i2i_optimizer << "\ni2i_momentum = " << fmt(i2i_momentum)
     << "\ni2i_beta1 = " << fmt(i2i_beta1) << "\ndisc_noise = " << fmt(disc_noise)
     << "\ndisc_lr_scale = " << fmt(disc_lr_scale)
     << "\nunsup_alpha_from_source = " << b(unsup_alpha_from_source) << "\n\n[model]\n"
     << "num_classes = " << num_classes << "\ngen_widths = " << join(gen_widths)
     << "\ndisc_widths = " << join(disc_widths) << "\nseg_widths = " << join(seg_widths)
     << "\nimage_pool_size = " << image_pool_size << '\n';
  return os.str();
}

synth::DomainPairSpec pair_spec_from(const Config& cfg) {
  synth::DomainPairSpec pair = synth::default_pair_spec();
  pair.image_height = static_cast<int>(cfg.get_int("pair.image_height", pair.image_height));
  pair.image_width = static_cast<int>(cfg.get_int("pair.image_width", pair.image_width));
  pair.seed = static_cast<std::uint64_t>(cfg.get_int("pair.seed", static_cast<std::int64_t>(pair.seed)));
  read_domain(cfg, "source", pair.source);
  read_domain(cfg, "target", pair.target);
  try {
    pair.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return pair;
}

std::string to_text(const synth::DomainPairSpec& pair) {
  std::ostringstream os;
  os << "[pair]\nimage_height = " << pair.image_height << "\nimage_width = " << pair.image_width
     << "\nseed = " << pair.seed << "\n\n[source]\n";
  write_domain(os, pair.source);
  os << "\n[target]\n";
  write_domain(os, pair.target);
  return os.str();
}

std::vector<std::string> known_config_keys() {
  std::vector<std::string> k = {
      "pair.image_height", "pair.image_width", "pair.seed",
      "train.mode", "train.beta", "train.gamma", "train.lr_seg", "train.lr_i2i",
      "train.epochs", "train.pretrain_epochs", "train.batch_size", "train.seed",
      "train.labeled_subset_size", "train.use_hylda_i2i", "train.use_aux_selfsup",
      "train.use_semisup", "train.use_unsup_step", "train.use_stats_loss",
      "train.dual_head_disc", "train.update_disc_in_unsup", "train.augment",
      "train.per_step_optimizers", "train.i2i_optimizer", "train.i2i_momentum", "train.i2i_beta1",
      "train.disc_noise", "train.disc_lr_scale",
      "train.unsup_alpha_from_source", "model.num_classes", "model.gen_widths",
      "model.disc_widths", "model.seg_widths", "model.image_pool_size"};
  for (const char* sec : {"source", "target"}) {
    for (const char* key : {"beams", "width", "fov_up", "fov_down", "max_range", "noise_sigma",
                            "dropout_prob", "remission_gain", "n_train", "n_val", "extent",
                            "sensor_height"}) {
      k.push_back(std::string(sec) + "." + key);
    }
    for (const char* key : kCountKeys) k.push_back(std::string(sec) + "." + key);
  }
  return k;
}

}  // namespace hylda
