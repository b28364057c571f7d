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
#include "hylda/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "hylda/checkpoint.hpp"
#include "hylda/common.hpp"
#include "hylda/datasets.hpp"
#include "hylda/evaluate.hpp"
#include "hylda/synthlidar.hpp"

namespace hylda::train {
namespace {

constexpr std::uint64_t kStreamEngine = 0x101;
constexpr std::uint64_t kStreamSegInit = 0x102;
constexpr std::uint64_t kStreamAux = 0x103;
constexpr std::uint64_t kStreamAug = 0x104;
constexpr std::uint64_t kStreamPoolTarget = 0x105;
constexpr std::uint64_t kStreamPoolSource = 0x106;
constexpr std::uint64_t kStreamBatches = 0x107;
constexpr std::uint64_t kStreamSubset = 0x108;
constexpr std::uint64_t kStreamPretrain = 0x109;

torch::Tensor take(const torch::Tensor& t, const std::vector<std::size_t>& rows) {
  std::vector<std::int64_t> idx(rows.begin(), rows.end());
  return t.index_select(0, torch::tensor(idx, torch::kInt64));
}

void check_finite(const torch::Tensor& loss, const char* step, const char* name) {
  if (!std::isfinite(loss.item<double>())) {
    throw Error(std::string("non-finite ") + name + " in step " + step);
  }
}

seg::SegOptions seg_options(const TrainConfig& cfg, const Corpus& corpus) {
  seg::SegOptions o;
  o.channels = static_cast<int>(corpus.source_train.images.size(1));
  o.num_classes = cfg.num_classes;
  o.widths = cfg.seg_widths;
  return o;
}

i2i::TranslationEngine make_engine(const TrainConfig& cfg, int channels) {
  i2i::EngineOptions o;
  o.channels = channels;
  o.gen_widths = cfg.gen_widths;
  o.disc_widths = cfg.disc_widths;
  o.use_skips = cfg.use_hylda_i2i;
  o.dual_head = cfg.dual_head_disc;
  torch::manual_seed(mix_seed(cfg.seed, kStreamEngine));
  return i2i::TranslationEngine(o);
}

seg::SegNet make_target(const TrainConfig& cfg, const Corpus& corpus, const seg::SegNet* ref) {
  torch::manual_seed(mix_seed(cfg.seed, kStreamSegInit));
  seg::SegNet net(seg_options(cfg, corpus), seg::Role::kTarget);
  if (ref != nullptr) {
    if (ref->options().num_classes != cfg.num_classes) {
      throw Error("reference checkpoint has " + std::to_string(ref->options().num_classes) +
                  " classes, config expects " + std::to_string(cfg.num_classes));
    }
    net.copy_weights_from(*ref);
  }
  return net;
}

std::unique_ptr<torch::optim::Optimizer> make_i2i_optimizer(const TrainConfig& cfg,
                                                            std::vector<torch::Tensor> params, double lr) {
  if (cfg.i2i_optimizer == "adam") {
    return std::make_unique<torch::optim::Adam>(params,
                                                torch::optim::AdamOptions(lr).betas({cfg.i2i_beta1, 0.999}));
  }
  return std::make_unique<torch::optim::SGD>(params, torch::optim::SGDOptions(lr).momentum(cfg.i2i_momentum));
}

torch::Tensor weights_from(const torch::Tensor& labels, int num_classes_with_bg) {
  if (!labels.defined() || labels.numel() == 0) {
    return torch::zeros({num_classes_with_bg}, torch::kFloat32);
  }
  const auto counts = seg::class_counts(labels, num_classes_with_bg);
  return seg::class_weights(counts).to(torch::kFloat32);
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

struct LossMeans {
  LossValues sum{};
  std::array<int, kNumLosses> n{};
  void add(const LossValues& v) {
    for (int i = 0; i < kNumLosses; ++i) {
      if (!std::isnan(v[i])) {
        sum[i] += v[i];
        ++n[i];
      }
    }
  }
  LossValues mean() const {
    LossValues out = nan_losses();
    for (int i = 0; i < kNumLosses; ++i) {
      if (n[i] > 0) out[i] = sum[i] / n[i];
    }
    return out;
  }
};

void log_to(const Logger& log, const std::string& line) {
  if (log) log(line);
}

std::string epoch_line(const char* what, const EpochRecord& r) {
  return std::string(what) + " epoch " + std::to_string(r.epoch) + " mIoU " + fmt(r.iou.mean);
}

}  // namespace

const char* group_name(int g) {
  static const char* kNames[kNumGroups] = {"Enc_s", "Dec_s", "Enc_t", "Dec_t", "D_X",
                                           "D_Y", "f_enc", "f_dec", "Dec_aux", "f_RefSrc"};
  return kNames[g];
}

const char* step_name(int s) {
  static const char* kNames[kNumSteps] = {"1", "2", "3", "4", "5", "6-gen", "6-seg"};
  return kNames[s];
}

const char* loss_name(int l) {
  static const char* kNames[kNumLosses] = {"L_xself", "L_lsgan_G", "L_lsgan_F", "L_stats",
                                           "L_i2i",   "L_disc",    "L_ss_self", "L_wce",
                                           "L_uwce",  "L_sem",     "L_unsup"};
  return kNames[l];
}

LossValues nan_losses() {
  LossValues v;
  v.fill(std::numeric_limits<double>::quiet_NaN());
  return v;
}

StepPlan plan_for(const TrainConfig& cfg) {
  StepPlan p;
  switch (cfg.mode) {
    case Mode::kHylda:
      p.self = cfg.use_hylda_i2i;
      p.adversarial = true;
      p.aux = cfg.use_aux_selfsup;
      p.semisup = cfg.use_semisup;
      p.unsup = cfg.use_unsup_step;
      break;
    case Mode::kFinetune:
    case Mode::kOracle:
      p = StepPlan{false, false, false, true, false};
      break;
    case Mode::kNaive:
      p = StepPlan{false, false, false, false, false};
      break;
  }
  return p;
}

std::pair<torch::Tensor, torch::Tensor> augment(const torch::Tensor& images, const torch::Tensor& labels,
                                                std::mt19937_64& rng) {
  auto out_images = images.clone();
  auto out_labels = labels.clone();
  const long width = images.size(3);
  std::bernoulli_distribution flip(0.5);
  std::uniform_int_distribution<long> shift(0, width - 1);
  for (long b = 0; b < images.size(0); ++b) {
    auto img = images[b];
    auto lab = labels[b];
    if (flip(rng)) {
      img = img.flip({2});
      lab = lab.flip({1});
    }
    const long k = shift(rng);
    out_images[b].copy_(torch::roll(img, {k}, {2}));
    out_labels[b].copy_(torch::roll(lab, {k}, {1}));
  }
  return {out_images, out_labels};
}

HyldaState::HyldaState(const TrainConfig& cfg, const Corpus& corpus, const seg::SegNet* ref_net,
                       const torch::Tensor& labeled_labels)
    : config(cfg),
      plan(plan_for(cfg)),
      engine(make_engine(cfg, static_cast<int>(corpus.source_train.images.size(1)))),
      target(make_target(cfg, corpus, ref_net)),
      pool_fake_target(cfg.image_pool_size, mix_seed(cfg.seed, kStreamPoolTarget)),
      pool_fake_source(cfg.image_pool_size, mix_seed(cfg.seed, kStreamPoolSource)),
      source_stats(corpus.source_stats),
      target_stats(corpus.target_stats),
      aug_rng(mix_seed(cfg.seed, kStreamAug)) {
  if (ref_net != nullptr) {
    ref.emplace(seg::SegNet::from_checkpoint(ref_net->to_checkpoint(), seg::Role::kRefSource));
  }
  if (plan.unsup && !ref) throw Error("the unsupervised step needs a reference network");
  torch::manual_seed(mix_seed(cfg.seed, kStreamAux));
  aux = seg::make_aux_decoder(seg_options(cfg, corpus));

  opt_fenc = std::make_unique<torch::optim::Adam>(target.encoder->parameters(),
                                                  torch::optim::AdamOptions(cfg.lr_seg));
  opt_fdec = std::make_unique<torch::optim::Adam>(target.decoder->parameters(),
                                                  torch::optim::AdamOptions(cfg.lr_seg));
  opt_aux = std::make_unique<torch::optim::Adam>(aux->parameters(), torch::optim::AdamOptions(cfg.lr_seg));
  if (cfg.per_step_optimizers) {
    opt_fenc_aux = std::make_unique<torch::optim::Adam>(target.encoder->parameters(),
                                                        torch::optim::AdamOptions(cfg.lr_seg));
    std::vector<torch::Tensor> seg_params = target.encoder->parameters();
    for (const auto& p : target.decoder->parameters()) seg_params.push_back(p);
    opt_seg_unsup = std::make_unique<torch::optim::Adam>(seg_params, torch::optim::AdamOptions(cfg.lr_seg));
  }
  opt_gen = make_i2i_optimizer(cfg, engine.generator_parameters(), cfg.lr_i2i);
  opt_disc = make_i2i_optimizer(cfg, engine.discriminator_parameters(), cfg.lr_i2i * cfg.disc_lr_scale);

  const int classes = cfg.num_classes + 1;
  alpha_labeled = weights_from(labeled_labels, classes);
  alpha_source = weights_from(corpus.source_train.labels, classes);
}

std::array<std::uint64_t, kNumGroups> HyldaState::hashes() const {
  return {parameter_hash(*engine.enc_s), parameter_hash(*engine.dec_s), parameter_hash(*engine.enc_t),
          parameter_hash(*engine.dec_t), parameter_hash(*engine.disc_x), parameter_hash(*engine.disc_y),
          parameter_hash(*target.encoder), parameter_hash(*target.decoder), parameter_hash(*aux),
          ref ? ref->hash() : 0};
}

void HyldaState::zero_all() {
  for (torch::optim::Optimizer* o : {static_cast<torch::optim::Optimizer*>(opt_fenc.get()),
                                     static_cast<torch::optim::Optimizer*>(opt_fdec.get()),
                                     static_cast<torch::optim::Optimizer*>(opt_aux.get()),
                                     static_cast<torch::optim::Optimizer*>(opt_fenc_aux.get()),
                                     static_cast<torch::optim::Optimizer*>(opt_seg_unsup.get()),
                                     opt_gen.get(), opt_disc.get()}) {
    if (o != nullptr) o->zero_grad(/*set_to_none=*/true);
  }
}

StepReport hylda_step(HyldaState& s, const StepInputs& in) {
  StepReport rep;
  const TrainConfig& cfg = s.config;
  const auto& y = in.source;
  const auto& x = in.target;
  std::array<std::uint64_t, kNumGroups> before{};
  if (s.track_updates) before = s.hashes();
  auto mark = [&](StepId id) {
    rep.ran[id] = true;
    if (!s.track_updates) return;
    const auto after = s.hashes();
    for (int g = 0; g < kNumGroups; ++g) rep.updated[id][g] = after[g] != before[g];
    before = after;
  };
  auto noisy = [&](const torch::Tensor& t) {
    return cfg.disc_noise > 0.0 ? t + cfg.disc_noise * torch::randn_like(t) : t;
  };
  auto disc_loss = [&](const torch::Tensor& fake_t, const torch::Tensor& fake_s) {
    return i2i::lsgan_discriminator_loss(s.engine.disc_x->forward(noisy(x)),
                                         s.engine.disc_x->forward(noisy(fake_t)), cfg.dual_head_disc) +
           i2i::lsgan_discriminator_loss(s.engine.disc_y->forward(noisy(y)),
                                         s.engine.disc_y->forward(noisy(fake_s)), cfg.dual_head_disc);
  };

  if (s.plan.self) {
    s.zero_all();
    auto [y_rec, x_rec] = s.engine.route_forward(y, x, i2i::SkipRoute::kIdentity);
    const auto loss = i2i::i2i_self_loss(y, y_rec, x, x_rec);
    check_finite(loss, "1", "L_xself");
    loss.backward();
    s.opt_gen->step();
    rep.losses[kXself] = loss.item<double>();
    mark(kStep1);
  }

  if (s.plan.adversarial) {
    s.zero_all();
    s.engine.set_discriminators_trainable(false);
    auto [fake_t, fake_s] = s.engine.route_forward(y, x, i2i::SkipRoute::kTranslation);
    const auto lf = i2i::lsgan_generator_loss(s.engine.disc_x->forward(noisy(fake_t)), cfg.dual_head_disc);
    const auto lg = i2i::lsgan_generator_loss(s.engine.disc_y->forward(noisy(fake_s)), cfg.dual_head_disc);
    const auto ls = cfg.use_stats_loss && cfg.use_hylda_i2i
                        ? stats::statistics_loss(fake_s, fake_t, s.source_stats, s.target_stats)
                        : torch::zeros({}, fake_t.options());
    const auto loss = i2i::combined_i2i_loss(lg, lf, ls, cfg.beta);
    check_finite(loss, "2", "L_i2i");
    loss.backward();
    s.opt_gen->step();
    s.engine.set_discriminators_trainable(true);
    rep.losses[kLsganG] = lg.item<double>();
    rep.losses[kLsganF] = lf.item<double>();
    rep.losses[kStats] = ls.item<double>();
    rep.losses[kI2i] = loss.item<double>();
    mark(kStep2);

    s.zero_all();
    const auto pooled_t = s.pool_fake_target.query(fake_t.detach());
    const auto pooled_s = s.pool_fake_source.query(fake_s.detach());
    const auto ld = disc_loss(pooled_t, pooled_s);
    check_finite(ld, "3", "L_disc");
    ld.backward();
    s.opt_disc->step();
    rep.losses[kDisc] = ld.item<double>();
    mark(kStep3);
  }

  if (s.plan.aux) {
    s.zero_all();
    const auto rec = s.aux->forward(s.target.encoder->forward(x));
    const auto loss = seg::aux_loss(x, rec);
    check_finite(loss, "4", "L_ss_self");
    loss.backward();
    (s.opt_fenc_aux ? s.opt_fenc_aux : s.opt_fenc)->step();
    s.opt_aux->step();
    rep.losses[kSsSelf] = loss.item<double>();
    mark(kStep4);
  }

  if (s.plan.semisup) {
    if (!in.labeled.defined() || in.labeled.size(0) == 0) {
      throw Error("semi-supervision enabled but the batch has no labeled frames");
    }
    auto [xl, ll] = cfg.augment ? augment(in.labeled, in.labeled_labels, s.aug_rng)
                                : std::pair{in.labeled, in.labeled_labels};
    s.zero_all();
    const auto loss = seg::weighted_cross_entropy(s.target.forward(xl), ll, s.alpha_labeled);
    check_finite(loss, "5", "L_wce");
    loss.backward();
    s.opt_fenc->step();
    s.opt_fdec->step();
    rep.losses[kWce] = loss.item<double>();
    mark(kStep5);
  }

  if (s.plan.unsup) {
    const auto& alpha = cfg.unsup_alpha_from_source ? s.alpha_source : s.alpha_labeled;
    torch::Tensor ref_scores;
    {
      torch::NoGradGuard no_grad;
      ref_scores = s.ref->forward(y);
    }
    s.zero_all();
    s.target.set_trainable(false);
    const auto fake_t = s.engine.source_to_target(y);
    const auto scores = s.target.forward(fake_t);
    const auto uwce = seg::unsupervised_cross_entropy(scores, in.source_labels, alpha);
    const auto sem = seg::semantic_consistency_loss(ref_scores, scores);
    const auto loss = seg::combined_unsupervised_loss(uwce, sem, cfg.gamma);
    check_finite(loss, "6", "L_unsup");
    loss.backward();
    s.target.set_trainable(true);
    s.opt_gen->step();
    if (cfg.update_disc_in_unsup) {
      s.zero_all();
      const auto ld = disc_loss(fake_t.detach(), s.engine.target_to_source(x).detach());
      check_finite(ld, "6", "L_disc");
      ld.backward();
      s.opt_disc->step();
    }
    rep.losses[kUwce] = uwce.item<double>();
    rep.losses[kSem] = sem.item<double>();
    rep.losses[kUnsup] = loss.item<double>();
    mark(kStep6Gen);

    s.zero_all();
    torch::Tensor fake_fixed;
    {
      torch::NoGradGuard no_grad;
      fake_fixed = s.engine.source_to_target(y);
    }
    const auto scores2 = s.target.forward(fake_fixed);
    const auto loss2 = seg::combined_unsupervised_loss(
        seg::unsupervised_cross_entropy(scores2, in.source_labels, alpha),
        seg::semantic_consistency_loss(ref_scores, scores2), cfg.gamma);
    check_finite(loss2, "6", "L_unsup");
    loss2.backward();
    if (s.opt_seg_unsup) {
      s.opt_seg_unsup->step();
    } else {
      s.opt_fenc->step();
      s.opt_fdec->step();
    }
    mark(kStep6Seg);
  }
  return rep;
}

PretrainResult pretrain_ref_source(const TrainConfig& cfg, const Corpus& corpus, const Logger& log) {
  cfg.validate();
  const std::uint64_t seed = mix_seed(cfg.seed, kStreamPretrain);
  torch::manual_seed(seed);
  seg::SegNet net(seg_options(cfg, corpus), seg::Role::kTarget);
  std::vector<torch::Tensor> params = net.encoder->parameters();
  for (const auto& p : net.decoder->parameters()) params.push_back(p);
  torch::optim::Adam opt(params, torch::optim::AdamOptions(cfg.lr_seg));
  const auto alpha = weights_from(corpus.source_train.labels, cfg.num_classes + 1);
  std::mt19937_64 aug_rng(mix_seed(seed, kStreamAug));
  const auto& train = corpus.source_train;

  std::vector<EpochRecord> epochs;
  std::optional<Checkpoint> best;
  int best_epoch = 0;
  double best_miou = -1.0;
  for (int e = 1; e <= cfg.pretrain_epochs; ++e) {
    LossMeans means;
    for (const auto& b : data::make_batches(train.size(), 0, 0, cfg.batch_size, seed, e, false)) {
      auto xs = take(train.images, b.source);
      auto ls = take(train.labels, b.source);
      if (cfg.augment) std::tie(xs, ls) = augment(xs, ls, aug_rng);
      opt.zero_grad(true);
      const auto loss = seg::weighted_cross_entropy(net.forward(xs), ls, alpha);
      check_finite(loss, "pretrain", "L_wce");
      loss.backward();
      opt.step();
      LossValues v = nan_losses();
      v[kWce] = loss.item<double>();
      means.add(v);
    }
    EpochRecord rec;
    rec.epoch = e;
    rec.iou = eval::evaluate(net, corpus.source_val);
    rec.losses = means.mean();
    log_to(log, epoch_line("pretrain", rec));
    if (rec.iou.mean > best_miou) {
      best_miou = rec.iou.mean;
      best_epoch = e;
      best = net.to_checkpoint();
    }
    epochs.push_back(rec);
  }
  if (!best) best = net.to_checkpoint();
  return PretrainResult{seg::SegNet::from_checkpoint(*best, seg::Role::kRefSource), epochs, best_epoch};
}

std::string metrics_header(int num_classes) {
  std::string h = "epoch,mode,seed,labeled";
  for (int c = 1; c <= num_classes; ++c) {
    h += ",iou_";
    h += num_classes == synth::kNumObjectClasses ? synth::kClassNames[c] : "c" + std::to_string(c);
  }
  h += ",miou";
  for (int l = 0; l < kNumLosses; ++l) h += std::string(",") + loss_name(l);
  return h;
}

std::string metrics_row(const TrainConfig& cfg, const EpochRecord& rec, const std::string& mode_label) {
  std::string r = std::to_string(rec.epoch) + "," + (mode_label.empty() ? to_string(cfg.mode) : mode_label) + "," + std::to_string(cfg.seed) +
                  "," + std::to_string(cfg.labeled_subset_size);
  for (int c = 0; c < cfg.num_classes; ++c) {
    const double v = c < static_cast<int>(rec.iou.per_class.size())
                         ? rec.iou.per_class[c]
                         : std::numeric_limits<double>::quiet_NaN();
    r += "," + fmt(v);
  }
  r += "," + fmt(rec.iou.mean);
  for (double v : rec.losses) r += "," + fmt(v);
  return r;
}

void write_metrics(const std::filesystem::path& path, const TrainConfig& cfg,
                   const std::vector<EpochRecord>& epochs, const std::string& mode_label) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << metrics_header(cfg.num_classes) << "\n";
  for (const auto& e : epochs) out << metrics_row(cfg, e, mode_label) << "\n";
  if (!out) throw Error("write failed for " + path.string());
}

RunResult run(const TrainConfig& cfg, const Corpus& corpus, const seg::SegNet* ref,
              const std::filesystem::path& out_dir, const Logger& log) {
  cfg.validate();
  if (cfg.mode != Mode::kOracle && ref == nullptr) {
    throw UsageError(std::string("mode ") + to_string(cfg.mode) +
                     " needs a pretrained reference source checkpoint (f_RefSrc)");
  }
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  RunResult res;

  auto finish = [&](const Checkpoint& best_ck) {
    res.best.emplace(seg::SegNet::from_checkpoint(best_ck, seg::Role::kTarget));
    if (out_dir.empty()) return;
    write_metrics(out_dir / "metrics.csv", cfg, res.epochs);
    Checkpoint ck = best_ck;
    ck.meta["mode"] = to_string(cfg.mode);
    ck.meta["seed"] = std::to_string(cfg.seed);
    ck.meta["best_epoch"] = std::to_string(res.best_epoch);
    ck.meta["best_miou"] = fmt(res.best_miou);
    ck.save(out_dir / "f_target_best.ckpt");
    data::save_subset(out_dir / "labeled_subset.txt", res.labeled_ids);
  };

  if (cfg.mode == Mode::kNaive) {
    seg::SegNet net = seg::SegNet::from_checkpoint(ref->to_checkpoint(), seg::Role::kTarget);
    EpochRecord rec;
    rec.iou = eval::evaluate(net, corpus.target_val);
    res.epochs.push_back(rec);
    res.best_miou = rec.iou.mean;
    log_to(log, epoch_line("naive", rec));
    finish(net.to_checkpoint());
    return res;
  }

  const DomainSplit& trg = corpus.target_train;
  DomainSplit labeled;
  if (cfg.mode == Mode::kOracle) {
    labeled = trg;
    res.labeled_ids = trg.ids;
  } else if (cfg.use_semisup || cfg.mode == Mode::kFinetune) {
    data::SubsetSpec spec;
    spec.sizes = {static_cast<std::size_t>(cfg.labeled_subset_size)};
    spec.seed = mix_seed(cfg.seed, kStreamSubset);
    res.labeled_ids = data::sample_nested_subsets(trg.ids, spec).front();
    labeled = trg.select(trg.rows_of(res.labeled_ids));
  }

  auto state = std::make_shared<HyldaState>(cfg, corpus, cfg.mode == Mode::kOracle ? nullptr : ref,
                                            labeled.labels);
  const std::uint64_t batch_seed = mix_seed(cfg.seed, kStreamBatches);
  const auto& src = corpus.source_train;
  std::optional<Checkpoint> best;
  for (int e = 1; e <= cfg.epochs; ++e) {
    LossMeans means;
    std::vector<data::StepBatch> batches;
    if (cfg.mode == Mode::kOracle) {
      batches = data::make_batches(trg.size(), 0, trg.size(), cfg.batch_size, batch_seed, e, true);
      for (auto& b : batches) b.labeled = b.source;
    } else {
      batches = data::make_batches(src.size(), trg.size(), labeled.size(), cfg.batch_size, batch_seed, e,
                                   state->plan.semisup);
    }
    for (const auto& b : batches) {
      StepInputs in;
      if (cfg.mode != Mode::kOracle) {
        in.source = take(src.images, b.source);
        in.source_labels = take(src.labels, b.source);
        in.target = take(trg.images, b.target);
      }
      if (!b.labeled.empty() && labeled.size() > 0) {
        in.labeled = take(labeled.images, b.labeled);
        in.labeled_labels = take(labeled.labels, b.labeled);
      }
      means.add(hylda_step(*state, in).losses);
    }
    EpochRecord rec;
    rec.epoch = e;
    rec.iou = eval::evaluate(state->target, corpus.target_val);
    rec.losses = means.mean();
    log_to(log, epoch_line(to_string(cfg.mode), rec));
    if (!best || rec.iou.mean > res.best_miou) {
      res.best_miou = rec.iou.mean;
      res.best_epoch = e;
      best = state->target.to_checkpoint();
    }
    res.epochs.push_back(rec);
  }
  if (!best) best = state->target.to_checkpoint();
  res.state = state;
  finish(*best);
  if (!out_dir.empty() && cfg.mode == Mode::kHylda) {
    Checkpoint eng = state->engine.to_checkpoint();
    eng.meta["seed"] = std::to_string(cfg.seed);
    eng.save(out_dir / "engine_final.ckpt");
    eval::write_stats_csv(out_dir / "stats.csv", eval::translation_stats(state->engine, corpus));
  }
  return res;
}

std::vector<AblationVariant> default_ablation_variants() {
  return {
      {"full", [](TrainConfig&) {}},
      {"no_hylda_i2i", [](TrainConfig& c) { c.use_hylda_i2i = false; }},
      {"no_aux_selfsup", [](TrainConfig& c) { c.use_aux_selfsup = false; }},
      {"no_unsup_step", [](TrainConfig& c) { c.use_unsup_step = false; }},
  };
}

std::vector<AblationRow> run_ablation_suite(const TrainConfig& base, const Corpus& corpus,
                                            const std::vector<std::uint64_t>& seeds,
                                            const std::vector<const seg::SegNet*>& refs,
                                            const std::vector<AblationVariant>& variants,
                                            const std::filesystem::path& out_dir, const Logger& log) {
  if (seeds.size() != refs.size()) throw Error("one reference network per seed is required");
  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      TrainConfig cfg = base;
      cfg.mode = Mode::kHylda;
      cfg.seed = seeds[i];
      v.apply(cfg);
      const auto dir = out_dir.empty() ? out_dir : out_dir / v.name / ("seed_" + std::to_string(seeds[i]));
      const RunResult r = run(cfg, corpus, refs[i], dir, log);
      rows.push_back({v.name, seeds[i], r.best_miou});
      log_to(log, "ablation " + v.name + " seed " + std::to_string(seeds[i]) + " mIoU " + fmt(r.best_miou));
    }
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream all(out_dir / "ablation.csv");
    all << "variant,seed,miou\n";
    for (const auto& r : rows) all << r.variant << "," << r.seed << "," << fmt(r.miou) << "\n";
    std::ofstream summary(out_dir / "ablation_summary.csv");
    summary << "variant,runs,mean_miou,std_miou\n";
    for (const auto& v : variants) {
      std::vector<double> m;
      for (const auto& r : rows) {
        if (r.variant == v.name) m.push_back(r.miou);
      }
      double mean = 0.0;
      for (double x : m) mean += x;
      mean /= static_cast<double>(m.size());
      double var = 0.0;
      for (double x : m) var += (x - mean) * (x - mean);
      const double sd = m.size() > 1 ? std::sqrt(var / static_cast<double>(m.size() - 1)) : 0.0;
      summary << v.name << "," << m.size() << "," << fmt(mean) << "," << fmt(sd) << "\n";
    }
  }
  return rows;
}

}  // namespace hylda::train
