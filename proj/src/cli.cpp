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
#include "hylda/cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <torch/torch.h>

#include "hylda/checkpoint.hpp"
#include "hylda/common.hpp"
#include "hylda/config.hpp"
#include "hylda/corpus.hpp"
#include "hylda/evaluate.hpp"
#include "hylda/synthlidar.hpp"
#include "hylda/tensor_bridge.hpp"
#include "hylda/trainer.hpp"

namespace hylda::cli {
namespace {

namespace fs = std::filesystem;

struct ConfigArgs {
  std::string path;
  std::vector<std::string> sets;
};

void add_config_options(CLI::App* cmd, ConfigArgs& c) {
  cmd->add_option("--config", c.path, "key = value config file with [section] headers");
  cmd->add_option("--set", c.sets, "override, section.key=value (repeatable)");
}

Config load_config(const ConfigArgs& c) {
  Config cfg;
  if (!c.path.empty()) {
    if (!fs::exists(c.path)) throw UsageError("config file not found: " + c.path);
    cfg = Config::load(c.path);
  }
  for (const auto& s : c.sets) cfg.set_override(s);
  cfg.check_keys(known_config_keys());
  return cfg;
}

std::vector<fs::path> files_under(const fs::path& dir) {
  std::vector<fs::path> out;
  if (fs::is_regular_file(dir)) return {dir};
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Inputs with content hashes, enough to replay the invocation.
void write_inputs_manifest(const fs::path& out_dir, const std::vector<std::string>& args,
                           const std::vector<fs::path>& inputs) {
  std::ofstream out(out_dir / "inputs_manifest.txt");
  out << "# hylda inputs v1\nargs";
  for (const auto& a : args) out << " " << a;
  out << "\n";
  if (const char* env = std::getenv("HYLDA_SEED")) out << "HYLDA_SEED " << env << "\n";
  for (const auto& p : inputs) {
    for (const auto& f : files_under(p)) out << hex64(hash_file(f)) << " " << f.string() << "\n";
  }
  if (!out) throw Error("cannot write inputs manifest in " + out_dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

struct RunLog {
  std::ostream& out;
  std::ofstream file;
  RunLog(std::ostream& o, const fs::path& dir) : out(o), file(dir / "log.txt") {}
  train::Logger logger() {
    return [this](const std::string& line) {
      out << line << "\n";
      file << line << "\n";
      file.flush();
    };
  }
};

seg::SegNet load_ref(const std::string& path) {
  if (path.empty()) {
    throw UsageError("missing reference checkpoint ref_source.ckpt: pass --ref (produced by pretrain-ref)");
  }
  if (!fs::exists(path)) {
    throw UsageError("missing reference checkpoint " + path + " (run pretrain-ref first)");
  }
  return seg::SegNet::from_checkpoint(Checkpoint::load(path), seg::Role::kRefSource);
}

std::vector<std::uint64_t> parse_u64_list(const std::string& s, const char* what) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError(std::string("bad ") + what + " list '" + s + "'");
    }
  }
  if (out.empty()) throw UsageError(std::string("empty ") + what + " list");
  return out;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  torch::set_num_threads(1);
  CLI::App app{"LiDAR range-image domain adaptation", "hylda"};
  app.require_subcommand(1);
  std::function<void()> action;

  // gen-synth
  ConfigArgs gen_cfg;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-synth", "generate the synthetic source/target domain pair");
  add_config_options(gen, gen_cfg);
  gen->add_option("--out", gen_out, "output data directory")->required();
  gen->callback([&] {
    action = [&] {
      const Config cfg = load_config(gen_cfg);
      const auto pair = pair_spec_from(cfg);
      synth::build_domain_pair(pair, gen_out);
      write_text(fs::path(gen_out) / "config_resolved.cfg", to_text(pair));
      std::vector<fs::path> inputs;
      if (!gen_cfg.path.empty()) inputs.push_back(gen_cfg.path);
      write_inputs_manifest(gen_out, args, inputs);
      out << "wrote domain pair to " << gen_out << "\n";
    };
  });

  // precompute-stats
  std::string stats_data;
  auto* pre = app.add_subcommand("precompute-stats", "normalization bounds and per-domain statistics");
  pre->add_option("--data", stats_data, "data directory from gen-synth")->required();
  pre->callback([&] {
    action = [&] {
      if (!fs::exists(fs::path(stats_data) / "source" / "manifest.txt")) {
        throw UsageError("no domain pair under " + stats_data + " (run gen-synth first)");
      }
      precompute_corpus_stats(stats_data);
      write_inputs_manifest(stats_data, args,
                            {fs::path(stats_data) / "source" / "manifest.txt",
                             fs::path(stats_data) / "target" / "manifest.txt"});
      out << "wrote " << norm_stats_path(stats_data).string() << ", " << source_stats_path(stats_data).string()
          << ", " << target_stats_path(stats_data).string() << "\n";
    };
  });

  // pretrain-ref
  ConfigArgs pre_cfg;
  std::string pre_data, pre_out;
  auto* pretrain = app.add_subcommand("pretrain-ref", "train the reference source segmentation network");
  add_config_options(pretrain, pre_cfg);
  pretrain->add_option("--data", pre_data, "data directory")->required();
  pretrain->add_option("--out", pre_out, "output directory")->required();
  pretrain->callback([&] {
    action = [&] {
      const TrainConfig tc = TrainConfig::from(load_config(pre_cfg));
      const Corpus corpus = load_corpus(pre_data);
      fs::create_directories(pre_out);
      write_text(fs::path(pre_out) / "config_resolved.cfg", tc.to_text());
      write_inputs_manifest(pre_out, args, {pre_data});
      RunLog log(out, pre_out);
      log.logger()("seed " + std::to_string(tc.seed));
      auto res = train::pretrain_ref_source(tc, corpus, log.logger());
      Checkpoint ck = res.net.to_checkpoint();
      ck.meta["seed"] = std::to_string(tc.seed);
      ck.meta["best_epoch"] = std::to_string(res.best_epoch);
      ck.save(fs::path(pre_out) / "ref_source.ckpt");
      train::write_metrics(fs::path(pre_out) / "metrics.csv", tc, res.epochs, "pretrain");
    };
  });

  // train
  ConfigArgs train_cfg;
  std::string train_data, train_out, train_ref, train_mode;
  int train_subset = -1;
  auto* trn = app.add_subcommand("train", "train f_target in hylda, finetune, naive or oracle mode");
  add_config_options(trn, train_cfg);
  trn->add_option("--data", train_data, "data directory")->required();
  trn->add_option("--out", train_out, "run output directory")->required();
  trn->add_option("--ref", train_ref, "reference source checkpoint from pretrain-ref");
  trn->add_option("--mode", train_mode, "hylda|finetune|naive|oracle (overrides train.mode)");
  trn->add_option("--subset-size", train_subset, "labeled target frames (overrides train.labeled_subset_size)");
  trn->callback([&] {
    action = [&] {
      Config cfg = load_config(train_cfg);
      if (!train_mode.empty()) cfg.set("train.mode", train_mode);
      if (train_subset >= 0) cfg.set("train.labeled_subset_size", std::to_string(train_subset));
      const TrainConfig tc = TrainConfig::from(cfg);
      std::optional<seg::SegNet> ref;
      if (tc.mode != Mode::kOracle) ref.emplace(load_ref(train_ref));
      const Corpus corpus = load_corpus(train_data);
      fs::create_directories(train_out);
      write_text(fs::path(train_out) / "config_resolved.cfg", tc.to_text());
      std::vector<fs::path> inputs = {train_data};
      if (ref) inputs.push_back(train_ref);
      write_inputs_manifest(train_out, args, inputs);
      RunLog log(out, train_out);
      log.logger()(std::string("mode ") + to_string(tc.mode) + " seed " + std::to_string(tc.seed));
      const auto res = train::run(tc, corpus, ref ? &*ref : nullptr, train_out, log.logger());
      log.logger()("best epoch " + std::to_string(res.best_epoch) + " mIoU " + fmt(res.best_miou));
    };
  });

  // eval
  std::string eval_data, eval_ckpt, eval_out, eval_domain = "target", eval_split = "val", eval_level = "pixel";
  int eval_classes = -1;
  auto* ev = app.add_subcommand("eval", "evaluate a segmentation checkpoint");
  ev->add_option("--data", eval_data, "data directory")->required();
  ev->add_option("--checkpoint", eval_ckpt, "segmentation checkpoint")->required();
  ev->add_option("--out", eval_out, "output directory")->required();
  ev->add_option("--domain", eval_domain, "source|target")->check(CLI::IsMember({"source", "target"}));
  ev->add_option("--split", eval_split, "train|val")->check(CLI::IsMember({"train", "val"}));
  ev->add_option("--num-classes", eval_classes, "expected object classes K");
  ev->add_option("--level", eval_level, "pixel|point (point regenerates clouds from the data config)")
      ->check(CLI::IsMember({"pixel", "point"}));
  ev->callback([&] {
    action = [&] {
      if (!fs::exists(eval_ckpt)) throw UsageError("missing checkpoint " + eval_ckpt);
      auto net = seg::SegNet::from_checkpoint(Checkpoint::load(eval_ckpt), seg::Role::kTarget);
      if (eval_classes >= 0 && net.options().num_classes != eval_classes) {
        throw Error("checkpoint predicts " + std::to_string(net.options().num_classes) + " classes, expected " +
                    std::to_string(eval_classes));
      }
      const Corpus corpus = load_corpus(eval_data);
      const bool src = eval_domain == "source";
      const DomainSplit& split = eval_split == "train" ? (src ? corpus.source_train : corpus.target_train)
                                                       : (src ? corpus.source_val : corpus.target_val);
      auto point_level = [&] {
        const fs::path gen_cfg = fs::path(eval_data) / "config_resolved.cfg";
        if (!fs::exists(gen_cfg)) throw UsageError("point level needs " + gen_cfg.string() + " from gen-synth");
        return eval::point_confusion(net, corpus, pair_spec_from(Config::load(gen_cfg)),
                                     data::parse_domain(eval_domain), data::parse_split(eval_split));
      };
      const auto cm = eval_level == "point" ? point_level() : eval::confusion(net, split);
      const auto iou = eval::miou(cm);
      fs::create_directories(eval_out);
      write_inputs_manifest(eval_out, args, {eval_data, eval_ckpt});
      std::ofstream csv(fs::path(eval_out) / "eval.csv");
      csv << "domain,split,level,frames";
      const int k = net.options().num_classes;
      for (int c = 1; c <= k; ++c) {
        csv << ",iou_" << (k == synth::kNumObjectClasses ? std::string(synth::kClassNames[c]) : "c" + std::to_string(c));
      }
      csv << ",miou\n" << eval_domain << "," << eval_split << "," << eval_level << "," << split.size();
      for (double v : iou.per_class) csv << "," << fmt(v);
      csv << "," << fmt(iou.mean) << "\n";
      std::ofstream cmf(fs::path(eval_out) / "confusion.csv");
      for (int g = 0; g < cm.num_classes(); ++g) {
        for (int p = 0; p < cm.num_classes(); ++p) cmf << (p ? "," : "") << cm.at(g, p);
        cmf << "\n";
      }
      out << eval_domain << " " << eval_split << " " << eval_level << " mIoU " << fmt(iou.mean) << "\n";
    };
  });

  // translate
  std::string tr_engine, tr_data, tr_input, tr_out, tr_direction = "s2t";
  auto* tr = app.add_subcommand("translate", "translate HYL1 frames with a trained engine");
  tr->add_option("--engine", tr_engine, "engine checkpoint (engine_final.ckpt)")->required();
  tr->add_option("--data", tr_data, "data directory holding norm_stats.txt")->required();
  tr->add_option("--input", tr_input, "HYL1 file or directory")->required();
  tr->add_option("--out", tr_out, "output directory")->required();
  tr->add_option("--direction", tr_direction, "s2t (F) or t2s (G)")->check(CLI::IsMember({"s2t", "t2s"}));
  tr->callback([&] {
    action = [&] {
      if (!fs::exists(tr_engine)) throw UsageError("missing engine checkpoint " + tr_engine);
      if (!fs::exists(norm_stats_path(tr_data))) {
        throw UsageError("missing " + norm_stats_path(tr_data).string() + " (run precompute-stats first)");
      }
      const Checkpoint ck = Checkpoint::load(tr_engine);
      i2i::EngineOptions o;
      auto meta = [&ck](const std::string& k) {
        const auto it = ck.meta.find(k);
        if (it == ck.meta.end()) throw Error("engine checkpoint lacks '" + k + "'");
        return it->second;
      };
      o.channels = std::stoi(meta("channels"));
      o.use_skips = meta("use_skips") == "1";
      o.dual_head = meta("dual_head") == "1";
      for (int i = 0; i < 3; ++i) o.gen_widths[i] = std::stoi(meta("gen_width" + std::to_string(i)));
      for (int i = 0; i < 4; ++i) o.disc_widths[i] = std::stoi(meta("disc_width" + std::to_string(i)));
      i2i::TranslationEngine engine(o);
      engine.load(ck);
      const NormStats norm = NormStats::load(norm_stats_path(tr_data));
      std::vector<fs::path> frames;
      for (const auto& f : files_under(tr_input)) {
        if (f.extension() == ".hyl1") frames.push_back(f);
      }
      if (frames.empty()) throw UsageError("no .hyl1 frames under " + tr_input);
      fs::create_directories(tr_out);
      write_inputs_manifest(tr_out, args, {tr_engine, norm_stats_path(tr_data), tr_input});
      torch::NoGradGuard no_grad;
      for (const auto& f : frames) {
        RangeImage img = read_frame(f);
        if (!img.normalized) img = normalize(img, norm);
        const std::vector<RangeImage> one = {img};
        const auto x = to_tensor(one);
        const auto y = tr_direction == "s2t" ? engine.source_to_target(x) : engine.target_to_source(x);
        // Written back in sensor units like every other HYL1 file.
        write_frame(fs::path(tr_out) / f.filename(), denormalize(to_range_image(y[0]), norm));
      }
      out << "translated " << frames.size() << " frames to " << tr_out << "\n";
    };
  });

  // ablate
  ConfigArgs abl_cfg;
  std::string abl_data, abl_out, abl_seeds = "0,1,2", abl_ref_dir;
  auto* abl = app.add_subcommand("ablate", "run the ablation suite over seeds");
  add_config_options(abl, abl_cfg);
  abl->add_option("--data", abl_data, "data directory")->required();
  abl->add_option("--out", abl_out, "output directory")->required();
  abl->add_option("--seeds", abl_seeds, "comma-separated seeds");
  abl->add_option("--ref-dir", abl_ref_dir, "directory with seed_<n>/ref_source.ckpt (pretrained if absent)");
  abl->callback([&] {
    action = [&] {
      const TrainConfig tc = TrainConfig::from(load_config(abl_cfg));
      const auto seeds = parse_u64_list(abl_seeds, "seed");
      const Corpus corpus = load_corpus(abl_data);
      fs::create_directories(abl_out);
      write_text(fs::path(abl_out) / "config_resolved.cfg", tc.to_text());
      RunLog log(out, abl_out);
      std::vector<seg::SegNet> refs;
      std::vector<fs::path> inputs = {abl_data};
      for (auto seed : seeds) {
        const fs::path dir = fs::path(abl_ref_dir.empty() ? (fs::path(abl_out) / "ref").string() : abl_ref_dir) /
                             ("seed_" + std::to_string(seed));
        const fs::path ck = dir / "ref_source.ckpt";
        if (fs::exists(ck)) {
          refs.push_back(load_ref(ck.string()));
        } else {
          if (!abl_ref_dir.empty()) throw UsageError("missing reference checkpoint " + ck.string());
          TrainConfig pc = tc;
          pc.seed = seed;
          auto res = train::pretrain_ref_source(pc, corpus, log.logger());
          fs::create_directories(dir);
          res.net.to_checkpoint().save(ck);
          refs.push_back(std::move(res.net));
        }
        inputs.push_back(ck);
      }
      write_inputs_manifest(abl_out, args, inputs);
      std::vector<const seg::SegNet*> ptrs;
      for (const auto& r : refs) ptrs.push_back(&r);
      train::run_ablation_suite(tc, corpus, seeds, ptrs, train::default_ablation_variants(), abl_out,
                                log.logger());
    };
  });

  // report
  std::string rep_runs, rep_out, rep_subsets = "5,10,20", rep_seeds = "0,1,2";
  auto* rep = app.add_subcommand("report", "aggregate run directories into tables and plots");
  rep->add_option("--runs", rep_runs, "runs root (<mode>/k<size>/seed_<n>)")->required();
  rep->add_option("--out", rep_out, "report directory")->required();
  rep->add_option("--subsets", rep_subsets, "labeled subset sizes");
  rep->add_option("--seeds", rep_seeds, "seeds");
  rep->callback([&] {
    action = [&] {
      std::vector<int> sizes;
      for (auto v : parse_u64_list(rep_subsets, "subset")) sizes.push_back(static_cast<int>(v));
      const auto summary = eval::emit_report(rep_runs, rep_out, sizes, parse_u64_list(rep_seeds, "seed"));
      for (const auto& w : summary.warnings) err << "warning: " << w << "\n";
      for (const auto& p : summary.written) out << "wrote " << p.string() << "\n";
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (action) action();
    return kExitOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace hylda::cli
