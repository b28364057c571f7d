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
#include "hylda/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "hylda/common.hpp"
#include "hylda/domainstats.hpp"
#include "hylda/tensor_bridge.hpp"

namespace hylda::eval {
namespace {

constexpr long kInferBatch = 8;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  }
};

Csv read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  Csv csv;
  std::string line;
  if (!std::getline(in, line)) throw Error(path.string() + " is empty");
  csv.header = split_csv(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != csv.header.size()) throw Error("ragged row in " + path.string());
    csv.rows.push_back(std::move(cells));
  }
  return csv;
}

double to_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  return std::stod(s);
}

// Best-epoch row of a metrics.csv: mIoU plus per-class IoU columns.
struct BestRow {
  double miou = 0.0;
  std::vector<std::string> class_names;
  std::vector<double> per_class;
};

BestRow best_row(const std::filesystem::path& metrics) {
  const Csv csv = read_csv(metrics);
  const int m = csv.column("miou");
  if (m < 0 || csv.rows.empty()) throw Error(metrics.string() + " has no mIoU rows");
  BestRow best;
  best.miou = -1.0;
  for (const auto& row : csv.rows) {
    const double v = to_double(row[m]);
    if (v > best.miou) {
      best.miou = v;
      best.per_class.clear();
      best.class_names.clear();
      for (std::size_t c = 0; c < csv.header.size(); ++c) {
        if (csv.header[c].rfind("iou_", 0) == 0) {
          best.class_names.push_back(csv.header[c].substr(4));
          best.per_class.push_back(to_double(row[c]));
        }
      }
    }
  }
  return best;
}

struct MeanStd {
  double mean = std::nan("");
  double sd = std::nan("");
  int n = 0;
};

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd r;
  r.n = static_cast<int>(v.size());
  if (v.empty()) return r;
  double s = 0.0;
  for (double x : v) s += x;
  r.mean = s / r.n;
  double q = 0.0;
  for (double x : v) q += (x - r.mean) * (x - r.mean);
  r.sd = r.n > 1 ? std::sqrt(q / (r.n - 1)) : 0.0;
  return r;
}

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (x, y)
};

// Minimal line plot; horizontal reference lines are series with one point
// drawn across the full x range.
void write_line_svg(const std::filesystem::path& path, const std::string& title, const std::string& xlabel,
                    const std::vector<Series>& lines, const std::vector<Series>& hlines) {
  const double w = 480, h = 320, l = 60, r = 20, t = 40, b = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 0.0, ymax = 0.0;
  for (const auto* group : {&lines, &hlines}) {
    for (const auto& s : *group) {
      for (auto [x, y] : s.points) {
        if (std::isnan(y)) continue;
        if (group == &lines) {
          xmin = std::min(xmin, x);
          xmax = std::max(xmax, x);
        }
        ymax = std::max(ymax, y);
      }
    }
  }
  if (xmin > xmax) {
    xmin = 0.0;
    xmax = 1.0;
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  ymax = ymax > 0.0 ? ymax * 1.1 : 1.0;
  auto px = [&](double x) { return l + (x - xmin) / (xmax - xmin) * (w - l - r); };
  auto py = [&](double y) { return h - b - (y - ymin) / (ymax - ymin) * (h - t - b); };
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ofstream out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  out << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  out << "<line x1=\"" << l << "\" y1=\"" << h - b << "\" x2=\"" << w - r << "\" y2=\"" << h - b
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << l << "\" y1=\"" << t << "\" x2=\"" << l << "\" y2=\"" << h - b << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel
      << "</text>\n";
  out << "<text x=\"15\" y=\"" << h / 2 << "\" font-size=\"12\" transform=\"rotate(-90 15 " << h / 2
      << ")\" text-anchor=\"middle\">mIoU</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double y = ymin + (ymax - ymin) * k / 4.0;
    out << "<text x=\"" << l - 5 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(y).substr(0, 5)
        << "</text>\n";
  }
  int color = 0;
  int legend_y = static_cast<int>(t) + 5;
  auto legend = [&](const std::string& name, const char* c) {
    out << "<text x=\"" << w - r - 110 << "\" y=\"" << legend_y << "\" font-size=\"11\" fill=\"" << c << "\">" << name
        << "</text>\n";
    legend_y += 14;
  };
  for (const auto& s : lines) {
    const char* c = kColors[color++ % 6];
    std::string pts;
    for (auto [x, y] : s.points) {
      if (std::isnan(y)) continue;
      pts += fmt(px(x)) + "," + fmt(py(y)) + " ";
      out << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"" << c << "\"/>\n";
      out << "<text x=\"" << px(x) << "\" y=\"" << h - b + 14 << "\" text-anchor=\"middle\" font-size=\"10\">" << x
          << "</text>\n";
    }
    out << "<polyline fill=\"none\" stroke=\"" << c << "\" points=\"" << pts << "\"/>\n";
    legend(s.name, c);
  }
  for (const auto& s : hlines) {
    const char* c = kColors[color++ % 6];
    if (s.points.empty() || std::isnan(s.points.front().second)) continue;
    const double y = py(s.points.front().second);
    out << "<line x1=\"" << l << "\" y1=\"" << y << "\" x2=\"" << w - r << "\" y2=\"" << y << "\" stroke=\"" << c
        << "\" stroke-dasharray=\"5,4\"/>\n";
    legend(s.name, c);
  }
  out << "</svg>\n";
}

void write_bar_svg(const std::filesystem::path& path, const std::string& title,
                   const std::vector<std::pair<std::string, double>>& bars) {
  const double w = 480, h = 320, l = 60, r = 20, t = 40, b = 70;
  double ymax = 0.0;
  for (const auto& [n, v] : bars) {
    if (!std::isnan(v)) ymax = std::max(ymax, v);
  }
  ymax = ymax > 0.0 ? ymax * 1.1 : 1.0;
  std::ofstream out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  out << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  out << "<line x1=\"" << l << "\" y1=\"" << h - b << "\" x2=\"" << w - r << "\" y2=\"" << h - b
      << "\" stroke=\"black\"/>\n";
  const double slot = (w - l - r) / std::max<std::size_t>(1, bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double v = std::isnan(bars[i].second) ? 0.0 : bars[i].second;
    const double bh = v / ymax * (h - t - b);
    const double x = l + i * slot + slot * 0.15;
    out << "<rect x=\"" << x << "\" y=\"" << h - b - bh << "\" width=\"" << slot * 0.7 << "\" height=\"" << bh
        << "\" fill=\"#1f77b4\"/>\n";
    out << "<text x=\"" << x + slot * 0.35 << "\" y=\"" << h - b - bh - 4 << "\" text-anchor=\"middle\" font-size=\"10\">"
        << fmt(v).substr(0, 5) << "</text>\n";
    out << "<text x=\"" << x + slot * 0.35 << "\" y=\"" << h - b + 14 << "\" text-anchor=\"middle\" font-size=\"10\">"
        << bars[i].first << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace

torch::Tensor infer(seg::SegNet& net, const torch::Tensor& images, int expected_num_classes) {
  if (expected_num_classes >= 0 && net.options().num_classes != expected_num_classes) {
    throw Error("checkpoint predicts " + std::to_string(net.options().num_classes) + " classes, expected " +
                std::to_string(expected_num_classes));
  }
  torch::NoGradGuard no_grad;
  std::vector<torch::Tensor> parts;
  for (long i = 0; i < images.size(0); i += kInferBatch) {
    parts.push_back(net.predict(images.slice(0, i, std::min(images.size(0), i + kInferBatch))));
  }
  if (parts.empty()) return torch::empty({0, images.size(2), images.size(3)}, torch::kInt64);
  return torch::cat(parts, 0);
}

std::vector<LabelMap> infer(seg::SegNet& net, std::span<const RangeImage> normalized, int expected_num_classes) {
  for (const auto& img : normalized) {
    if (!img.normalized) throw Error("inference expects normalized range images");
  }
  const auto pred = infer(net, to_tensor(normalized), expected_num_classes);
  std::vector<LabelMap> out;
  for (long i = 0; i < pred.size(0); ++i) out.push_back(to_label_map(pred[i]));
  return out;
}

ConfusionMatrix confusion(const torch::Tensor& pred, const torch::Tensor& gt, const torch::Tensor& valid,
                          int num_classes_with_bg) {
  if (pred.sizes() != gt.sizes() || gt.sizes() != valid.sizes()) {
    throw Error("prediction, label and validity grids differ in shape");
  }
  const long n = num_classes_with_bg;
  const auto mask = valid.to(torch::kBool);
  const auto g = gt.to(torch::kInt64).masked_select(mask);
  const auto p = pred.to(torch::kInt64).masked_select(mask);
  if (g.numel() > 0 && (g.max().item<std::int64_t>() >= n || p.max().item<std::int64_t>() >= n ||
                        g.min().item<std::int64_t>() < 0 || p.min().item<std::int64_t>() < 0)) {
    throw Error("class id outside the confusion matrix");
  }
  const auto counts = torch::bincount(g * n + p, {}, n * n);
  const auto* c = counts.data_ptr<std::int64_t>();
  ConfusionMatrix cm(num_classes_with_bg);
  for (long i = 0; i < n * n; ++i) {
    if (c[i] > 0) cm.add(static_cast<int>(i / n), static_cast<int>(i % n), static_cast<std::uint64_t>(c[i]));
  }
  return cm;
}

ConfusionMatrix confusion(seg::SegNet& net, const DomainSplit& split) {
  const auto pred = infer(net, split.images);
  return confusion(pred, split.labels, split.valid, net.options().num_classes + 1);
}

IouResult evaluate(seg::SegNet& net, const DomainSplit& split) { return miou(confusion(net, split)); }

ConfusionMatrix point_confusion(seg::SegNet& net, const Corpus& corpus, const synth::DomainPairSpec& pair,
                                data::Domain domain, data::Split split) {
  const bool src = domain == data::Domain::kSource;
  const DomainSplit& frames = split == data::Split::kTrain ? (src ? corpus.source_train : corpus.target_train)
                                                           : (src ? corpus.source_val : corpus.target_val);
  const synth::DomainSpec& spec = src ? pair.source : pair.target;
  const auto index = data::DatasetIndex::load(corpus.root / (src ? "source" : "target") / "manifest.txt");
  std::map<std::string, std::uint64_t> seeds;
  for (const auto& r : index.records) seeds[r.frame_id] = r.seed;

  const auto pred = infer(net, frames.images);
  const SensorModel grid = synth::projection_geometry(pair, spec);
  ConfusionMatrix cm(net.options().num_classes + 1);
  for (long i = 0; i < frames.size(); ++i) {
    const auto it = seeds.find(frames.ids[i]);
    if (it == seeds.end()) throw Error("frame " + frames.ids[i] + " is not in the manifest");
    const synth::GeneratedFrame f = synth::generate_frame(pair, spec, it->second);
    if (f.cloud.points.empty()) continue;
    const Projection proj = project(f.cloud, grid);
    if (proj.labels.ids != to_label_map(frames.labels[i]).ids) {
      throw Error("frame " + frames.ids[i] + " does not match the generator settings");
    }
    cm.accumulate_points(to_label_map(pred[i]), f.cloud, proj);
  }
  return cm;
}

std::vector<StatsRow> translation_stats(i2i::TranslationEngine& engine, const Corpus& corpus) {
  torch::NoGradGuard no_grad;
  auto row = [](const char* setting, const char* images, const char* against, const torch::Tensor& batch,
                const stats::DomainStats& ref) {
    const auto m = stats::stats_mae(stats::batch_stats(batch.to(torch::kFloat64)), ref);
    return StatsRow{setting, images, against, m.mean_mae, m.cov_mae};
  };
  const auto& sv = corpus.source_val.images;
  const auto& tv = corpus.target_val.images;
  return {
      row("naive", "source_val", "target_train", sv, corpus.target_stats),
      row("naive", "target_val", "source_train", tv, corpus.source_stats),
      row("fake", "F(source_val)", "target_train", engine.source_to_target(sv), corpus.target_stats),
      row("fake", "G(target_val)", "source_train", engine.target_to_source(tv), corpus.source_stats),
  };
}

void write_stats_csv(const std::filesystem::path& path, const std::vector<StatsRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "setting,images,against,mean_mae,cov_mae\n";
  for (const auto& r : rows) {
    out << r.setting << "," << r.images << "," << r.against << "," << fmt(r.mean_mae) << "," << fmt(r.cov_mae)
        << "\n";
  }
}

ReportSummary emit_report(const std::filesystem::path& runs_dir, const std::filesystem::path& out_dir,
                          const std::vector<int>& subset_sizes, const std::vector<std::uint64_t>& seeds) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  ReportSummary summary;
  std::vector<std::string> class_names;

  struct Cell {
    std::vector<std::uint64_t> seeds;
    std::vector<double> miou;
    std::vector<std::vector<double>> per_class;
  };
  auto collect = [&](const fs::path& dir, const std::string& label) {
    Cell cell;
    for (auto seed : seeds) {
      const auto metrics = dir / ("seed_" + std::to_string(seed)) / "metrics.csv";
      if (!fs::exists(metrics)) {
        summary.warnings.push_back("missing run " + label + " seed " + std::to_string(seed) + " (" +
                                   metrics.string() + ")");
        continue;
      }
      try {
        const BestRow b = best_row(metrics);
        if (class_names.empty()) class_names = b.class_names;
        cell.seeds.push_back(seed);
        cell.miou.push_back(b.miou);
        cell.per_class.push_back(b.per_class);
      } catch (const Error& e) {
        summary.warnings.push_back(std::string("unreadable run ") + label + ": " + e.what());
      }
    }
    return cell;
  };

  struct TableRow {
    std::string method;
    std::string labeled;
    Cell cell;
  };
  std::vector<TableRow> table;
  table.push_back({"naive", "0", collect(runs_dir / "naive", "naive")});
  for (int k : subset_sizes) {
    const std::string sub = "k" + std::to_string(k);
    table.push_back({"finetune", std::to_string(k), collect(runs_dir / "finetune" / sub, "finetune " + sub)});
    table.push_back({"hylda", std::to_string(k), collect(runs_dir / "hylda" / sub, "hylda " + sub)});
  }
  table.push_back({"oracle", "all", collect(runs_dir / "oracle", "oracle")});

  {
    std::ofstream out(out_dir / "table1.csv");
    out << "method,labeled,runs,mean_miou,std_miou";
    for (const auto& c : class_names) out << ",iou_" << c;
    out << "\n";
    for (const auto& row : table) {
      const MeanStd ms = mean_std(row.cell.miou);
      out << row.method << "," << row.labeled << "," << ms.n << "," << fmt(ms.mean) << "," << fmt(ms.sd);
      for (std::size_t c = 0; c < class_names.size(); ++c) {
        std::vector<double> v;
        for (const auto& pc : row.cell.per_class) {
          if (c < pc.size() && !std::isnan(pc[c])) v.push_back(pc[c]);
        }
        out << "," << fmt(mean_std(v).mean);
      }
      out << "\n";
    }
    summary.written.push_back(out_dir / "table1.csv");
  }

  {
    std::ofstream out(out_dir / "runs.csv");
    out << "method,labeled,seed,miou";
    for (const auto& c : class_names) out << ",iou_" << c;
    out << "\n";
    for (const auto& row : table) {
      for (std::size_t i = 0; i < row.cell.miou.size(); ++i) {
        out << row.method << "," << row.labeled << "," << row.cell.seeds[i] << "," << fmt(row.cell.miou[i]);
        for (std::size_t c = 0; c < class_names.size(); ++c) {
          const auto& pc = row.cell.per_class[i];
          out << "," << (c < pc.size() ? fmt(pc[c]) : std::string("nan"));
        }
        out << "\n";
      }
    }
    summary.written.push_back(out_dir / "runs.csv");
  }

  // Statistics table: average each stats.csv row over the hylda runs.
  {
    std::map<std::string, std::vector<std::pair<double, double>>> acc;
    std::vector<std::string> order;
    for (int k : subset_sizes) {
      for (auto seed : seeds) {
        const auto p = runs_dir / "hylda" / ("k" + std::to_string(k)) / ("seed_" + std::to_string(seed)) /
                       "stats.csv";
        if (!fs::exists(p)) continue;
        const Csv csv = read_csv(p);
        for (const auto& r : csv.rows) {
          const std::string key = r[0] + "," + r[1] + "," + r[2];
          if (!acc.count(key)) order.push_back(key);
          acc[key].emplace_back(to_double(r[3]), to_double(r[4]));
        }
      }
    }
    std::ofstream out(out_dir / "table3.csv");
    out << "setting,images,against,runs,mean_mae,cov_mae\n";
    for (const auto& key : order) {
      std::vector<double> m, c;
      for (auto [a, b] : acc[key]) {
        m.push_back(a);
        c.push_back(b);
      }
      out << key << "," << m.size() << "," << fmt(mean_std(m).mean) << "," << fmt(mean_std(c).mean) << "\n";
    }
    if (order.empty()) summary.warnings.push_back("no hylda stats.csv found; statistics table is empty");
    summary.written.push_back(out_dir / "table3.csv");
  }

  {
    Series hy{"hylda", {}}, ft{"finetune", {}};
    for (const auto& row : table) {
      if (row.method == "hylda") hy.points.emplace_back(std::stod(row.labeled), mean_std(row.cell.miou).mean);
      if (row.method == "finetune") ft.points.emplace_back(std::stod(row.labeled), mean_std(row.cell.miou).mean);
    }
    Series naive{"naive", {{0.0, mean_std(table.front().cell.miou).mean}}};
    Series oracle{"oracle", {{0.0, mean_std(table.back().cell.miou).mean}}};
    write_line_svg(out_dir / "miou_vs_labeled.svg", "target val mIoU", "labeled target frames", {hy, ft},
                   {naive, oracle});
    summary.written.push_back(out_dir / "miou_vs_labeled.svg");
  }

  const auto ablation = runs_dir / "ablation" / "ablation_summary.csv";
  if (fs::exists(ablation)) {
    const Csv csv = read_csv(ablation);
    std::vector<std::pair<std::string, double>> bars;
    const int v = csv.column("variant"), m = csv.column("mean_miou");
    for (const auto& r : csv.rows) bars.emplace_back(r[v], to_double(r[m]));
    write_bar_svg(out_dir / "ablation.svg", "ablation mIoU", bars);
    summary.written.push_back(out_dir / "ablation.svg");
  }
  return summary;
}

}  // namespace hylda::eval
