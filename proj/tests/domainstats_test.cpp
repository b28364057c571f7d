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
#include "hylda/domainstats.hpp"

#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "hylda/common.hpp"
#include "hylda/corpus.hpp"
#include "hylda/synthlidar.hpp"
#include "hylda/tensor_bridge.hpp"
#include "oracles.hpp"

namespace hylda::stats {
namespace {

namespace fs = std::filesystem;

RangeImage column_frame(std::vector<float> range_column) {
  RangeImage img(static_cast<int>(range_column.size()), 1);
  for (int v = 0; v < img.height; ++v) img.at(kRange, v, 0) = range_column[v];
  img.valid.assign(img.pixels(), 1);
  img.normalized = true;
  return img;
}

TEST(PrecomputeStatsTest, TwoSampleCovariance) {
  const std::vector<RangeImage> frames = {column_frame({1, 0}), column_frame({0, 1})};
  const DomainStats s = precompute_stats(frames);
  EXPECT_TRUE(torch::allclose(s.mean_image, torch::full({2, 1}, 0.5, torch::kFloat64)));
  const auto want = torch::tensor({0.5, -0.5, -0.5, 0.5}, torch::kFloat64).reshape({2, 2});
  EXPECT_TRUE(torch::allclose(s.cov, want));
}

TEST(PrecomputeStatsTest, IdenticalFramesHaveZeroCovariance) {
  std::mt19937_64 rng(1);
  RangeImage f(4, 6);
  std::uniform_real_distribution<float> d(-1, 1);
  for (auto& v : f.data) v = d(rng);
  f.valid.assign(f.pixels(), 1);
  f.normalized = true;
  const std::vector<RangeImage> frames(3, f);
  const DomainStats s = precompute_stats(frames);
  // Each column is its own sample, so identical frames still vary across
  // columns; the covariance of a single repeated column is zero.
  RangeImage col = column_frame({0.3f, -0.2f, 0.9f});
  const DomainStats c = precompute_stats(std::vector<RangeImage>(4, col));
  EXPECT_EQ(c.cov.abs().max().item<double>(), 0.0);
  EXPECT_NEAR(c.mean_image[2][0].item<double>(), 0.9, 1e-6);
  for (int v = 0; v < 4; ++v) {
    for (int u = 0; u < 6; ++u) EXPECT_NEAR(s.mean_image[v][u].item<double>(), f.at(kRange, v, u), 1e-6);
  }
}

TEST(PrecomputeStatsTest, ContractErrors) {
  EXPECT_THROW(precompute_stats(std::vector<RangeImage>{column_frame({1, 2})}), Error);
  RangeImage raw = column_frame({1, 2});
  raw.normalized = false;
  EXPECT_THROW(precompute_stats(std::vector<RangeImage>{raw, raw}), Error);
  EXPECT_THROW(precompute_stats(std::vector<RangeImage>{}), Error);
}

std::vector<RangeImage> random_frames(std::mt19937_64& rng, int n, int h, int w) {
  std::vector<RangeImage> out;
  std::uniform_real_distribution<float> d(-1, 1);
  for (int i = 0; i < n; ++i) {
    RangeImage f(h, w);
    for (auto& v : f.data) v = d(rng);
    f.valid.assign(f.pixels(), 1);
    f.normalized = true;
    out.push_back(std::move(f));
  }
  return out;
}

TEST(PrecomputeStatsTest, FrameAndColumnOrderInvariance) {
  std::mt19937_64 rng(2);
  auto frames = random_frames(rng, 5, 4, 7);
  const DomainStats a = precompute_stats(frames);
  std::reverse(frames.begin(), frames.end());
  const DomainStats b = precompute_stats(frames);
  EXPECT_LT(stats_mae(a, b).cov_mae, 1e-15);
  EXPECT_LT(stats_mae(a, b).mean_mae, 1e-15);
  // A common column permutation permutes the mean image but not the covariance.
  for (auto& f : frames) {
    RangeImage g = f;
    for (int c = 0; c < f.channels; ++c)
      for (int v = 0; v < f.height; ++v)
        for (int u = 0; u < f.width; ++u) g.at(c, v, u) = f.at(c, v, (u + 3) % f.width);
    f = g;
  }
  const DomainStats c = precompute_stats(frames);
  EXPECT_TRUE(torch::allclose(c.cov, a.cov, 1e-12, 1e-14));
}

TEST(BatchStatsTest, WholeDatasetMatchesPrecompute) {
  std::mt19937_64 rng(3);
  const auto frames = random_frames(rng, 6, 4, 5);
  const DomainStats pre = precompute_stats(frames);
  const DomainStats batch = batch_stats(to_tensor(frames).to(torch::kFloat64));
  EXPECT_TRUE(torch::equal(pre.cov, batch.cov));
  EXPECT_TRUE(torch::equal(pre.mean_image, batch.mean_image));
}

TEST(BatchStatsTest, MatchesLoopOracle) {
  std::mt19937_64 rng(4);
  const auto x = oracle::uniform(rng, {3, 5, 6, 9});
  const DomainStats s = batch_stats(x);
  const oracle::Stats o = oracle::batch_stats(x);
  const auto cov = oracle::flat(s.cov), mean = oracle::flat(s.mean_image);
  for (std::size_t i = 0; i < cov.size(); ++i) EXPECT_NEAR(cov[i], o.cov[i], 1e-12);
  for (std::size_t i = 0; i < mean.size(); ++i) EXPECT_NEAR(mean[i], o.mean[i], 1e-12);
  EXPECT_TRUE(torch::allclose(s.cov, s.cov.transpose(0, 1)));
  EXPECT_GE(s.cov.diagonal().min().item<double>(), 0.0);
}

TEST(BatchStatsTest, CovarianceGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  const auto x = oracle::uniform(rng, {2, 5, 4, 6});
  const double err = oracle::gradient_error([](const torch::Tensor& t) { return batch_stats(t).cov[0][0]; }, x);
  EXPECT_LT(err, 1e-4);
}

TEST(StatsMaeTest, OffsetAndMetricProperties) {
  DomainStats a{torch::zeros({2, 3}), torch::zeros({2, 2})};
  DomainStats b{torch::full({2, 3}, 0.5), torch::zeros({2, 2})};
  EXPECT_DOUBLE_EQ(stats_mae(a, b).mean_mae, 0.5);
  EXPECT_DOUBLE_EQ(stats_mae(a, b).cov_mae, 0.0);
  EXPECT_DOUBLE_EQ(stats_mae(a, a).mean_mae, 0.0);
  std::mt19937_64 rng(6);
  DomainStats p{oracle::uniform(rng, {3, 4}), oracle::uniform(rng, {3, 3})};
  DomainStats q{oracle::uniform(rng, {3, 4}), oracle::uniform(rng, {3, 3})};
  DomainStats r{oracle::uniform(rng, {3, 4}), oracle::uniform(rng, {3, 3})};
  EXPECT_DOUBLE_EQ(stats_mae(p, q).cov_mae, stats_mae(q, p).cov_mae);
  EXPECT_LE(stats_mae(p, r).mean_mae, stats_mae(p, q).mean_mae + stats_mae(q, r).mean_mae + 1e-15);
  EXPECT_LE(stats_mae(p, r).cov_mae, stats_mae(p, q).cov_mae + stats_mae(q, r).cov_mae + 1e-15);
  DomainStats bad{torch::zeros({2, 4}), torch::zeros({2, 2})};
  EXPECT_THROW(stats_mae(a, bad), Error);
}

TEST(StatisticsLossTest, ZeroAtTargetsAndSingleTermIsolation) {
  std::mt19937_64 rng(7);
  const auto fs = oracle::uniform(rng, {2, 5, 4, 6});
  const auto ft = oracle::uniform(rng, {2, 5, 4, 6});
  const DomainStats ts = batch_stats(fs), tt = batch_stats(ft);
  EXPECT_DOUBLE_EQ(statistics_loss(fs, ft, ts, tt).item<double>(), 0.0);
  DomainStats shifted{ts.mean_image + 0.3, ts.cov};
  EXPECT_NEAR(statistics_loss(fs, ft, shifted, tt).item<double>(), 0.3, 1e-12);
  EXPECT_THROW(statistics_loss(fs, ft, DomainStats{torch::zeros({3, 6}), torch::zeros({3, 3})}, tt), Error);
}

TEST(StatisticsLossTest, MatchesLoopOracleOnTinyBatches) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const auto fs = oracle::uniform(rng, {2, 5, 2, 2});
    const auto ft = oracle::uniform(rng, {2, 5, 2, 2});
    const oracle::Stats os{oracle::flat(oracle::uniform(rng, {2, 2})), oracle::flat(oracle::uniform(rng, {2, 2}))};
    const oracle::Stats ot{oracle::flat(oracle::uniform(rng, {2, 2})), oracle::flat(oracle::uniform(rng, {2, 2}))};
    auto as = [](const oracle::Stats& s) {
      return DomainStats{torch::tensor(s.mean, torch::kFloat64).reshape({2, 2}),
                         torch::tensor(s.cov, torch::kFloat64).reshape({2, 2})};
    };
    const double got = statistics_loss(fs, ft, as(os), as(ot)).item<double>();
    EXPECT_TRUE(oracle::close_rel(got, oracle::stats_loss(fs, ft, os, ot), 1e-12)) << t;
  }
}

TEST(StatisticsLossTest, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  const auto fs = oracle::uniform(rng, {2, 5, 4, 6});
  const auto ft = oracle::uniform(rng, {2, 5, 4, 6});
  const DomainStats s0 = batch_stats(fs), t0 = batch_stats(ft);
  const DomainStats ts{oracle::displaced(rng, s0.mean_image, 0.05), oracle::displaced(rng, s0.cov, 0.05)};
  const DomainStats tt{oracle::displaced(rng, t0.mean_image, 0.05), oracle::displaced(rng, t0.cov, 0.05)};
  EXPECT_LT(oracle::gradient_error([&](const torch::Tensor& x) { return statistics_loss(x, ft, ts, tt); }, fs), 1e-4);
  EXPECT_LT(oracle::gradient_error([&](const torch::Tensor& x) { return statistics_loss(fs, x, ts, tt); }, ft), 1e-4);
}

TEST(DomainStatsFileTest, RoundTrip) {
  std::mt19937_64 rng(10);
  DomainStats s{oracle::uniform(rng, {3, 4}).to(torch::kFloat32), oracle::uniform(rng, {3, 3}).to(torch::kFloat32)};
  const auto path = fs::temp_directory_path() / "hylda_stats_test.hyls";
  s.save(path);
  const DomainStats back = DomainStats::load(path);
  EXPECT_TRUE(torch::equal(back.mean_image, s.mean_image));
  EXPECT_TRUE(torch::equal(back.cov, s.cov));
  fs::remove(path);
}

StatsMae train_gap(const synth::DomainPairSpec& pair, const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  synth::build_domain_pair(pair, dir);
  precompute_corpus_stats(dir);
  const Corpus c = load_corpus(dir);
  fs::remove_all(dir);
  return stats_mae(c.source_stats, c.target_stats);
}

TEST(DomainGapTest, DefaultPairDiffers) {
  const StatsMae gap = train_gap(synth::default_pair_spec(), "hylda_gap_default");
  EXPECT_GT(gap.mean_mae, 0.0);
  EXPECT_GT(gap.cov_mae, 0.0);
}

TEST(DomainGapTest, BeamCountAloneOpensCovarianceGap) {
  synth::DomainPairSpec pair = synth::default_pair_spec();
  pair.target = pair.source;
  pair.target.name = "target";
  pair.target.sensor.beams = pair.source.sensor.beams / 2;
  pair.source.n_train = pair.target.n_train = 8;
  pair.source.n_val = pair.target.n_val = 2;
  EXPECT_GT(train_gap(pair, "hylda_gap_beams").cov_mae, 0.0);
}

}  // namespace
}  // namespace hylda::stats
