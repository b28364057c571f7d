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
#include "hylda/segmentation.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hylda/common.hpp"
#include "oracles.hpp"

namespace hylda::seg {
namespace {

TEST(SegNetTest, OutputShapeAndSoftmax) {
  torch::manual_seed(1);
  SegNet net(SegOptions{}, Role::kTarget);
  for (auto [h, w] : {std::pair{16, 32}, std::pair{8, 64}}) {
    const auto s = net.forward(torch::rand({2, 5, h, w}));
    EXPECT_EQ(s.sizes(), (std::vector<int64_t>{2, 7, h, w}));
    const auto sums = torch::softmax(s, 1).sum(1);
    EXPECT_LT((sums - 1).abs().max().item<float>(), 1e-5f);
  }
  EXPECT_THROW(net.forward(torch::rand({1, 4, 16, 32})), Error);
}

TEST(SegNetTest, EvalDeterminismAndPredict) {
  torch::manual_seed(2);
  SegNet net(SegOptions{}, Role::kTarget);
  const auto x = torch::rand({1, 5, 16, 32});
  EXPECT_TRUE(torch::equal(net.forward(x), net.forward(x)));
  EXPECT_TRUE(torch::equal(net.predict(x), net.forward(x).argmax(1)));
}

TEST(SegNetTest, FreezeBlocksTraining) {
  torch::manual_seed(3);
  SegNet ref(SegOptions{}, Role::kTarget);
  ref.freeze();
  EXPECT_EQ(ref.role(), Role::kRefSource);
  for (const auto& p : ref.encoder->parameters()) EXPECT_FALSE(p.requires_grad());
  EXPECT_THROW(ref.set_trainable(true), Error);
  SegNet other(SegOptions{}, Role::kTarget);
  EXPECT_THROW(ref.copy_weights_from(other), Error);
  other.copy_weights_from(ref);
  EXPECT_EQ(other.hash(), ref.hash());
}

TEST(SegNetTest, CheckpointCarriesNoAuxDecoder) {
  torch::manual_seed(4);
  SegNet net(SegOptions{}, Role::kTarget);
  const Checkpoint ck = net.to_checkpoint();
  EXPECT_FALSE(ck.has_prefix("aux"));
  for (const auto& [name, t] : ck.tensors) {
    EXPECT_TRUE(name.rfind("f_enc.", 0) == 0 || name.rfind("f_dec.", 0) == 0) << name;
  }
  const SegNet back = SegNet::from_checkpoint(ck, Role::kRefSource);
  EXPECT_EQ(back.hash(), net.hash());
}

TEST(AuxDecoderTest, ReconstructionIsBounded) {
  torch::manual_seed(5);
  SegNet net(SegOptions{}, Role::kTarget);
  SegDecoder aux = make_aux_decoder(net.options());
  const auto rec = aux->forward(net.encoder->forward(torch::rand({2, 5, 16, 32}) * 100));
  EXPECT_EQ(rec.sizes(), (std::vector<int64_t>{2, 5, 16, 32}));
  EXPECT_LE(rec.abs().max().item<float>(), 1.0f);
}

TEST(AuxLossTest, OffsetOneChannel) {
  const auto x = torch::rand({2, 5, 4, 4}, torch::kFloat64);
  EXPECT_EQ(aux_loss(x, x).item<double>(), 0.0);
  auto shifted = x.clone();
  shifted.select(1, 2) += 0.2;
  EXPECT_NEAR(aux_loss(x, shifted).item<double>(), 0.2 / 5, 1e-12);
  std::mt19937_64 rng(6);
  const auto a = oracle::uniform(rng, {1, 1, 2, 2}), b = oracle::uniform(rng, {1, 1, 2, 2});
  EXPECT_NEAR(aux_loss(a, b).item<double>(), oracle::mean_abs(oracle::flat(a), oracle::flat(b)), 1e-15);
  EXPECT_THROW(aux_loss(x, x.narrow(2, 0, 2)), Error);
}

// Scores whose softmax puts probability `p` on class `c` and spreads the
// rest evenly over the other classes.
torch::Tensor scores_with(double p, long c, long classes) {
  auto s = torch::full({classes}, std::log((1 - p) / (classes - 1)), torch::kFloat64);
  s[c] = std::log(p);
  return s;
}

TEST(WeightedCrossEntropyTest, HandComputedTwoPixels) {
  auto scores = torch::empty({1, 2, 1, 2}, torch::kFloat64);
  scores.select(3, 0).select(0, 0).copy_(scores_with(0.5, 0, 2).reshape({2, 1}));
  scores.select(3, 1).select(0, 0).copy_(scores_with(0.25, 1, 2).reshape({2, 1}));
  const auto labels = torch::tensor({0, 1}, torch::kInt64).reshape({1, 1, 2});
  const auto alpha = torch::tensor({1.0, 2.0}, torch::kFloat64);
  const double want = (-std::log(0.5) - 2 * std::log(0.25)) / 2;
  EXPECT_NEAR(weighted_cross_entropy(scores, labels, alpha).item<double>(), want, 1e-12);
  EXPECT_NEAR(want, 1.7329, 1e-4);
  EXPECT_DOUBLE_EQ(unsupervised_cross_entropy(scores, labels, alpha).item<double>(),
                   weighted_cross_entropy(scores, labels, alpha).item<double>());
}

TEST(WeightedCrossEntropyTest, PerfectPredictionAndUnitWeights) {
  std::mt19937_64 rng(7);
  const auto labels = oracle::random_labels(rng, 2, 3, 4, 4);
  const auto perfect = torch::one_hot(labels, 4).permute({0, 3, 1, 2}).to(torch::kFloat64) * 60.0;
  EXPECT_LT(weighted_cross_entropy(perfect, labels, torch::ones({4}, torch::kFloat64)).item<double>(), 1e-20);
  const auto scores = oracle::uniform(rng, {2, 4, 3, 4}, -3, 3);
  const double plain = torch::nn::functional::cross_entropy(scores, labels).item<double>();
  EXPECT_NEAR(weighted_cross_entropy(scores, labels, torch::ones({4}, torch::kFloat64)).item<double>(), plain, 1e-12);
  const double f = 9.0;
  EXPECT_NEAR(weighted_cross_entropy(scores, labels, torch::full({4}, 1 / std::sqrt(f), torch::kFloat64)).item<double>(),
              plain / std::sqrt(f), 1e-12);
}

TEST(WeightedCrossEntropyTest, MatchesOracleAndGradient) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const auto shape = oracle::random_shape(rng);
    const auto scores = oracle::uniform(rng, {shape.b, shape.k + 1, shape.h, shape.w}, -3, 3);
    const auto labels = oracle::random_labels(rng, shape.b, shape.h, shape.w, shape.k + 1);
    const auto alpha = oracle::uniform(rng, {shape.k + 1}, 0.1, 2.0);
    EXPECT_TRUE(oracle::close_rel(weighted_cross_entropy(scores, labels, alpha).item<double>(),
                                  oracle::weighted_ce(scores, labels, oracle::flat(alpha)), 1e-12));
    EXPECT_LT(oracle::gradient_error(
                  [&](const torch::Tensor& s) { return weighted_cross_entropy(s, labels, alpha); }, scores),
              1e-4);
  }
}

TEST(WeightedCrossEntropyTest, ContractErrors) {
  const auto scores = torch::zeros({1, 3, 2, 2});
  EXPECT_THROW(weighted_cross_entropy(scores, torch::full({1, 2, 2}, 3, torch::kInt64), torch::ones({3})), Error);
  EXPECT_THROW(weighted_cross_entropy(scores, torch::zeros({1, 2, 3}, torch::kInt64), torch::ones({3})), Error);
  EXPECT_THROW(weighted_cross_entropy(scores, torch::zeros({1, 2, 2}, torch::kInt64), torch::ones({2})), Error);
}

TEST(ClassWeightsTest, InverseSquareRootAndAbsentClasses) {
  const std::vector<std::uint64_t> counts = {4, 0, 100, 1};
  const auto a = class_weights(counts);
  EXPECT_DOUBLE_EQ(a[0].item<double>(), 0.5);
  EXPECT_DOUBLE_EQ(a[1].item<double>(), 0.0);
  EXPECT_DOUBLE_EQ(a[2].item<double>(), 0.1);
  EXPECT_DOUBLE_EQ(a[3].item<double>(), 1.0);
  const auto labels = torch::tensor({0, 2, 2, 3, 0}, torch::kInt64).reshape({1, 1, 5});
  EXPECT_EQ(class_counts(labels, 4), (std::vector<std::uint64_t>{2, 0, 2, 1}));
  EXPECT_THROW(class_counts(labels, 3), Error);
}

TEST(SemanticConsistencyTest, SwappedClassesAndOracle) {
  const long k1 = 4;
  auto ref = torch::empty({1, k1, 2, 3}, torch::kFloat64);
  auto tgt = torch::empty({1, k1, 2, 3}, torch::kFloat64);
  // Probabilities (0.6, 0.2, 0.1, 0.1) vs (0.2, 0.6, 0.1, 0.1): gap 0.4 on two classes.
  const auto p = torch::tensor({0.6, 0.2, 0.1, 0.1}, torch::kFloat64).log().reshape({k1, 1, 1});
  const auto q = torch::tensor({0.2, 0.6, 0.1, 0.1}, torch::kFloat64).log().reshape({k1, 1, 1});
  ref[0] = p.expand({k1, 2, 3});
  tgt[0] = q.expand({k1, 2, 3});
  EXPECT_NEAR(semantic_consistency_loss(ref, tgt).item<double>(), 2 * 0.4 / k1, 1e-12);
  EXPECT_EQ(semantic_consistency_loss(ref, ref).item<double>(), 0.0);
  std::mt19937_64 rng(9);
  for (int t = 0; t < 10; ++t) {
    const auto a = oracle::uniform(rng, {2, 3, 2, 2}, -2, 2), b = oracle::uniform(rng, {2, 3, 2, 2}, -2, 2);
    EXPECT_TRUE(oracle::close_rel(semantic_consistency_loss(a, b).item<double>(), oracle::semantic(a, b), 1e-12));
  }
  EXPECT_THROW(semantic_consistency_loss(ref, tgt.narrow(3, 0, 2)), Error);
}

TEST(SemanticConsistencyTest, ReferenceSideCarriesNoGradient) {
  auto ref = torch::rand({1, 3, 2, 2}, torch::kFloat64).set_requires_grad(true);
  auto tgt = torch::rand({1, 3, 2, 2}, torch::kFloat64).set_requires_grad(true);
  semantic_consistency_loss(ref, tgt).backward();
  EXPECT_FALSE(ref.grad().defined());
  EXPECT_TRUE(tgt.grad().defined());
}

TEST(CombinedUnsupervisedTest, Weighting) {
  auto t = [](double v) { return torch::tensor(v, torch::kFloat64); };
  EXPECT_NEAR(combined_unsupervised_loss(t(0.7), t(0.3), 1.0).item<double>(), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(combined_unsupervised_loss(t(0.7), t(0.3), 0.0).item<double>(), 0.7);
  EXPECT_DOUBLE_EQ(combined_unsupervised_loss(t(0), t(0), 1.0).item<double>(), 0.0);
}

TEST(UnsupervisedCrossEntropyTest, GradientReachesTranslatedPixels) {
  torch::manual_seed(10);
  SegNet net(SegOptions{}, Role::kTarget);
  auto fake = (torch::rand({1, 5, 8, 16}) * 2 - 1).set_requires_grad(true);
  const auto labels = torch::randint(0, 7, {1, 8, 16}, torch::kInt64);
  unsupervised_cross_entropy(net.forward(fake), labels, torch::ones({7})).backward();
  EXPECT_GT(fake.grad().abs().sum().item<float>(), 0.0f);
}

}  // namespace
}  // namespace hylda::seg
