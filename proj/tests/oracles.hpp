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
#ifndef HYLDA_TESTS_ORACLES_HPP_
#define HYLDA_TESTS_ORACLES_HPP_

// Loop-based reference computations of the training losses, written from
// their definitions with no tensor arithmetic, plus a central-difference
// gradient probe. Shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <torch/torch.h>

#include "hylda/rangeview.hpp"

namespace hylda::oracle {

inline std::vector<double> flat(const torch::Tensor& t) {
  const auto c = t.detach().to(torch::kFloat64).contiguous().reshape({-1});
  return {c.data_ptr<double>(), c.data_ptr<double>() + c.numel()};
}

inline double mean_abs(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

inline double mean_sq_from(const std::vector<double>& a, double target) {
  double s = 0.0;
  for (double v : a) s += (v - target) * (v - target);
  return s / static_cast<double>(a.size());
}

// Range channel of a [B, C, H, W] batch: mean image [H*W] and the
// column covariance [H*H] with denominator B*W - 1.
struct Stats {
  std::vector<double> mean, cov;
};

inline Stats batch_stats(const torch::Tensor& batch) {
  const long b = batch.size(0), c = batch.size(1), h = batch.size(2), w = batch.size(3);
  const auto v = flat(batch);
  auto at = [&](long n, long row, long col) { return v[((n * c + kRange) * h + row) * w + col]; };
  Stats s;
  s.mean.assign(h * w, 0.0);
  for (long n = 0; n < b; ++n)
    for (long r = 0; r < h; ++r)
      for (long q = 0; q < w; ++q) s.mean[r * w + q] += at(n, r, q) / b;
  std::vector<double> beam_mean(h, 0.0);
  for (long r = 0; r < h; ++r) {
    for (long n = 0; n < b; ++n)
      for (long q = 0; q < w; ++q) beam_mean[r] += at(n, r, q);
    beam_mean[r] /= static_cast<double>(b * w);
  }
  s.cov.assign(h * h, 0.0);
  for (long i = 0; i < h; ++i) {
    for (long j = 0; j < h; ++j) {
      double acc = 0.0;
      for (long n = 0; n < b; ++n)
        for (long q = 0; q < w; ++q) acc += (at(n, i, q) - beam_mean[i]) * (at(n, j, q) - beam_mean[j]);
      s.cov[i * h + j] = acc / static_cast<double>(b * w - 1);
    }
  }
  return s;
}

inline double self_loss(const torch::Tensor& y, const torch::Tensor& y_rec, const torch::Tensor& x,
                        const torch::Tensor& x_rec) {
  return mean_abs(flat(y_rec), flat(y)) + mean_abs(flat(x_rec), flat(x));
}

inline double stats_loss(const torch::Tensor& fake_s, const torch::Tensor& fake_t, const Stats& target_s,
                         const Stats& target_t) {
  const Stats s = batch_stats(fake_s), t = batch_stats(fake_t);
  return mean_abs(s.cov, target_s.cov) + mean_abs(t.cov, target_t.cov) + mean_abs(s.mean, target_s.mean) +
         mean_abs(t.mean, target_t.mean);
}

inline double lsgan_generator(const torch::Tensor& full, const torch::Tensor& early) {
  return 0.5 * (mean_sq_from(flat(full), 1.0) + mean_sq_from(flat(early), 1.0));
}

inline double lsgan_discriminator(const torch::Tensor& real_full, const torch::Tensor& real_early,
                                  const torch::Tensor& fake_full, const torch::Tensor& fake_early) {
  const double full = 0.5 * mean_sq_from(flat(real_full), 1.0) + 0.5 * mean_sq_from(flat(fake_full), 0.0);
  const double early = 0.5 * mean_sq_from(flat(real_early), 1.0) + 0.5 * mean_sq_from(flat(fake_early), 0.0);
  return 0.5 * (full + early);
}

// Softmax over the class axis of [B, K1, H, W]; result laid out the same way.
inline std::vector<double> softmax(const torch::Tensor& scores) {
  const long b = scores.size(0), k = scores.size(1), hw = scores.size(2) * scores.size(3);
  const auto v = flat(scores);
  std::vector<double> p(v.size());
  for (long n = 0; n < b; ++n) {
    for (long i = 0; i < hw; ++i) {
      double m = -INFINITY;
      for (long c = 0; c < k; ++c) m = std::max(m, v[(n * k + c) * hw + i]);
      double z = 0.0;
      for (long c = 0; c < k; ++c) z += std::exp(v[(n * k + c) * hw + i] - m);
      for (long c = 0; c < k; ++c) p[(n * k + c) * hw + i] = std::exp(v[(n * k + c) * hw + i] - m) / z;
    }
  }
  return p;
}

// -sum_i alpha_i p(c_i) log p(hat c_i) with one-hot p(c), averaged over pixels.
inline double weighted_ce(const torch::Tensor& scores, const torch::Tensor& labels,
                          const std::vector<double>& alpha) {
  const long b = scores.size(0), k = scores.size(1), hw = scores.size(2) * scores.size(3);
  const auto p = softmax(scores);
  const auto lab = flat(labels);
  double s = 0.0;
  for (long n = 0; n < b; ++n) {
    for (long i = 0; i < hw; ++i) {
      for (long c = 0; c < k; ++c) {
        const double target = static_cast<long>(lab[n * hw + i]) == c ? 1.0 : 0.0;
        s -= alpha[c] * target * std::log(p[(n * k + c) * hw + i]);
      }
    }
  }
  return s / static_cast<double>(b * hw);
}

inline double semantic(const torch::Tensor& ref_scores, const torch::Tensor& target_scores) {
  return mean_abs(softmax(ref_scores), softmax(target_scores));
}

inline bool close_rel(double got, double want, double rel) {
  return std::fabs(got - want) <= rel * std::max(std::fabs(want), 1e-12);
}

// Central differences of `f` with respect to every element of `x` (float64),
// compared with the autograd gradient. Returns the largest error relative to
// the largest finite-difference gradient component.
inline double gradient_error(const std::function<torch::Tensor(const torch::Tensor&)>& f, torch::Tensor x,
                             double h = 1e-3) {
  x = x.detach().to(torch::kFloat64).clone().set_requires_grad(true);
  const auto loss = f(x);
  const auto g = torch::autograd::grad({loss}, {x}, {}, false, false, /*allow_unused=*/true)[0];
  const auto analytic = flat(g.defined() ? g : torch::zeros_like(x));
  std::vector<double> numeric(analytic.size());
  {
    torch::NoGradGuard no_grad;
    auto probe = x.detach().clone();
    auto* p = probe.data_ptr<double>();
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      const double keep = p[i];
      p[i] = keep + h;
      const double up = f(probe).item<double>();
      p[i] = keep - h;
      const double down = f(probe).item<double>();
      p[i] = keep;
      numeric[i] = (up - down) / (2 * h);
    }
  }
  double scale = 0.0, err = 0.0;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    scale = std::max(scale, std::fabs(numeric[i]));
    err = std::max(err, std::fabs(numeric[i] - analytic[i]));
  }
  return scale > 0.0 ? err / scale : err;
}

// Random tiny shapes: H in 2..8, W in 2..16, K in 2..4 (K+1 score channels).
struct TinyShape {
  long b, c, h, w, k;
};

inline TinyShape random_shape(std::mt19937_64& rng, long channels = 5) {
  auto pick = [&](long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(rng); };
  return {pick(1, 3), channels, pick(2, 8), pick(2, 16), pick(2, 4)};
}

inline torch::Tensor uniform(std::mt19937_64& rng, at::IntArrayRef sizes, double lo = -1.0, double hi = 1.0) {
  auto t = torch::empty(sizes, torch::kFloat64);
  std::uniform_real_distribution<double> d(lo, hi);
  auto* p = t.data_ptr<double>();
  for (long i = 0; i < t.numel(); ++i) p[i] = d(rng);
  return t;
}

// `base` shifted elementwise by +/- (margin + U(0, margin)), keeping every
// |difference| well clear of an L1 kink.
inline torch::Tensor displaced(std::mt19937_64& rng, const torch::Tensor& base, double margin) {
  auto t = base.detach().to(torch::kFloat64).clone().contiguous();
  std::uniform_real_distribution<double> d(0.0, margin);
  std::bernoulli_distribution sign(0.5);
  auto* p = t.data_ptr<double>();
  for (long i = 0; i < t.numel(); ++i) p[i] += (sign(rng) ? 1.0 : -1.0) * (margin + d(rng));
  return t;
}

inline torch::Tensor random_labels(std::mt19937_64& rng, long b, long h, long w, long classes) {
  auto t = torch::empty({b, h, w}, torch::kInt64);
  std::uniform_int_distribution<long> d(0, classes - 1);
  auto* p = t.data_ptr<std::int64_t>();
  for (long i = 0; i < t.numel(); ++i) p[i] = d(rng);
  return t;
}

}  // namespace hylda::oracle

#endif  // HYLDA_TESTS_ORACLES_HPP_
