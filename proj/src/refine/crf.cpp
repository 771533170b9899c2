/* Copyright 2026 The AMNKit Authors. All Rights Reserved.

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
#include "amnkit/refine/crf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace amnkit::refine {
namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void ValidateDistribution(const Tensor& probs, const char* what) {
  RequireRank(probs, 3, what);
  const std::size_t l = probs.extent(2);
  const auto v = probs.values();
  for (std::size_t base = 0; base < v.size(); base += l) {
    double sum = 0.0;
    for (std::size_t k = 0; k < l; ++k) {
      if (!(v[base + k] >= 0.0)) {
        throw std::invalid_argument(std::string(what) +
                                    ": negative or NaN probability at pixel " +
                                    std::to_string(base / l));
      }
      sum += v[base + k];
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw std::invalid_argument(std::string(what) + ": pixel " +
                                  std::to_string(base / l) + " sums to " +
                                  std::to_string(sum));
    }
  }
}

// Dense [HW, HW] message matrix: row i holds
//   w_a k_a(i,j) / Z_a(i) + w_s k_s(i,j) / Z_s(i)  for j != i, 0 on the diagonal.
// Built into `m`, which is reused across calls to avoid reallocating.
void PairwiseMatrix(const Tensor& image, const CrfConfig& cfg, RowMat& m) {
  using Array = Eigen::ArrayXd;
  const std::size_t h = image.extent(0), w = image.extent(1);
  const std::size_t n = h * w;
  const std::size_t ch = image.extent(2);
  // Spatial factors depend only on the offset; a run of one table row covers
  // a full image row of j for fixed i.
  const std::size_t ow = 2 * w - 1;
  std::vector<double> spatial_a((2 * h - 1) * ow), spatial_s((2 * h - 1) * ow);
  for (std::size_t dy = 0; dy < 2 * h - 1; ++dy) {
    for (std::size_t dx = 0; dx < ow; ++dx) {
      const double y = static_cast<double>(dy) - static_cast<double>(h - 1);
      const double x = static_cast<double>(dx) - static_cast<double>(w - 1);
      const double d2 = y * y + x * x;
      spatial_a[dy * ow + dx] =
          std::exp(-d2 / (2.0 * cfg.theta_alpha * cfg.theta_alpha));
      spatial_s[dy * ow + dx] =
          std::exp(-d2 / (2.0 * cfg.theta_gamma * cfg.theta_gamma));
    }
  }
  const double color_scale = 1.0 / (2.0 * cfg.theta_beta * cfg.theta_beta);
  const auto px = image.values();
  std::vector<Array> color(ch, Array(n));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t c = 0; c < ch; ++c) color[c][j] = px[j * ch + c];
  }

  if (static_cast<std::size_t>(m.rows()) != n || static_cast<std::size_t>(m.cols()) != n) {
    m.resize(n, n);
  }
  Array sa_row(n), ss_row(n), c2(n), ka(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t yi = i / w, xi = i % w;
    for (std::size_t yj = 0; yj < h; ++yj) {
      const std::size_t off = (yj + h - 1 - yi) * ow + (w - 1 - xi);
      std::copy_n(spatial_a.data() + off, w, sa_row.data() + yj * w);
      std::copy_n(spatial_s.data() + off, w, ss_row.data() + yj * w);
    }
    c2.setZero();
    for (std::size_t c = 0; c < ch; ++c) c2 += (color[c] - color[c][i]).square();
    ka = sa_row * (-color_scale * c2).exp();
    ka[i] = 0.0;
    ss_row[i] = 0.0;
    const double za = ka.sum(), zs = ss_row.sum();
    const double sa = za > 0.0 ? cfg.w_appearance / za : 0.0;
    const double ss = zs > 0.0 ? cfg.w_smoothness / zs : 0.0;
    m.row(i) = (sa * ka + ss * ss_row).matrix().transpose();
  }
}

}  // namespace

void Validate(const CrfConfig& cfg) {
  if (cfg.iterations < 1) throw std::invalid_argument("crf: iterations must be >= 1");
  if (!(cfg.theta_alpha > 0 && cfg.theta_beta > 0 && cfg.theta_gamma > 0)) {
    throw std::invalid_argument("crf: bandwidths must be > 0");
  }
  if (!(cfg.w_appearance >= 0 && cfg.w_smoothness >= 0)) {
    throw std::invalid_argument("crf: weights must be >= 0");
  }
  if (!(cfg.confidence_threshold > 0 && cfg.confidence_threshold < 1)) {
    throw std::invalid_argument("crf: confidence_threshold must be in (0, 1)");
  }
}

namespace {

void CheckInputs(const Tensor& image, const Tensor& unary_probs) {
  RequireRank(image, 3, "crf image");
  ValidateDistribution(unary_probs, "crf unary");
  if (image.extent(0) != unary_probs.extent(0) ||
      image.extent(1) != unary_probs.extent(1)) {
    throw ShapeError("crf: image " + ShapeToString(image.shape()) +
                     " and unary " + ShapeToString(unary_probs.shape()) +
                     " differ in size");
  }
}

// Mean-field updates of several unaries over one kernel. Unaries are packed
// side by side so each iteration is a single product with the kernel. `kernel`
// is null when both weights are zero.
std::vector<Tensor> MeanField(const RowMat* kernel, std::span<const Tensor> unaries,
                              const CrfConfig& cfg, std::vector<CrfTrace>* traces) {
  const std::size_t n = unaries[0].extent(0) * unaries[0].extent(1);
  std::vector<std::size_t> offset{0};
  for (const Tensor& u : unaries) offset.push_back(offset.back() + u.extent(2));
  const std::size_t width = offset.back();

  RowMat log_unary(n, width);
  for (std::size_t b = 0; b < unaries.size(); ++b) {
    const std::size_t l = unaries[b].extent(2);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < l; ++k) {
        log_unary(i, offset[b] + k) = std::log(std::max(unaries[b][i * l + k], kUnaryFloor));
      }
    }
  }
  auto normalize_rows = [&](const RowMat& logits, RowMat& out) {
    for (std::size_t b = 0; b + 1 < offset.size(); ++b) {
      const std::size_t lo = offset[b], hi = offset[b + 1];
      for (std::size_t i = 0; i < n; ++i) {
        double mx = logits(i, lo);
        for (std::size_t k = lo + 1; k < hi; ++k) mx = std::max(mx, logits(i, k));
        double z = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
          out(i, k) = std::exp(logits(i, k) - mx);
          z += out(i, k);
        }
        for (std::size_t k = lo; k < hi; ++k) out(i, k) /= z;
      }
    }
  };
  RowMat q(n, width);
  normalize_rows(log_unary, q);

  std::vector<CrfTrace> local(traces != nullptr ? unaries.size() : 0);
  RowMat next(n, width);
  for (int it = 0; it < cfg.iterations; ++it) {
    if (kernel != nullptr) {
      RowMat logits = log_unary;
      logits.noalias() += *kernel * q;
      normalize_rows(logits, next);
    } else {
      next = q;
    }
    for (std::size_t b = 0; b < local.size(); ++b) {
      const std::size_t lo = offset[b], l = offset[b + 1] - lo;
      const double change =
          (next.middleCols(lo, l) - q.middleCols(lo, l)).cwiseAbs().maxCoeff();
      CrfTrace& t = local[b];
      if (t.linf_change.size() >= 2 && change > t.linf_change.back() + 1e-12) {
        t.monotone = false;
      }
      t.linf_change.push_back(change);
    }
    q.swap(next);
  }
  if (traces != nullptr) *traces = std::move(local);

  std::vector<Tensor> out;
  for (std::size_t b = 0; b < unaries.size(); ++b) {
    Tensor t(unaries[b].shape());
    const std::size_t l = unaries[b].extent(2);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < l; ++k) t[i * l + k] = q(i, offset[b] + k);
    }
    out.push_back(std::move(t));
  }
  return out;
}

bool HasPairwise(const CrfConfig& cfg) {
  return cfg.w_appearance > 0.0 || cfg.w_smoothness > 0.0;
}

}  // namespace

Tensor CrfRefine(const Tensor& image, const Tensor& unary_probs,
                 const CrfConfig& cfg, CrfTrace* trace) {
  Validate(cfg);
  CheckInputs(image, unary_probs);
  thread_local RowMat kernel;
  if (HasPairwise(cfg)) PairwiseMatrix(image, cfg, kernel);
  std::vector<CrfTrace> traces;
  Tensor out = std::move(MeanField(HasPairwise(cfg) ? &kernel : nullptr,
                                   std::span(&unary_probs, 1), cfg, &traces)[0]);
  if (trace != nullptr) *trace = std::move(traces[0]);
  return out;
}

std::vector<Tensor> CrfRefineMany(const Tensor& image, std::span<const Tensor> unaries,
                                  const CrfConfig& cfg, std::vector<CrfTrace>* traces) {
  Validate(cfg);
  for (const Tensor& u : unaries) CheckInputs(image, u);
  if (unaries.empty()) return {};
  thread_local RowMat kernel;
  if (HasPairwise(cfg)) PairwiseMatrix(image, cfg, kernel);
  return MeanField(HasPairwise(cfg) ? &kernel : nullptr, unaries, cfg, traces);
}

Tensor UnaryFromCams(const ActivationMap& normalized_fg, double background_tau) {
  if (!normalized_fg.normalized) {
    throw std::invalid_argument("unary_from_cams: map must be normalized");
  }
  if (!(background_tau > 0.0 && background_tau < 1.0)) {
    throw std::invalid_argument("unary_from_cams: background_tau must be in (0, 1)");
  }
  const double alpha = background_tau == 0.5
                           ? 1.0
                           : std::log(background_tau) / std::log(1.0 - background_tau);
  const std::size_t h = normalized_fg.height(), w = normalized_fg.width();
  const std::size_t c = normalized_fg.channels();
  Tensor unary(Shape{h, w, c + 1});
  const auto fg = normalized_fg.values.values();
  auto u = unary.values();
  for (std::size_t p = 0; p < h * w; ++p) {
    double mx = 0.0, sum = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      mx = std::max(mx, fg[p * c + k]);
      u[p * (c + 1) + k + 1] = fg[p * c + k];
      sum += fg[p * c + k];
    }
    const double bg = alpha == 1.0 ? 1.0 - mx : std::pow(1.0 - mx, alpha);
    u[p * (c + 1)] = bg;
    sum += bg;
    for (std::size_t k = 0; k <= c; ++k) u[p * (c + 1) + k] /= sum;
  }
  return unary;
}

std::vector<std::uint8_t> ChannelLabels(std::span<const int> class_ids) {
  std::vector<std::uint8_t> labels{kBackgroundLabel};
  for (int c : class_ids) labels.push_back(SegLabelOf(c));
  return labels;
}

namespace {

SegMask Decode(const Tensor& probs, std::span<const std::uint8_t> channel_labels,
               double threshold) {
  RequireRank(probs, 3, "mask decode");
  const std::size_t h = probs.extent(0), w = probs.extent(1), l = probs.extent(2);
  if (!channel_labels.empty() && channel_labels.size() != l) {
    throw ShapeError("mask decode: " + std::to_string(channel_labels.size()) +
                     " channel labels for " + std::to_string(l) + " channels");
  }
  SegMask mask(h, w);
  const auto v = probs.values();
  for (std::size_t p = 0; p < h * w; ++p) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < l; ++k) {
      if (v[p * l + k] > v[p * l + best]) best = k;
    }
    if (v[p * l + best] >= threshold) {
      mask.labels[p] = channel_labels.empty() ? static_cast<std::uint8_t>(best)
                                              : channel_labels[best];
    } else {
      mask.labels[p] = kUndefinedLabel;
    }
  }
  return mask;
}

}  // namespace

SegMask MakeSeed(const Tensor& refined_probs, const CrfConfig& cfg,
                 std::span<const std::uint8_t> channel_labels) {
  return Decode(refined_probs, channel_labels, cfg.confidence_threshold);
}

SegMask ArgmaxMask(const Tensor& probs, std::span<const std::uint8_t> channel_labels) {
  return Decode(probs, channel_labels, -1.0);
}

}  // namespace amnkit::refine
