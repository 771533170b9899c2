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
#ifndef AMNKIT_TESTS_ORACLES_HPP_
#define AMNKIT_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "amnkit/cam/cam.hpp"
#include "amnkit/refine/crf.hpp"
#include "amnkit/types.hpp"

// Direct loop implementations used as references for the optimized code.
namespace amnkit::testing {

// One mean-field update written from the kernel definitions.
inline Tensor OracleCrfIteration(const Tensor& image, const Tensor& unary,
                                 const refine::CrfConfig& cfg) {
  const std::size_t w = image.extent(1), ch = image.extent(2);
  const std::size_t l = unary.extent(2), n = image.extent(0) * w;
  std::vector<double> q(n * l);
  for (std::size_t i = 0; i < n; ++i) {
    double z = 0.0;
    for (std::size_t k = 0; k < l; ++k) z += std::max(unary[i * l + k], refine::kUnaryFloor);
    for (std::size_t k = 0; k < l; ++k) {
      q[i * l + k] = std::max(unary[i * l + k], refine::kUnaryFloor) / z;
    }
  }
  Tensor out(unary.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const double yi = static_cast<double>(i / w), xi = static_cast<double>(i % w);
    std::vector<double> ma(l, 0.0), ms(l, 0.0);
    double za = 0.0, zs = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dy = yi - static_cast<double>(j / w);
      const double dx = xi - static_cast<double>(j % w);
      double dc = 0.0;
      for (std::size_t c = 0; c < ch; ++c) {
        const double d = image[i * ch + c] - image[j * ch + c];
        dc += d * d;
      }
      const double d2 = dy * dy + dx * dx;
      const double ka = std::exp(-d2 / (2 * cfg.theta_alpha * cfg.theta_alpha) -
                                 dc / (2 * cfg.theta_beta * cfg.theta_beta));
      const double ks = std::exp(-d2 / (2 * cfg.theta_gamma * cfg.theta_gamma));
      za += ka;
      zs += ks;
      for (std::size_t k = 0; k < l; ++k) {
        ma[k] += ka * q[j * l + k];
        ms[k] += ks * q[j * l + k];
      }
    }
    std::vector<double> e(l);
    double z = 0.0;
    for (std::size_t k = 0; k < l; ++k) {
      e[k] = q[i * l + k] *
             std::exp(cfg.w_appearance * ma[k] / za + cfg.w_smoothness * ms[k] / zs);
      z += e[k];
    }
    for (std::size_t k = 0; k < l; ++k) out[i * l + k] = e[k] / z;
  }
  return out;
}

// IoU counting pixels; undefined ground truth is skipped, an empty union is 1.
inline double OracleIou(const SegMask& pred, const SegMask& gt, std::uint8_t label) {
  double inter = 0, uni = 0;
  for (std::size_t p = 0; p < gt.size(); ++p) {
    if (gt.labels[p] == kUndefinedLabel) continue;
    const bool a = pred.labels[p] == label, b = gt.labels[p] == label;
    inter += a && b;
    uni += a || b;
  }
  return uni == 0 ? 1.0 : inter / uni;
}

inline double OracleMiou(const SegMask& pred, const SegMask& gt,
                         const std::vector<std::uint8_t>& labels) {
  double sum = 0;
  for (auto l : labels) sum += OracleIou(pred, gt, l);
  return sum / static_cast<double>(labels.size());
}

// Strictly-above-tau argmax with the lowest channel winning ties.
inline SegMask OracleThresholdMask(const ActivationMap& m, double tau) {
  SegMask mask(m.height(), m.width());
  for (std::size_t y = 0; y < m.height(); ++y) {
    for (std::size_t x = 0; x < m.width(); ++x) {
      double best = -1;
      for (std::size_t k = 0; k < m.channels(); ++k) {
        const double a = m.values.at(y, x, k);
        if (a > tau && a > best) {
          best = a;
          mask.at(y, x) = SegLabelOf(m.classes[k]);
        }
      }
    }
  }
  return mask;
}

// Scans taus i / steps and keeps the first best mIoU over background and the
// map's classes.
inline std::pair<double, double> OracleOptimalThreshold(const ActivationMap& m,
                                                        const SegMask& gt, int steps) {
  std::vector<std::uint8_t> labels{kBackgroundLabel};
  for (int c : m.classes) labels.push_back(SegLabelOf(c));
  double best_tau = 0, best = -1;
  for (int i = 0; i <= steps; ++i) {
    const double tau = static_cast<double>(i) / steps;
    const double v = OracleMiou(OracleThresholdMask(m, tau), gt, labels);
    if (v > best + 1e-12) {
      best = v;
      best_tau = tau;
    }
  }
  return {best_tau, best};
}

}  // namespace amnkit::testing

#endif  // AMNKIT_TESTS_ORACLES_HPP_
