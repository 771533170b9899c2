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
#ifndef AMNKIT_EVALKIT_EVALKIT_HPP_
#define AMNKIT_EVALKIT_EVALKIT_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "amnkit/cam/cam.hpp"
#include "amnkit/types.hpp"

namespace amnkit::eval {

// Per pixel: among channels with activation > tau, the argmax channel's class
// (lowest channel on ties); background when none exceeds tau. Throws
// std::invalid_argument for an un-normalized map or tau outside [0, 1].
SegMask ThresholdMask(const ActivationMap& map, double tau);

// IoU of one segmentation label. Ground-truth pixels labeled 255 are ignored.
// An empty union yields 1 and sets `*empty_union`.
double Iou(const SegMask& pred, const SegMask& gt, std::uint8_t label,
           bool* empty_union = nullptr);

struct MiouResult {
  double miou = 0.0;
  std::vector<double> per_class;          // aligned with the class set
  std::vector<std::uint8_t> empty_union;  // labels whose union was empty
};

// Unweighted mean IoU over `labels` (segmentation labels, background 0
// included when listed). Throws ShapeError when the masks differ in size.
MiouResult Miou(const SegMask& pred, const SegMask& gt,
                std::span<const std::uint8_t> labels);

// Labels 0..num_classes.
std::vector<std::uint8_t> AllLabels(int num_classes);
// Background plus the classes of `map`.
std::vector<std::uint8_t> MapLabels(const ActivationMap& map);

// Corpus-level accumulation of per-class intersections and unions.
class IouAccumulator {
 public:
  explicit IouAccumulator(int num_classes);
  void Add(const SegMask& pred, const SegMask& gt);
  // Per label 0..N; empty unions score 1.
  std::vector<double> PerClass() const;
  double Miou() const;

 private:
  std::vector<std::uint64_t> inter_, uni_;
};

struct ThresholdChoice {
  double tau = 0.0;
  double miou = 0.0;
};

// Exhaustive search over {0, step, ..., 1} scoring Miou over MapLabels(map);
// ties keep the smallest tau. Throws std::invalid_argument unless 1/step is
// an integer.
ThresholdChoice OptimalThreshold(const ActivationMap& map, const SegMask& gt,
                                 double grid_step = 0.01);

// Grid {0, step, ..., 1}.
std::vector<double> ThresholdGrid(double grid_step);
// {lo, lo + step, ..., hi} rounded to 1e-9.
std::vector<double> TauRange(double lo, double hi, double step);

struct ThresholdSweep {
  std::vector<double> taus;
  std::vector<double> miou_per_tau;
  std::vector<std::vector<double>> per_class_iou_per_tau;  // [tau][label]

  double Spread() const;
  double Peak() const;
};

// Dataset-level mIoU (over labels 0..num_classes) of the thresholded maps at
// each tau. Taus must be strictly increasing in [0, 1].
ThresholdSweep Sweep(std::span<const ActivationMap> maps, std::span<const SegMask> gts,
                     std::span<const double> taus, int num_classes, int workers = 1);

struct ActivationStats {
  double fg_mean = 0.0;
  double fg_std = 0.0;
  double bg_mean = 0.0;
  double gap = 0.0;  // fg_mean - bg_mean
  std::size_t fg_pixels = 0;
  std::size_t bg_pixels = 0;
};

// Statistics of channel `channel` of a normalized map over the pixels of
// `label` (foreground) and the remaining defined pixels (background).
ActivationStats ComputeActivationStats(const ActivationMap& map, std::size_t channel,
                                       const SegMask& gt, std::uint8_t label);

// Counts over `bins` equal-width bins on [lo, hi]; values outside are clamped
// into the edge bins.
std::vector<std::size_t> Histogram(std::span<const double> values, int bins,
                                   double lo = 0.0, double hi = 1.0);

struct Series {
  std::string name;
  std::vector<double> x, y;
};

// Standalone SVG charts.
std::string LineChartSvg(const std::string& title, const std::string& x_label,
                         const std::string& y_label, std::span<const Series> series);
std::string BarChartSvg(const std::string& title, std::span<const std::string> labels,
                        std::span<const double> values);

}  // namespace amnkit::eval

#endif  // AMNKIT_EVALKIT_EVALKIT_HPP_
