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
#include "amnkit/evalkit/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "amnkit/tensorops/parallel.hpp"

namespace amnkit::eval {

SegMask ThresholdMask(const ActivationMap& map, double tau) {
  if (!map.normalized) throw std::invalid_argument("threshold_mask: map is not normalized");
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw std::invalid_argument("threshold_mask: tau " + std::to_string(tau) +
                                " outside [0, 1]");
  }
  const std::size_t h = map.height(), w = map.width(), c = map.channels();
  SegMask mask(h, w, kBackgroundLabel);
  const auto v = map.values.values();
  for (std::size_t p = 0; p < h * w; ++p) {
    double best = tau;
    int best_k = -1;
    for (std::size_t k = 0; k < c; ++k) {
      if (v[p * c + k] > best) {
        best = v[p * c + k];
        best_k = static_cast<int>(k);
      }
    }
    if (best_k >= 0) mask.labels[p] = SegLabelOf(map.classes[static_cast<std::size_t>(best_k)]);
  }
  return mask;
}

namespace {

void RequireSameSize(const SegMask& pred, const SegMask& gt) {
  if (pred.height != gt.height || pred.width != gt.width) {
    throw ShapeError("iou: prediction " + std::to_string(pred.height) + "x" +
                     std::to_string(pred.width) + " vs ground truth " +
                     std::to_string(gt.height) + "x" + std::to_string(gt.width));
  }
}

}  // namespace

double Iou(const SegMask& pred, const SegMask& gt, std::uint8_t label, bool* empty_union) {
  RequireSameSize(pred, gt);
  std::size_t inter = 0, uni = 0;
  for (std::size_t p = 0; p < gt.size(); ++p) {
    if (gt.labels[p] == kUndefinedLabel) continue;
    const bool a = pred.labels[p] == label, b = gt.labels[p] == label;
    inter += (a && b) ? 1 : 0;
    uni += (a || b) ? 1 : 0;
  }
  if (empty_union) *empty_union = uni == 0;
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

MiouResult Miou(const SegMask& pred, const SegMask& gt,
                std::span<const std::uint8_t> labels) {
  RequireSameSize(pred, gt);
  MiouResult r;
  if (labels.empty()) return r;
  double sum = 0.0;
  for (std::uint8_t label : labels) {
    bool empty = false;
    const double v = Iou(pred, gt, label, &empty);
    if (empty) r.empty_union.push_back(label);
    r.per_class.push_back(v);
    sum += v;
  }
  r.miou = sum / static_cast<double>(labels.size());
  return r;
}

std::vector<std::uint8_t> AllLabels(int num_classes) {
  std::vector<std::uint8_t> labels;
  for (int c = 0; c <= num_classes; ++c) labels.push_back(static_cast<std::uint8_t>(c));
  return labels;
}

std::vector<std::uint8_t> MapLabels(const ActivationMap& map) {
  std::vector<std::uint8_t> labels{kBackgroundLabel};
  for (int c : map.classes) labels.push_back(SegLabelOf(c));
  return labels;
}

IouAccumulator::IouAccumulator(int num_classes)
    : inter_(static_cast<std::size_t>(num_classes) + 1, 0),
      uni_(static_cast<std::size_t>(num_classes) + 1, 0) {}

void IouAccumulator::Add(const SegMask& pred, const SegMask& gt) {
  RequireSameSize(pred, gt);
  const std::size_t l = inter_.size();
  for (std::size_t p = 0; p < gt.size(); ++p) {
    const std::uint8_t g = gt.labels[p], q = pred.labels[p];
    if (g == kUndefinedLabel) continue;
    if (g < l) ++uni_[g];
    if (q < l && q != g) ++uni_[q];
    if (q == g && g < l) ++inter_[g];
  }
}

std::vector<double> IouAccumulator::PerClass() const {
  std::vector<double> out(inter_.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = uni_[k] == 0 ? 1.0
                          : static_cast<double>(inter_[k]) / static_cast<double>(uni_[k]);
  }
  return out;
}

double IouAccumulator::Miou() const {
  const auto per = PerClass();
  double sum = 0.0;
  for (double v : per) sum += v;
  return sum / static_cast<double>(per.size());
}

std::vector<double> ThresholdGrid(double grid_step) {
  if (!(grid_step > 0.0 && grid_step <= 1.0)) {
    throw std::invalid_argument("grid step must be in (0, 1]");
  }
  const double count = 1.0 / grid_step;
  const long n = std::lround(count);
  if (std::abs(count - static_cast<double>(n)) > 1e-9) {
    throw std::invalid_argument("grid step " + std::to_string(grid_step) +
                                " does not divide [0, 1]");
  }
  std::vector<double> grid;
  for (long i = 0; i <= n; ++i) grid.push_back(static_cast<double>(i) / static_cast<double>(n));
  return grid;
}

std::vector<double> TauRange(double lo, double hi, double step) {
  std::vector<double> taus;
  const long n = std::lround((hi - lo) / step);
  for (long i = 0; i <= n; ++i) {
    taus.push_back(std::round((lo + static_cast<double>(i) * step) * 1e9) / 1e9);
  }
  return taus;
}

ThresholdChoice OptimalThreshold(const ActivationMap& map, const SegMask& gt,
                                 double grid_step) {
  const auto labels = MapLabels(map);
  ThresholdChoice best{0.0, -1.0};
  for (double tau : ThresholdGrid(grid_step)) {
    const double v = Miou(ThresholdMask(map, tau), gt, labels).miou;
    if (v > best.miou) best = {tau, v};
  }
  return best;
}

double ThresholdSweep::Spread() const {
  if (miou_per_tau.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(miou_per_tau.begin(), miou_per_tau.end());
  return *hi - *lo;
}

double ThresholdSweep::Peak() const {
  if (miou_per_tau.empty()) return 0.0;
  return *std::max_element(miou_per_tau.begin(), miou_per_tau.end());
}

ThresholdSweep Sweep(std::span<const ActivationMap> maps, std::span<const SegMask> gts,
                     std::span<const double> taus, int num_classes, int workers) {
  if (maps.size() != gts.size()) {
    throw std::invalid_argument("sweep: " + std::to_string(maps.size()) + " maps but " +
                                std::to_string(gts.size()) + " ground truths");
  }
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (!(taus[i] >= 0.0 && taus[i] <= 1.0) || (i > 0 && !(taus[i] > taus[i - 1]))) {
      throw std::invalid_argument("sweep: taus must be strictly increasing in [0, 1]");
    }
  }
  ThresholdSweep s;
  s.taus.assign(taus.begin(), taus.end());
  s.miou_per_tau.resize(taus.size());
  s.per_class_iou_per_tau.resize(taus.size());
  ParallelFor(taus.size(), workers, [&](std::size_t t) {
    IouAccumulator acc(num_classes);
    for (std::size_t i = 0; i < maps.size(); ++i) {
      acc.Add(ThresholdMask(maps[i], taus[t]), gts[i]);
    }
    s.per_class_iou_per_tau[t] = acc.PerClass();
    s.miou_per_tau[t] = acc.Miou();
  });
  return s;
}

ActivationStats ComputeActivationStats(const ActivationMap& map, std::size_t channel,
                                       const SegMask& gt, std::uint8_t label) {
  if (!map.normalized) throw std::invalid_argument("activation_stats: map is not normalized");
  if (channel >= map.channels()) throw std::out_of_range("activation_stats: bad channel");
  if (gt.height != map.height() || gt.width != map.width()) {
    throw ShapeError("activation_stats: mask and map differ in size");
  }
  const std::size_t c = map.channels();
  const auto v = map.values.values();
  ActivationStats st;
  double fg_sum = 0.0, fg_sq = 0.0, bg_sum = 0.0;
  for (std::size_t p = 0; p < gt.size(); ++p) {
    if (gt.labels[p] == kUndefinedLabel) continue;
    const double a = v[p * c + channel];
    if (gt.labels[p] == label) {
      fg_sum += a;
      ++st.fg_pixels;
    } else {
      bg_sum += a;
      ++st.bg_pixels;
    }
  }
  if (st.fg_pixels > 0) {
    st.fg_mean = fg_sum / static_cast<double>(st.fg_pixels);
    for (std::size_t p = 0; p < gt.size(); ++p) {
      if (gt.labels[p] != label) continue;
      const double d = v[p * c + channel] - st.fg_mean;
      fg_sq += d * d;
    }
    st.fg_std = std::sqrt(fg_sq / static_cast<double>(st.fg_pixels));
  }
  if (st.bg_pixels > 0) st.bg_mean = bg_sum / static_cast<double>(st.bg_pixels);
  st.gap = st.fg_mean - st.bg_mean;
  return st;
}

std::vector<std::size_t> Histogram(std::span<const double> values, int bins, double lo,
                                   double hi) {
  if (bins < 1) throw std::invalid_argument("histogram: bins must be >= 1");
  if (!(hi > lo)) throw std::invalid_argument("histogram: empty range");
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    long b = static_cast<long>(std::floor((v - lo) / (hi - lo) * bins));
    b = std::clamp(b, 0L, static_cast<long>(bins - 1));
    ++counts[static_cast<std::size_t>(b)];
  }
  return counts;
}

namespace {

constexpr double kWidth = 640, kHeight = 400, kMargin = 60;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string Escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += ch;
    }
  }
  return out;
}

void Header(std::ostringstream& o, const std::string& title) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
    << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
    << Escape(title) << "</text>\n";
}

void Axes(std::ostringstream& o, double y_lo, double y_hi) {
  const double x0 = kMargin, y0 = kHeight - kMargin;
  o << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << kWidth - kMargin
    << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << x0 << "\" y1=\"" << kMargin << "\" x2=\"" << x0 << "\" y2=\""
    << y0 << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = y0 - (y0 - kMargin) * i / 4.0;
    o << "<text x=\"" << x0 - 6 << "\" y=\"" << Num(y + 4) << "\" text-anchor=\"end\">"
      << Num(y_lo + (y_hi - y_lo) * i / 4.0) << "</text>\n";
  }
}

}  // namespace

std::string LineChartSvg(const std::string& title, const std::string& x_label,
                         const std::string& y_label, std::span<const Series> series) {
  double x_lo = 1e300, x_hi = -1e300, y_lo = 0.0, y_hi = 1e-12;
  for (const Series& s : series) {
    for (double x : s.x) x_lo = std::min(x_lo, x), x_hi = std::max(x_hi, x);
    for (double y : s.y) y_lo = std::min(y_lo, y), y_hi = std::max(y_hi, y);
  }
  if (!(x_hi > x_lo)) x_lo = 0.0, x_hi = 1.0;
  const double x0 = kMargin, y0 = kHeight - kMargin;
  const double pw = kWidth - 2 * kMargin, ph = kHeight - 2 * kMargin;
  std::ostringstream o;
  Header(o, title);
  Axes(o, y_lo, y_hi);
  o << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 20
    << "\" text-anchor=\"middle\">" << Escape(x_label) << "</text>\n"
    << "<text x=\"16\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 16 "
    << kHeight / 2 << ")\" text-anchor=\"middle\">" << Escape(y_label) << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double x = x0 + pw * i / 4.0;
    o << "<text x=\"" << Num(x) << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">"
      << Num(x_lo + (x_hi - x_lo) * i / 4.0) << "</text>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      o << Num(x0 + pw * (s.x[i] - x_lo) / (x_hi - x_lo)) << ","
        << Num(y0 - ph * (s.y[i] - y_lo) / (y_hi - y_lo)) << " ";
    }
    o << "\"/>\n<text x=\"" << kWidth - kMargin - 100 << "\" y=\""
      << kMargin + 16 * static_cast<double>(k) << "\" fill=\"" << color << "\">"
      << Escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string BarChartSvg(const std::string& title, std::span<const std::string> labels,
                        std::span<const double> values) {
  double y_hi = 1e-12;
  for (double v : values) y_hi = std::max(y_hi, v);
  const double x0 = kMargin, y0 = kHeight - kMargin;
  const double pw = kWidth - 2 * kMargin, ph = kHeight - 2 * kMargin;
  const double bw = values.empty() ? 0.0 : pw / static_cast<double>(values.size());
  std::ostringstream o;
  Header(o, title);
  Axes(o, 0.0, y_hi);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double hgt = ph * values[i] / y_hi;
    o << "<rect x=\"" << Num(x0 + bw * static_cast<double>(i) + 1) << "\" y=\""
      << Num(y0 - hgt) << "\" width=\"" << Num(std::max(bw - 2, 1.0)) << "\" height=\""
      << Num(hgt) << "\" fill=\"" << kPalette[0] << "\"/>\n";
    if (i < labels.size() && (values.size() <= 12 || i % (values.size() / 10) == 0)) {
      o << "<text x=\"" << Num(x0 + bw * (static_cast<double>(i) + 0.5)) << "\" y=\""
        << y0 + 16 << "\" text-anchor=\"middle\">" << Escape(labels[i]) << "</text>\n";
    }
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace amnkit::eval
