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
#include "amnkit/amn/amn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "amnkit/refine/crf.hpp"
#include "amnkit/tensorops/adam.hpp"
#include "amnkit/tensorops/ops.hpp"

namespace amnkit::amn {

Var LabelCondition(const Var& features, const Var& code) {
  return ops::ScaleChannels(features, code);
}

std::size_t SmoothedTarget::num_valid() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
}

SmoothedTarget SmoothTarget(const SegMask& seed, double epsilon, int num_labels) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("smooth_target: epsilon " + std::to_string(epsilon) +
                                " outside [0, 1)");
  }
  if (num_labels < 2) throw std::invalid_argument("smooth_target: num_labels < 2");
  const std::size_t l = static_cast<std::size_t>(num_labels);
  const double off = epsilon / static_cast<double>(num_labels - 1);
  SmoothedTarget t;
  t.dist = Tensor(Shape{seed.height, seed.width, l});
  t.valid.assign(seed.size(), 0);
  t.seed = seed;
  auto d = t.dist.values();
  for (std::size_t p = 0; p < seed.size(); ++p) {
    const std::uint8_t label = seed.labels[p];
    if (label == kUndefinedLabel) continue;
    if (label >= l) {
      throw std::invalid_argument("smooth_target: seed label " + std::to_string(label) +
                                  " at pixel " + std::to_string(p) + " >= num_labels " +
                                  std::to_string(num_labels));
    }
    t.valid[p] = 1;
    for (std::size_t k = 0; k < l; ++k) d[p * l + k] = off;
    d[p * l + label] = 1.0 - epsilon;
  }
  return t;
}

Var PclLoss(const Var& pred, const SmoothedTarget& target,
            std::span<const std::uint8_t> fg_labels, LossDiagnostics* diagnostics) {
  RequireRank(pred.value(), 3, "pcl_loss prediction");
  if (pred.shape() != target.dist.shape()) {
    throw ShapeError("pcl_loss: prediction " + ShapeToString(pred.shape()) +
                     " does not match target " + ShapeToString(target.dist.shape()));
  }
  const std::size_t l = pred.shape()[2];
  const std::size_t n = pred.shape()[0] * pred.shape()[1];
  // Per-pixel weight: 1/|P_fg|, 1/|P_bg| or 0.
  std::vector<double> weight(n, 0.0);
  std::size_t n_fg = 0, n_bg = 0;
  auto is_fg = [&](std::uint8_t label) {
    return std::find(fg_labels.begin(), fg_labels.end(), label) != fg_labels.end();
  };
  for (std::size_t p = 0; p < n; ++p) {
    if (!target.valid[p]) continue;
    const std::uint8_t label = target.seed.labels[p];
    if (label == kBackgroundLabel) {
      ++n_bg;
    } else if (is_fg(label)) {
      ++n_fg;
    }
  }
  for (std::size_t p = 0; p < n; ++p) {
    if (!target.valid[p]) continue;
    const std::uint8_t label = target.seed.labels[p];
    if (label == kBackgroundLabel) {
      weight[p] = 1.0 / static_cast<double>(n_bg);
    } else if (is_fg(label)) {
      weight[p] = 1.0 / static_cast<double>(n_fg);
    }
  }

  const auto pv = pred.value().values();
  const auto tv = target.dist.values();
  std::size_t clamped = 0;
  double loss = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    if (weight[p] == 0.0) continue;
    for (std::size_t k = 0; k < l; ++k) {
      const double t = tv[p * l + k];
      if (t == 0.0) continue;
      double v = pv[p * l + k];
      if (v < kLogFloor) {
        v = kLogFloor;
        ++clamped;
      }
      loss -= weight[p] * t * std::log(v);
    }
  }
  if (diagnostics) diagnostics->clamped_logs += clamped;

  return MakeResult(
      Tensor::Scalar(loss), {pred},
      [weight = std::move(weight), dist = target.dist, l](detail::Node& self) {
        const double g = self.value.grad()[0];
        detail::Node& parent = *self.parents[0];
        auto dp = parent.value.grad();
        const auto pv = parent.value.values();
        const auto tv = dist.values();
        for (std::size_t p = 0; p < weight.size(); ++p) {
          if (weight[p] == 0.0) continue;
          for (std::size_t k = 0; k < l; ++k) {
            const double t = tv[p * l + k];
            const double v = pv[p * l + k];
            // The clamp is flat below the floor.
            if (t == 0.0 || v < kLogFloor) continue;
            dp[p * l + k] -= g * weight[p] * t / v;
          }
        }
      });
}

AmnNet::AmnNet(const AmnSpec& spec, std::uint64_t seed) : spec_(spec) {
  if (spec.num_classes < 1) throw std::invalid_argument("amn: num_classes must be >= 1");
  // Separate streams keep the head initialization independent of the
  // conditioning layout.
  std::mt19937_64 rng(seed);
  backbone_ = Backbone(spec.backbone, rng);
  std::mt19937_64 head_rng(seed + 1);
  const std::size_t n = static_cast<std::size_t>(spec.num_classes);
  std::vector<int> seen;
  for (int b : spec.lc_placements) {
    if (b < 1 || static_cast<std::size_t>(b) > backbone_.num_blocks()) {
      throw std::invalid_argument("amn: LC placement " + std::to_string(b) +
                                  " outside [1, " +
                                  std::to_string(backbone_.num_blocks()) + "]");
    }
    if (std::find(seen.begin(), seen.end(), b) != seen.end()) {
      throw std::invalid_argument("amn: duplicate LC placement " + std::to_string(b));
    }
    seen.push_back(b);
    const std::size_t q = backbone_.out_channels(static_cast<std::size_t>(b - 1));
    std::mt19937_64 enc_rng(seed + 100 + static_cast<std::uint64_t>(b));
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(n)));
    Tensor w(Shape{n, q});
    for (double& v : w.values()) v = normal(enc_rng);
    encoders_.push_back(Encoder{b, Var::Parameter(std::move(w)),
                                Var::Parameter(Tensor(Shape{q}, spec.lc_bias_init))});
  }
  std::sort(encoders_.begin(), encoders_.end(),
            [](const Encoder& a, const Encoder& b) { return a.placement < b.placement; });

  const std::size_t q = backbone_.feature_channels();
  const std::size_t a = spec.aspp_channels;
  if (spec.aspp_dilations.empty()) throw std::invalid_argument("amn: no ASPP branches");
  // Branch outputs are summed, so scale each branch down.
  const double branch_scale = 1.0 / std::sqrt(static_cast<double>(spec.aspp_dilations.size()));
  for (std::size_t i = 0; i < spec.aspp_dilations.size(); ++i) {
    Tensor k = HeNormalKernel(3, q, a, head_rng);
    for (double& v : k.values()) v *= branch_scale;
    aspp_kernels_.push_back(Var::Parameter(std::move(k)));
  }
  aspp_bias_ = Var::Parameter(Tensor(Shape{a}, 0.0));
  const std::size_t labels = n + 1;
  Tensor out = HeNormalKernel(1, a, labels, head_rng);
  for (double& v : out.values()) v *= 0.1;
  out_kernel_ = Var::Parameter(std::move(out));
  out_bias_ = Var::Parameter(Tensor(Shape{labels}, 0.0));
}

void AmnNet::LoadBackbone(const Backbone& source) {
  std::vector<NamedVar> src, dst;
  source.AppendParameters("", src);
  backbone_.AppendParameters("", dst);
  LoadStateDict(dst, StateDict(src));
}

Var AmnNet::EncodeLabel(int placement, const Var& code) const {
  for (const Encoder& e : encoders_) {
    if (e.placement == placement) return ops::Sigmoid(ops::Linear(code, e.weight, e.bias));
  }
  throw std::invalid_argument("amn: no encoder after block " + std::to_string(placement));
}

Var AmnNet::Logits(const Var& image, const Var& code,
                   const std::optional<Tensor>& forced_code) const {
  if (conditioned() && !forced_code &&
      (!code.defined() || code.shape() != Shape{static_cast<std::size_t>(spec_.num_classes)})) {
    throw ShapeError("amn: encoder input must have shape [" +
                     std::to_string(spec_.num_classes) + "]");
  }
  Var x = image;
  auto enc = encoders_.begin();
  for (std::size_t b = 0; b < backbone_.num_blocks(); ++b) {
    x = backbone_.ApplyBlock(b, x);
    if (enc != encoders_.end() && static_cast<std::size_t>(enc->placement) == b + 1) {
      Var h = forced_code ? Var::Constant(*forced_code) : EncodeLabel(enc->placement, code);
      x = LabelCondition(x, h);
      ++enc;
    }
  }
  Var sum;
  for (std::size_t i = 0; i < aspp_kernels_.size(); ++i) {
    const int d = spec_.aspp_dilations[i];
    ops::ConvParams p{.stride = 1, .dilation = d, .padding = d};
    Var branch = ops::Conv2d(x, aspp_kernels_[i], p);
    sum = sum.defined() ? ops::Add(sum, branch) : branch;
  }
  Var hidden = ops::Relu(ops::AddChannelBias(sum, aspp_bias_));
  return ops::AddChannelBias(ops::Conv2d(hidden, out_kernel_), out_bias_);
}

Var AmnNet::Forward(const Var& image, const Var& code,
                    const std::optional<Tensor>& forced_code) const {
  Var probs = ops::SoftmaxChannels(Logits(image, code, forced_code));
  return ops::BilinearUpsample(probs, image.shape()[0], image.shape()[1]);
}

std::vector<NamedVar> AmnNet::NamedParameters() const {
  std::vector<NamedVar> params;
  backbone_.AppendParameters("backbone.", params);
  for (const Encoder& e : encoders_) {
    const std::string prefix = "lc" + std::to_string(e.placement) + ".";
    params.emplace_back(prefix + "weight", e.weight);
    params.emplace_back(prefix + "bias", e.bias);
  }
  for (std::size_t i = 0; i < aspp_kernels_.size(); ++i) {
    params.emplace_back("aspp.branch" + std::to_string(i) + ".kernel", aspp_kernels_[i]);
  }
  params.emplace_back("aspp.bias", aspp_bias_);
  params.emplace_back("classifier.kernel", out_kernel_);
  params.emplace_back("classifier.bias", out_bias_);
  return params;
}

std::vector<Var> AmnNet::BackboneParameters() const {
  std::vector<NamedVar> params;
  backbone_.AppendParameters("", params);
  return ParameterVars(params);
}

std::vector<Var> AmnNet::HeadParameters() const {
  std::vector<Var> out;
  for (const auto& [name, v] : NamedParameters()) {
    if (name.rfind("backbone.", 0) != 0) out.push_back(v);
  }
  return out;
}

Tensor EncoderInput(const LabelVector& labels, LcInput mode, std::uint64_t seed,
                    const std::string& sample_id) {
  Tensor code(Shape{labels.size()});
  switch (mode) {
    case LcInput::kLabel:
      for (std::size_t c = 0; c < labels.size(); ++c) code[c] = labels[c] ? 1.0 : 0.0;
      break;
    case LcInput::kAllOnes:
      for (double& v : code.values()) v = 1.0;
      break;
    case LcInput::kLabelNoise: {
      std::mt19937_64 rng(seed ^ Fnv1a64(sample_id));
      std::uniform_real_distribution<double> noise(0.0, 0.5);
      for (std::size_t c = 0; c < labels.size(); ++c) {
        code[c] = (labels[c] ? 1.0 : 0.0) + noise(rng);
      }
      break;
    }
  }
  return code;
}

ActivationMap AmnForward(const AmnNet& net, const Tensor& image,
                         const LabelVector& labels, LcInput mode,
                         std::uint64_t noise_seed, const std::string& sample_id) {
  RequireRank(image, 3, "amn_forward image");
  if (labels.size() != static_cast<std::size_t>(net.spec().num_classes)) {
    throw ShapeError("amn_forward: label vector has " + std::to_string(labels.size()) +
                     " entries, expected " + std::to_string(net.spec().num_classes));
  }
  NoGradGuard no_grad;
  Var code = Var::Constant(EncoderInput(labels, mode, noise_seed, sample_id));
  ActivationMap m;
  m.values = net.Forward(Var::Constant(image), code).value();
  m.classes.push_back(-1);
  for (int c = 0; c < net.spec().num_classes; ++c) m.classes.push_back(c);
  m.normalized = false;
  return m;
}

AmnTrainHistory TrainAmn(AmnNet& net, std::span<const AmnSample> corpus,
                         const AmnTrainConfig& cfg) {
  if (corpus.empty()) throw std::invalid_argument("train_amn: empty corpus");
  if (cfg.batch_size < 1 || cfg.epochs < 0) {
    throw std::invalid_argument("train_amn: bad batch size or epochs");
  }
  for (const AmnSample& s : corpus) {
    if (s.sample == nullptr) throw std::invalid_argument("train_amn: null sample");
    if (s.seed == nullptr) {
      throw std::invalid_argument("train_amn: sample " + s.sample->id + " has no seed");
    }
    if (s.seed->height != s.sample->image.extent(0) ||
        s.seed->width != s.sample->image.extent(1)) {
      throw ShapeError("train_amn: seed of " + s.sample->id + " does not match the image");
    }
  }
  const double head_lr = cfg.head_learning_rate;
  Adam adam({ParamGroup{net.BackboneParameters(), head_lr * cfg.backbone_lr_ratio,
                        cfg.weight_decay},
             ParamGroup{net.HeadParameters(), head_lr, cfg.weight_decay}});
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  AmnTrainHistory history;
  LossDiagnostics diag;
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      adam.ZeroGrad();
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const AmnSample& s = corpus[order[i]];
        const bool flip = cfg.hflip && std::bernoulli_distribution(0.5)(rng);
        const SegMask seed = flip ? FlipWidth(*s.seed) : *s.seed;
        Var image = Var::Constant(flip ? FlipWidth(s.sample->image) : s.sample->image);
        Var code = Var::Constant(EncoderInput(s.sample->labels, cfg.lc_input, cfg.seed,
                                              s.sample->id));
        const SmoothedTarget target = SmoothTarget(seed, cfg.epsilon, net.num_labels());
        std::vector<std::uint8_t> fg;
        for (int c : PresentClasses(s.sample->labels)) fg.push_back(SegLabelOf(c));
        Var loss = PclLoss(net.Forward(image, code), target, fg, &diag);
        Backward(loss);
        batch_loss += loss.value()[0];
      }
      batch_loss /= static_cast<double>(end - start);
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("train_amn: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", step " +
                                 std::to_string(history.step_loss.size()));
      }
      adam.Step(1.0 / static_cast<double>(end - start));
      history.step_loss.push_back(batch_loss);
      history.learning_rate.push_back(head_lr);
    }
  }
  history.clamped_logs = diag.clamped_logs;
  return history;
}

namespace {

std::vector<std::size_t> PresentChannels(const ActivationMap& m, const LabelVector& labels) {
  std::vector<std::size_t> channels;
  for (int c : PresentClasses(labels)) {
    auto it = std::find(m.classes.begin(), m.classes.end(), c);
    if (it == m.classes.end()) {
      throw std::out_of_range("amn map has no channel for class " + std::to_string(c));
    }
    channels.push_back(static_cast<std::size_t>(it - m.classes.begin()));
  }
  return channels;
}

}  // namespace

Tensor RestrictToPresent(const ActivationMap& m, const LabelVector& labels) {
  std::vector<std::size_t> channels{0};
  for (std::size_t c : PresentChannels(m, labels)) channels.push_back(c);
  const std::size_t h = m.height(), w = m.width(), l = m.channels();
  const std::size_t k = channels.size();
  Tensor out(Shape{h, w, k});
  const auto v = m.values.values();
  for (std::size_t p = 0; p < h * w; ++p) {
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += v[p * l + channels[i]];
    for (std::size_t i = 0; i < k; ++i) {
      out[p * k + i] = sum > 0.0 ? v[p * l + channels[i]] / sum : (i == 0 ? 1.0 : 0.0);
    }
  }
  return out;
}

SegMask AmnMask(const ActivationMap& m, const LabelVector& labels) {
  const auto present = PresentClasses(labels);
  return refine::ArgmaxMask(RestrictToPresent(m, labels), refine::ChannelLabels(present));
}

ActivationMap AmnForegroundMaps(const ActivationMap& m, const LabelVector& labels,
                                double epsilon) {
  const auto channels = PresentChannels(m, labels);
  const std::size_t h = m.height(), w = m.width(), l = m.channels();
  const std::size_t k = channels.size();
  const double floor = l > 1 ? epsilon / static_cast<double>(l - 1) : 0.0;
  const double span = 1.0 - epsilon - floor;
  if (!(span > 0.0)) throw std::invalid_argument("amn maps: epsilon too large");
  ActivationMap out;
  out.values = Tensor(Shape{h, w, k});
  out.classes = PresentClasses(labels);
  const auto v = m.values.values();
  for (std::size_t p = 0; p < h * w; ++p) {
    for (std::size_t i = 0; i < k; ++i) {
      out.values[p * k + i] = (v[p * l + channels[i]] - floor) / span;
    }
  }
  return NormalizeMap(out);
}

Tensor AmnUnary(const ActivationMap& m, double epsilon) {
  if (m.channels() < 2) throw ShapeError("amn unary: map needs background and classes");
  const LabelVector all(m.channels() - 1, 1);
  return refine::UnaryFromCams(AmnForegroundMaps(m, all, epsilon), 0.5);
}

}  // namespace amnkit::amn
