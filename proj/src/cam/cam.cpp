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
#include "amnkit/cam/cam.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "amnkit/tensorops/adam.hpp"
#include "amnkit/tensorops/ops.hpp"

namespace amnkit {

ClassifierNet::ClassifierNet(int num_classes, std::uint64_t seed,
                             const BackboneSpec& spec)
    : num_classes_(num_classes) {
  if (num_classes < 1) throw std::invalid_argument("num_classes must be >= 1");
  std::mt19937_64 rng(seed);
  backbone_ = Backbone(spec, rng);
  const std::size_t q = backbone_.feature_channels();
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(q)));
  Tensor head(Shape{q, static_cast<std::size_t>(num_classes)});
  for (double& v : head.values()) v = normal(rng);
  head_ = Var::Parameter(std::move(head));
}

Var ClassifierNet::Scores(const Var& features) const {
  return ops::Linear(ops::GlobalAveragePool(features), head_, Var());
}

std::vector<NamedVar> ClassifierNet::NamedParameters() const {
  std::vector<NamedVar> params;
  backbone_.AppendParameters("backbone.", params);
  params.emplace_back("head.weight", head_);
  return params;
}

namespace {

void ValidateCorpus(std::span<const Sample> corpus, int num_classes) {
  if (corpus.empty()) throw std::invalid_argument("train_classifier: empty corpus");
  for (const Sample& s : corpus) {
    if (s.labels.size() != static_cast<std::size_t>(num_classes)) {
      throw std::invalid_argument("train_classifier: sample " + s.id + " has " +
                                  std::to_string(s.labels.size()) +
                                  " labels, expected " + std::to_string(num_classes));
    }
    if (std::none_of(s.labels.begin(), s.labels.end(), [](auto v) { return v != 0; })) {
      throw std::invalid_argument("train_classifier: sample " + s.id +
                                  " has an all-zero label vector");
    }
  }
}

}  // namespace

TrainHistory TrainClassifier(ClassifierNet& net, std::span<const Sample> corpus,
                             const TrainConfig& cfg) {
  ValidateCorpus(corpus, net.num_classes());
  if (cfg.batch_size < 1 || cfg.epochs < 0) {
    throw std::invalid_argument("train_classifier: bad batch size or epochs");
  }
  const auto params = net.NamedParameters();
  Adam adam({ParamGroup{ParameterVars(params), cfg.learning_rate, cfg.weight_decay}});
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainHistory history;
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      adam.ZeroGrad();
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const Sample& s = corpus[order[i]];
        const bool flip = cfg.hflip && std::bernoulli_distribution(0.5)(rng);
        Var image = Var::Constant(flip ? FlipWidth(s.image) : s.image);
        std::vector<double> target(s.labels.begin(), s.labels.end());
        Var loss = ops::SigmoidCrossEntropy(net.Scores(net.Features(image)), target);
        Backward(loss);
        batch_loss += loss.value()[0];
      }
      batch_loss /= static_cast<double>(end - start);
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("train_classifier: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", step " +
                                 std::to_string(history.step_loss.size()));
      }
      adam.Step(1.0 / static_cast<double>(end - start));
      history.step_loss.push_back(batch_loss);
      history.learning_rate.push_back(cfg.learning_rate);
    }
  }
  return history;
}

double ClassificationAccuracy(const ClassifierNet& net,
                              std::span<const Sample> corpus) {
  if (corpus.empty()) return 0.0;
  NoGradGuard no_grad;
  std::size_t correct = 0;
  for (const Sample& s : corpus) {
    Var scores = net.Scores(net.Features(Var::Constant(s.image)));
    bool ok = true;
    for (std::size_t c = 0; c < s.labels.size(); ++c) {
      ok = ok && ((scores.value()[c] > 0.0) == (s.labels[c] != 0));
    }
    correct += ok ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(corpus.size());
}

Tensor ComputeLowResCams(const ClassifierNet& net, const Tensor& image,
                         std::span<const int> class_ids) {
  for (int c : class_ids) {
    if (c < 0 || c >= net.num_classes()) {
      throw std::out_of_range("compute_cam: class id " + std::to_string(c) +
                              " outside [0, " + std::to_string(net.num_classes()) + ")");
    }
  }
  NoGradGuard no_grad;
  Var features = net.Features(Var::Constant(image));
  const std::size_t q = net.feature_channels();
  const std::size_t n = static_cast<std::size_t>(net.num_classes());
  // Gather the requested head columns into a 1x1 kernel [1, 1, Q, C].
  Tensor kernel(Shape{1, 1, q, class_ids.size()});
  const auto w = net.head_weights().value().values();
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t k = 0; k < class_ids.size(); ++k) {
      kernel[i * class_ids.size() + k] = w[i * n + static_cast<std::size_t>(class_ids[k])];
    }
  }
  return ops::Conv2d(features, Var::Constant(std::move(kernel))).value();
}

ActivationMap ComputeCams(const ClassifierNet& net, const Tensor& image,
                          std::span<const int> class_ids) {
  RequireRank(image, 3, "compute_cam image");
  Tensor low = ComputeLowResCams(net, image, class_ids);
  NoGradGuard no_grad;
  ActivationMap map;
  map.values = ops::BilinearUpsample(Var::Constant(std::move(low)), image.extent(0),
                                     image.extent(1))
                   .value();
  map.classes.assign(class_ids.begin(), class_ids.end());
  map.normalized = false;
  return map;
}

ActivationMap ComputeCam(const ClassifierNet& net, const Tensor& image,
                         int class_id) {
  const int ids[1] = {class_id};
  return ComputeCams(net, image, ids);
}

ActivationMap NormalizeMap(const ActivationMap& map) {
  ActivationMap out = map;
  const std::size_t c = map.channels();
  auto v = out.values.values();
  std::vector<double> peak(c, 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = std::max(v[i], 0.0);
    peak[i % c] = std::max(peak[i % c], v[i]);
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (peak[i % c] > 0.0) v[i] /= peak[i % c];
  }
  out.normalized = true;
  return out;
}

bool SatisfiesNormalizedInvariant(const Tensor& values) {
  if (values.rank() != 3) return false;
  const std::size_t c = values.extent(2);
  std::vector<double> peak(c, 0.0);
  const auto v = values.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0 && v[i] <= 1.0)) return false;
    peak[i % c] = std::max(peak[i % c], v[i]);
  }
  return std::all_of(peak.begin(), peak.end(),
                     [](double p) { return p == 0.0 || p == 1.0; });
}

namespace {
constexpr char kMapMagic[] = "AMNMAP1";
}

void WriteActivationMap(std::ostream& out, const ActivationMap& map) {
  out.write(kMapMagic, sizeof(kMapMagic) - 1);
  io::PutU32(out, static_cast<std::uint32_t>(map.height()));
  io::PutU32(out, static_cast<std::uint32_t>(map.width()));
  io::PutU32(out, static_cast<std::uint32_t>(map.channels()));
  for (int c : map.classes) io::PutU32(out, static_cast<std::uint32_t>(c));
  for (double v : map.values.values()) io::PutF32(out, static_cast<float>(v));
  if (!out) throw std::runtime_error("activation map write failed");
}

ActivationMap ReadActivationMap(std::istream& in) {
  io::ExpectMagic(in, kMapMagic);
  const std::size_t h = io::GetU32(in), w = io::GetU32(in), c = io::GetU32(in);
  ActivationMap map;
  for (std::size_t k = 0; k < c; ++k) {
    map.classes.push_back(static_cast<std::int32_t>(io::GetU32(in)));
  }
  map.values = Tensor(Shape{h, w, c});
  for (double& v : map.values.values()) v = io::GetF32(in);
  map.normalized = SatisfiesNormalizedInvariant(map.values);
  return map;
}

void SaveActivationMap(const std::filesystem::path& path, const ActivationMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  WriteActivationMap(out, map);
}

ActivationMap LoadActivationMap(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return ReadActivationMap(in);
}

}  // namespace amnkit
