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
#include "amnkit/tensorops/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include <Eigen/Core>

namespace amnkit::ops {
namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

// Gradient buffer of parent `i`, or an empty span when it needs none.
std::span<double> ParentGrad(detail::Node& node, std::size_t i) {
  detail::Node& parent = *node.parents[i];
  if (!parent.value.requires_grad()) return {};
  return parent.value.grad();
}

void RequireSameShape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     ShapeToString(a.shape()) + " vs " +
                     ShapeToString(b.shape()));
  }
}

void RequireMap(const Var& x, const char* op) {
  RequireRank(x.value(), 3, op);
  if (x.shape()[0] == 0 || x.shape()[1] == 0 || x.shape()[2] == 0) {
    throw ShapeError(std::string(op) + ": empty map " +
                     ShapeToString(x.shape()));
  }
}

struct ConvGeometry {
  std::size_t in_h, in_w, in_c, out_h, out_w, out_c, k;
  int stride, dilation, padding;
  std::size_t patch() const { return k * k * in_c; }
  std::size_t pixels() const { return out_h * out_w; }
  bool pointwise() const { return k == 1 && stride == 1 && padding == 0; }
};

void Im2Col(const ConvGeometry& g, const double* in, double* cols) {
  const std::size_t patch = g.patch();
  for (std::size_t oy = 0; oy < g.out_h; ++oy) {
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      double* row = cols + (oy * g.out_w + ox) * patch;
      for (std::size_t ky = 0; ky < g.k; ++ky) {
        const long iy = static_cast<long>(oy) * g.stride - g.padding +
                        static_cast<long>(ky) * g.dilation;
        for (std::size_t kx = 0; kx < g.k; ++kx) {
          const long ix = static_cast<long>(ox) * g.stride - g.padding +
                          static_cast<long>(kx) * g.dilation;
          double* dst = row + (ky * g.k + kx) * g.in_c;
          if (iy < 0 || ix < 0 || iy >= static_cast<long>(g.in_h) ||
              ix >= static_cast<long>(g.in_w)) {
            std::fill(dst, dst + g.in_c, 0.0);
          } else {
            const double* src = in + (iy * g.in_w + ix) * g.in_c;
            std::copy(src, src + g.in_c, dst);
          }
        }
      }
    }
  }
}

void Col2ImAdd(const ConvGeometry& g, const double* cols, double* in_grad) {
  const std::size_t patch = g.patch();
  for (std::size_t oy = 0; oy < g.out_h; ++oy) {
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      const double* row = cols + (oy * g.out_w + ox) * patch;
      for (std::size_t ky = 0; ky < g.k; ++ky) {
        const long iy = static_cast<long>(oy) * g.stride - g.padding +
                        static_cast<long>(ky) * g.dilation;
        if (iy < 0 || iy >= static_cast<long>(g.in_h)) continue;
        for (std::size_t kx = 0; kx < g.k; ++kx) {
          const long ix = static_cast<long>(ox) * g.stride - g.padding +
                          static_cast<long>(kx) * g.dilation;
          if (ix < 0 || ix >= static_cast<long>(g.in_w)) continue;
          const double* src = row + (ky * g.k + kx) * g.in_c;
          double* dst = in_grad + (iy * g.in_w + ix) * g.in_c;
          for (std::size_t c = 0; c < g.in_c; ++c) dst[c] += src[c];
        }
      }
    }
  }
}

struct AxisWeights {
  std::vector<std::size_t> lo, hi;
  std::vector<double> w_lo, w_hi;
};

AxisWeights BilinearAxis(std::size_t in, std::size_t out) {
  AxisWeights a;
  a.lo.resize(out);
  a.hi.resize(out);
  a.w_lo.resize(out);
  a.w_hi.resize(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    std::size_t lo = static_cast<std::size_t>(src);
    if (lo > in - 1) lo = in - 1;
    const std::size_t hi = std::min(lo + 1, in - 1);
    const double frac = src - static_cast<double>(lo);
    a.lo[i] = lo;
    a.hi[i] = hi;
    a.w_hi[i] = frac;
    a.w_lo[i] = 1.0 - frac;
  }
  return a;
}

}  // namespace

std::size_t ConvOutputExtent(std::size_t in, std::size_t kernel,
                             const ConvParams& p) {
  const long span = static_cast<long>(p.dilation) *
                        (static_cast<long>(kernel) - 1) + 1;
  const long padded = static_cast<long>(in) + 2L * p.padding;
  if (padded < span) return 0;
  return static_cast<std::size_t>((padded - span) / p.stride + 1);
}

Var Conv2d(const Var& input, const Var& kernel, const ConvParams& p) {
  RequireMap(input, "conv2d input");
  RequireRank(kernel.value(), 4, "conv2d kernel");
  const Shape& is = input.shape();
  const Shape& ks = kernel.shape();
  if (ks[0] != ks[1] || ks[0] % 2 == 0) {
    throw ShapeError("conv2d: kernel must be square with odd size, got " +
                     ShapeToString(ks));
  }
  if (ks[2] != is[2]) {
    throw ShapeError("conv2d: input channels " + std::to_string(is[2]) +
                     " do not match kernel " + ShapeToString(ks) +
                     " (input " + ShapeToString(is) + ")");
  }
  if (p.stride < 1 || p.dilation < 1 || p.padding < 0) {
    throw ShapeError("conv2d: stride and dilation must be >= 1, padding >= 0");
  }
  ConvGeometry g{is[0], is[1], is[2], 0, 0, ks[3], ks[0],
                 p.stride, p.dilation, p.padding};
  g.out_h = ConvOutputExtent(g.in_h, g.k, p);
  g.out_w = ConvOutputExtent(g.in_w, g.k, p);
  if (g.out_h == 0 || g.out_w == 0) {
    throw ShapeError("conv2d: kernel " + ShapeToString(ks) +
                     " larger than padded input " + ShapeToString(is));
  }

  std::shared_ptr<std::vector<double>> cols;
  const double* cols_ptr = input.value().values().data();
  if (!g.pointwise()) {
    cols = std::make_shared<std::vector<double>>(g.pixels() * g.patch());
    Im2Col(g, input.value().values().data(), cols->data());
    cols_ptr = cols->data();
  }

  Tensor out(Shape{g.out_h, g.out_w, g.out_c});
  {
    ConstMapMat a(cols_ptr, g.pixels(), g.patch());
    ConstMapMat w(kernel.value().values().data(), g.patch(), g.out_c);
    MapMat o(out.values().data(), g.pixels(), g.out_c);
    o.noalias() = a * w;
  }

  return MakeResult(
      std::move(out), {input, kernel}, [g, cols](detail::Node& self) {
        const double* cols_ptr =
            cols ? cols->data() : self.parents[0]->value.values().data();
        ConstMapMat dout(self.value.grad().data(), g.pixels(), g.out_c);
        std::span<double> dkernel = ParentGrad(self, 1);
        if (!dkernel.empty()) {
          ConstMapMat a(cols_ptr, g.pixels(), g.patch());
          MapMat dw(dkernel.data(), g.patch(), g.out_c);
          dw.noalias() += a.transpose() * dout;
        }
        std::span<double> dinput = ParentGrad(self, 0);
        if (!dinput.empty()) {
          ConstMapMat w(self.parents[1]->value.values().data(), g.patch(),
                        g.out_c);
          if (g.pointwise()) {
            MapMat din(dinput.data(), g.pixels(), g.patch());
            din.noalias() += dout * w.transpose();
          } else {
            RowMat dcols = dout * w.transpose();
            Col2ImAdd(g, dcols.data(), dinput.data());
          }
        }
      });
}

Var AddChannelBias(const Var& map, const Var& bias) {
  RequireMap(map, "add_channel_bias");
  RequireRank(bias.value(), 1, "add_channel_bias bias");
  const std::size_t c = map.shape()[2];
  if (bias.shape()[0] != c) {
    throw ShapeError("add_channel_bias: bias " + ShapeToString(bias.shape()) +
                     " does not match map " + ShapeToString(map.shape()));
  }
  Tensor out = map.value();
  const auto b = bias.value().values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += b[i % c];
  return MakeResult(std::move(out), {map, bias}, [c](detail::Node& self) {
    const auto g = self.value.grad();
    if (auto dm = ParentGrad(self, 0); !dm.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) dm[i] += g[i];
    }
    if (auto db = ParentGrad(self, 1); !db.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) db[i % c] += g[i];
    }
  });
}

Var ScaleChannels(const Var& map, const Var& scale) {
  RequireMap(map, "scale_channels");
  RequireRank(scale.value(), 1, "scale_channels vector");
  const std::size_t c = map.shape()[2];
  if (scale.shape()[0] != c) {
    throw ShapeError("scale_channels: vector " +
                     ShapeToString(scale.shape()) + " does not match map " +
                     ShapeToString(map.shape()));
  }
  Tensor out = map.value();
  const auto s = scale.value().values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= s[i % c];
  return MakeResult(std::move(out), {map, scale}, [c](detail::Node& self) {
    const auto g = self.value.grad();
    const auto m = self.parents[0]->value.values();
    const auto s = self.parents[1]->value.values();
    if (auto dm = ParentGrad(self, 0); !dm.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) dm[i] += g[i] * s[i % c];
    }
    if (auto ds = ParentGrad(self, 1); !ds.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) ds[i % c] += g[i] * m[i];
    }
  });
}

Var Relu(const Var& x) {
  Tensor out = x.value();
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return MakeResult(std::move(out), {x}, [](detail::Node& self) {
    auto dx = ParentGrad(self, 0);
    const auto y = self.value.values();
    const auto g = self.value.grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (y[i] > 0.0) dx[i] += g[i];
    }
  });
}

Var Sigmoid(const Var& x) {
  Tensor out = x.value();
  for (double& v : out.values()) {
    v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                 : std::exp(v) / (1.0 + std::exp(v));
  }
  return MakeResult(std::move(out), {x}, [](detail::Node& self) {
    auto dx = ParentGrad(self, 0);
    const auto y = self.value.values();
    const auto g = self.value.grad();
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var Log(const Var& x) {
  Tensor out = x.value();
  for (double& v : out.values()) v = std::log(v);
  return MakeResult(std::move(out), {x}, [](detail::Node& self) {
    auto dx = ParentGrad(self, 0);
    const auto in = self.parents[0]->value.values();
    const auto g = self.value.grad();
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] / in[i];
  });
}

Var Add(const Var& a, const Var& b) {
  RequireSameShape(a, b, "add");
  Tensor out = a.value();
  const auto bv = b.value().values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  return MakeResult(std::move(out), {a, b}, [](detail::Node& self) {
    const auto g = self.value.grad();
    for (std::size_t p = 0; p < 2; ++p) {
      if (auto d = ParentGrad(self, p); !d.empty()) {
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
      }
    }
  });
}

Var Mul(const Var& a, const Var& b) {
  RequireSameShape(a, b, "mul");
  Tensor out = a.value();
  const auto bv = b.value().values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
  return MakeResult(std::move(out), {a, b}, [](detail::Node& self) {
    const auto g = self.value.grad();
    const auto av = self.parents[0]->value.values();
    const auto bv = self.parents[1]->value.values();
    if (auto da = ParentGrad(self, 0); !da.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bv[i];
    }
    if (auto db = ParentGrad(self, 1); !db.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * av[i];
    }
  });
}

Var Scale(const Var& x, double factor) {
  Tensor out = x.value();
  for (double& v : out.values()) v *= factor;
  return MakeResult(std::move(out), {x}, [factor](detail::Node& self) {
    auto dx = ParentGrad(self, 0);
    const auto g = self.value.grad();
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * factor;
  });
}

Var Sum(const Var& x) {
  Tensor out = Tensor::Scalar(x.value().Sum());
  return MakeResult(std::move(out), {x}, [](detail::Node& self) {
    auto dx = ParentGrad(self, 0);
    const double g = self.value.grad()[0];
    for (double& d : dx) d += g;
  });
}

Var GlobalAveragePool(const Var& input) {
  RequireMap(input, "global_average_pool");
  const std::size_t hw = input.shape()[0] * input.shape()[1];
  const std::size_t c = input.shape()[2];
  Tensor out(Shape{c});
  const auto in = input.value().values();
  for (std::size_t i = 0; i < in.size(); ++i) out[i % c] += in[i];
  for (double& v : out.values()) v /= static_cast<double>(hw);
  return MakeResult(std::move(out), {input}, [hw, c](detail::Node& self) {
    auto dx = ParentGrad(self, 0);
    const auto g = self.value.grad();
    const double inv = 1.0 / static_cast<double>(hw);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[i % c] * inv;
  });
}

Var SoftmaxChannels(const Var& input) {
  RequireMap(input, "softmax_channels");
  const std::size_t c = input.shape()[2];
  Tensor out = input.value();
  auto o = out.values();
  for (std::size_t base = 0; base < o.size(); base += c) {
    double mx = o[base];
    for (std::size_t k = 1; k < c; ++k) mx = std::max(mx, o[base + k]);
    double z = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      o[base + k] = std::exp(o[base + k] - mx);
      z += o[base + k];
    }
    for (std::size_t k = 0; k < c; ++k) o[base + k] /= z;
  }
  return MakeResult(std::move(out), {input}, [c](detail::Node& self) {
    auto dx = ParentGrad(self, 0);
    const auto y = self.value.values();
    const auto g = self.value.grad();
    for (std::size_t base = 0; base < y.size(); base += c) {
      double dot = 0.0;
      for (std::size_t k = 0; k < c; ++k) dot += g[base + k] * y[base + k];
      for (std::size_t k = 0; k < c; ++k) {
        dx[base + k] += y[base + k] * (g[base + k] - dot);
      }
    }
  });
}

Var BilinearUpsample(const Var& input, std::size_t out_h, std::size_t out_w) {
  RequireMap(input, "bilinear_upsample");
  if (out_h == 0 || out_w == 0) {
    throw ShapeError("bilinear_upsample: empty target size");
  }
  const std::size_t in_h = input.shape()[0];
  const std::size_t in_w = input.shape()[1];
  const std::size_t c = input.shape()[2];
  auto ay = std::make_shared<AxisWeights>(BilinearAxis(in_h, out_h));
  auto ax = std::make_shared<AxisWeights>(BilinearAxis(in_w, out_w));
  Tensor out(Shape{out_h, out_w, c});
  const auto in = input.value().values();
  auto o = out.values();
  for (std::size_t y = 0; y < out_h; ++y) {
    const double* r0 = in.data() + ay->lo[y] * in_w * c;
    const double* r1 = in.data() + ay->hi[y] * in_w * c;
    const double wy0 = ay->w_lo[y], wy1 = ay->w_hi[y];
    for (std::size_t x = 0; x < out_w; ++x) {
      const std::size_t x0 = ax->lo[x] * c, x1 = ax->hi[x] * c;
      const double wx0 = ax->w_lo[x], wx1 = ax->w_hi[x];
      double* dst = o.data() + (y * out_w + x) * c;
      for (std::size_t k = 0; k < c; ++k) {
        dst[k] = wy0 * (wx0 * r0[x0 + k] + wx1 * r0[x1 + k]) +
                 wy1 * (wx0 * r1[x0 + k] + wx1 * r1[x1 + k]);
      }
    }
  }
  return MakeResult(
      std::move(out), {input}, [ay, ax, in_w, out_w, c](detail::Node& self) {
        auto dx = ParentGrad(self, 0);
        const auto g = self.value.grad();
        const std::size_t out_h = ay->lo.size();
        for (std::size_t y = 0; y < out_h; ++y) {
          double* r0 = dx.data() + ay->lo[y] * in_w * c;
          double* r1 = dx.data() + ay->hi[y] * in_w * c;
          const double wy0 = ay->w_lo[y], wy1 = ay->w_hi[y];
          for (std::size_t x = 0; x < out_w; ++x) {
            const std::size_t x0 = ax->lo[x] * c, x1 = ax->hi[x] * c;
            const double wx0 = ax->w_lo[x], wx1 = ax->w_hi[x];
            const double* src = g.data() + (y * out_w + x) * c;
            for (std::size_t k = 0; k < c; ++k) {
              r0[x0 + k] += wy0 * wx0 * src[k];
              r0[x1 + k] += wy0 * wx1 * src[k];
              r1[x0 + k] += wy1 * wx0 * src[k];
              r1[x1 + k] += wy1 * wx1 * src[k];
            }
          }
        }
      });
}

Var Linear(const Var& vec, const Var& weight, const Var& bias) {
  RequireRank(vec.value(), 1, "linear input");
  RequireRank(weight.value(), 2, "linear weight");
  const std::size_t n_in = weight.shape()[0];
  const std::size_t n_out = weight.shape()[1];
  if (vec.shape()[0] != n_in) {
    throw ShapeError("linear: input " + ShapeToString(vec.shape()) +
                     " does not match weight " + ShapeToString(weight.shape()));
  }
  if (bias.defined() && bias.shape() != Shape{n_out}) {
    throw ShapeError("linear: bias " + ShapeToString(bias.shape()) +
                     " does not match weight " + ShapeToString(weight.shape()));
  }
  Tensor out(Shape{n_out});
  const auto v = vec.value().values();
  const auto w = weight.value().values();
  for (std::size_t o = 0; o < n_out; ++o) {
    double acc = bias.defined() ? bias.value()[o] : 0.0;
    for (std::size_t i = 0; i < n_in; ++i) acc += v[i] * w[i * n_out + o];
    out[o] = acc;
  }
  std::vector<Var> inputs{vec, weight};
  if (bias.defined()) inputs.push_back(bias);
  return MakeResult(
      std::move(out), std::move(inputs), [n_in, n_out](detail::Node& self) {
        const auto g = self.value.grad();
        const auto v = self.parents[0]->value.values();
        const auto w = self.parents[1]->value.values();
        if (auto dv = ParentGrad(self, 0); !dv.empty()) {
          for (std::size_t i = 0; i < n_in; ++i) {
            for (std::size_t o = 0; o < n_out; ++o) {
              dv[i] += g[o] * w[i * n_out + o];
            }
          }
        }
        if (auto dw = ParentGrad(self, 1); !dw.empty()) {
          for (std::size_t i = 0; i < n_in; ++i) {
            for (std::size_t o = 0; o < n_out; ++o) dw[i * n_out + o] += v[i] * g[o];
          }
        }
        if (self.parents.size() > 2) {
          if (auto db = ParentGrad(self, 2); !db.empty()) {
            for (std::size_t o = 0; o < n_out; ++o) db[o] += g[o];
          }
        }
      });
}

Var SigmoidCrossEntropy(const Var& logits, std::span<const double> targets) {
  if (logits.size() != targets.size() || targets.empty()) {
    throw ShapeError("sigmoid_cross_entropy: logits " +
                     ShapeToString(logits.shape()) + " vs " +
                     std::to_string(targets.size()) + " targets");
  }
  const auto z = logits.value().values();
  const double n = static_cast<double>(z.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    loss += std::max(z[i], 0.0) - z[i] * targets[i] +
            std::log1p(std::exp(-std::abs(z[i])));
  }
  std::vector<double> t(targets.begin(), targets.end());
  return MakeResult(Tensor::Scalar(loss / n), {logits},
                    [t = std::move(t), n](detail::Node& self) {
                      auto dz = ParentGrad(self, 0);
                      const auto z = self.parents[0]->value.values();
                      const double g = self.value.grad()[0];
                      for (std::size_t i = 0; i < z.size(); ++i) {
                        const double s = z[i] >= 0.0
                                             ? 1.0 / (1.0 + std::exp(-z[i]))
                                             : std::exp(z[i]) / (1.0 + std::exp(z[i]));
                        dz[i] += g * (s - t[i]) / n;
                      }
                    });
}

}  // namespace amnkit::ops
