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
#include "amnkit/types.hpp"

#include <algorithm>

namespace amnkit {

std::vector<int> PresentClasses(const LabelVector& labels) {
  std::vector<int> present;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    if (labels[c]) present.push_back(static_cast<int>(c));
  }
  return present;
}

Tensor FlipWidth(const Tensor& map) {
  RequireRank(map, 3, "flip_width");
  const std::size_t h = map.extent(0), w = map.extent(1), c = map.extent(2);
  Tensor out(map.shape());
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t k = 0; k < c; ++k) out.at(y, w - 1 - x, k) = map.at(y, x, k);
    }
  }
  return out;
}

SegMask FlipWidth(const SegMask& mask) {
  SegMask out = mask;
  for (std::size_t y = 0; y < mask.height; ++y) {
    auto row = out.labels.begin() + static_cast<long>(y * mask.width);
    std::reverse(row, row + static_cast<long>(mask.width));
  }
  return out;
}

}  // namespace amnkit
