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
#ifndef AMNKIT_TYPES_HPP_
#define AMNKIT_TYPES_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "amnkit/tensorops/tensor.hpp"

namespace amnkit {

// Segmentation labels: 0 is background, foreground class `c` (0-based class
// id, as used by the classifier and label vectors) is stored as c + 1.
inline constexpr std::uint8_t kBackgroundLabel = 0;
inline constexpr std::uint8_t kUndefinedLabel = 255;

inline constexpr std::uint8_t SegLabelOf(int class_id) {
  return static_cast<std::uint8_t>(class_id + 1);
}
inline constexpr int ClassIdOf(std::uint8_t seg_label) {
  return static_cast<int>(seg_label) - 1;
}

// H x W label map.
struct SegMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> labels;

  SegMask() = default;
  SegMask(std::size_t h, std::size_t w, std::uint8_t fill = kBackgroundLabel)
      : height(h), width(w), labels(h * w, fill) {}

  std::uint8_t& at(std::size_t y, std::size_t x) { return labels[y * width + x]; }
  std::uint8_t at(std::size_t y, std::size_t x) const {
    return labels[y * width + x];
  }
  std::size_t size() const { return labels.size(); }
  bool operator==(const SegMask&) const = default;
};

// Image-level 0/1 indicator over the N foreground classes.
using LabelVector = std::vector<std::uint8_t>;

std::vector<int> PresentClasses(const LabelVector& labels);

struct Sample {
  std::string id;
  Tensor image;  // [H, W, 3], values in [0, 1]
  LabelVector labels;
  SegMask ground_truth;
};

// 64-bit FNV-1a; used for config hashes and per-sample seeds.
inline constexpr std::uint64_t Fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : text) {
    h ^= static_cast<std::uint8_t>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Horizontal mirror helpers used for augmentation.
Tensor FlipWidth(const Tensor& map);
SegMask FlipWidth(const SegMask& mask);

}  // namespace amnkit

#endif  // AMNKIT_TYPES_HPP_
