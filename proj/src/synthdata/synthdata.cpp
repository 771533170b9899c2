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
#include "amnkit/synthdata/synthdata.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "amnkit/tensorops/netpbm.hpp"

namespace amnkit::synth {
namespace {

using Rgb = std::array<double, 3>;

constexpr int kMaxPlacementAttempts = 100;

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rgb Hsv(double h, double s, double v) {
  h = h - std::floor(h);
  const double c = v * s;
  const double hp = h * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  Rgb rgb{};
  switch (static_cast<int>(hp) % 6) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
  }
  const double m = v - c;
  return {rgb[0] + m, rgb[1] + m, rgb[2] + m};
}

// Texture shared by confusable classes: the lower id of each pair.
int BodyTexture(const CorpusConfig& cfg, int class_id) {
  for (const auto& [a, b] : cfg.confusable_pairs) {
    if (class_id == a || class_id == b) return std::min(a, b);
  }
  return class_id;
}

Rgb BodyColor(int texture) {
  return Hsv(0.07 + 0.13 * texture, 0.38, 0.78);
}

// Two-tone checker of the class head patch.
std::pair<Rgb, Rgb> HeadColors(int class_id) {
  static const std::array<std::pair<Rgb, Rgb>, 4> kFixed{{
      {{0.95, 0.08, 0.08}, {1.0, 1.0, 1.0}},
      {{0.08, 0.1, 0.95}, {0.98, 0.95, 0.1}},
      {{0.02, 0.02, 0.02}, {1.0, 1.0, 1.0}},
      {{0.95, 0.1, 0.95}, {0.1, 0.95, 0.95}},
  }};
  if (class_id < 4) return kFixed[static_cast<std::size_t>(class_id)];
  const double h = 0.618033988749895 * class_id;
  return {Hsv(h, 1.0, 1.0), Hsv(h + 0.5, 1.0, 0.15)};
}

struct Object {
  int class_id = 0;
  std::vector<std::uint8_t> mask;  // object footprint (before occlusion)
  std::size_t head_y = 0, head_x = 0;
};

std::vector<std::uint8_t> ShapeMask(int family, double cy, double cx, double r,
                                    std::size_t size) {
  std::vector<std::uint8_t> m(size * size, 0);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double dy = static_cast<double>(y) + 0.5 - cy;
      const double dx = static_cast<double>(x) + 0.5 - cx;
      bool inside = false;
      switch (family) {
        case 0:
          inside = dy * dy + dx * dx <= r * r;
          break;
        case 1:
          inside = std::abs(dy) <= 0.88 * r && std::abs(dx) <= 0.88 * r;
          break;
        case 2: {
          // Upward triangle: apex at top, base at the bottom.
          const double top = -1.1 * r, bottom = 0.8 * r;
          if (dy >= top && dy <= bottom) {
            const double half = 1.15 * r * (dy - top) / (bottom - top);
            inside = std::abs(dx) <= half;
          }
          break;
        }
        default: {
          const double d2 = dy * dy + dx * dx;
          const double outer = 1.1 * r, inner = std::max(0.0, outer - 7.5);
          inside = d2 <= outer * outer && d2 >= inner * inner;
          break;
        }
      }
      m[y * size + x] = inside ? 1 : 0;
    }
  }
  return m;
}

void ValidateConfig(const CorpusConfig& cfg) {
  if (cfg.num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
  if (cfg.image_size < 32) throw std::invalid_argument("image_size must be >= 32");
  if (cfg.min_objects < 1 || cfg.max_objects < cfg.min_objects) {
    throw std::invalid_argument("objects_per_image range must satisfy 1 <= min <= max");
  }
  for (const auto& [a, b] : cfg.confusable_pairs) {
    if (a < 0 || b < 0 || a >= cfg.num_classes || b >= cfg.num_classes || a == b) {
      throw std::invalid_argument("confusable pair out of range");
    }
  }
}

}  // namespace

std::string ClassName(int class_id) {
  static const std::array<const char*, 4> kNames{"disk", "square", "triangle",
                                                 "annulus"};
  if (class_id >= 0 && class_id < 4) return kNames[static_cast<std::size_t>(class_id)];
  return "class" + std::to_string(class_id);
}

std::vector<std::string> ClassNames(int num_classes) {
  std::vector<std::string> names;
  for (int c = 0; c < num_classes; ++c) names.push_back(ClassName(c));
  return names;
}

Sample GenerateImage(const CorpusConfig& cfg, std::size_t index) {
  ValidateConfig(cfg);
  const std::size_t size = cfg.image_size;
  const std::size_t global_index = cfg.first_index + index;
  std::mt19937_64 rng(SplitMix64(cfg.seed ^ SplitMix64(global_index + 1)));
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  const int max_k = std::min(cfg.max_objects, cfg.num_classes);
  const int min_k = std::min(cfg.min_objects, max_k);
  const int k = std::uniform_int_distribution<int>(min_k, max_k)(rng);
  std::vector<int> classes(static_cast<std::size_t>(cfg.num_classes));
  for (int c = 0; c < cfg.num_classes; ++c) classes[static_cast<std::size_t>(c)] = c;
  std::shuffle(classes.begin(), classes.end(), rng);
  classes.resize(static_cast<std::size_t>(k));

  // Layout: owner[p] is the index of the topmost object covering p, or -1.
  std::vector<Object> objects;
  std::vector<int> owner(size * size, -1);
  const double s = static_cast<double>(size) / 64.0;
  for (int class_id : classes) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
      const double r = uniform(9.0, 13.0) * s;
      const double margin = 1.15 * r + 1.0;
      const double cy = uniform(margin, static_cast<double>(size) - margin);
      const double cx = uniform(margin, static_cast<double>(size) - margin);
      Object obj;
      obj.class_id = class_id;
      obj.mask = ShapeMask(class_id % 4, cy, cx, r, size);

      std::size_t area = 0;
      std::vector<std::size_t> covered(objects.size(), 0), visible(objects.size(), 0);
      bool hits_head = false;
      for (std::size_t p = 0; p < owner.size(); ++p) {
        if (owner[p] >= 0) ++visible[static_cast<std::size_t>(owner[p])];
        if (!obj.mask[p]) continue;
        ++area;
        if (owner[p] >= 0) ++covered[static_cast<std::size_t>(owner[p])];
      }
      for (std::size_t j = 0; j < objects.size() && !hits_head; ++j) {
        for (std::size_t dy = 0; dy < kHeadPatchSize && !hits_head; ++dy) {
          for (std::size_t dx = 0; dx < kHeadPatchSize; ++dx) {
            if (obj.mask[(objects[j].head_y + dy) * size + objects[j].head_x + dx]) {
              hits_head = true;
              break;
            }
          }
        }
      }
      bool too_much_overlap = hits_head;
      std::size_t total_covered = 0;
      for (std::size_t j = 0; j < objects.size(); ++j) {
        total_covered += covered[j];
        if (2 * covered[j] > visible[j]) too_much_overlap = true;
      }
      if (2 * total_covered > area) too_much_overlap = true;
      if (too_much_overlap) continue;

      // Head: a 6x6 window fully inside the footprint.
      std::vector<std::pair<std::size_t, std::size_t>> spots;
      for (std::size_t y = 0; y + kHeadPatchSize <= size; ++y) {
        for (std::size_t x = 0; x + kHeadPatchSize <= size; ++x) {
          bool ok = true;
          for (std::size_t dy = 0; dy < kHeadPatchSize && ok; ++dy) {
            for (std::size_t dx = 0; dx < kHeadPatchSize; ++dx) {
              if (!obj.mask[(y + dy) * size + x + dx]) {
                ok = false;
                break;
              }
            }
          }
          if (ok) spots.emplace_back(y, x);
        }
      }
      if (spots.empty()) continue;
      const auto spot = spots[std::uniform_int_distribution<std::size_t>(
          0, spots.size() - 1)(rng)];
      obj.head_y = spot.first;
      obj.head_x = spot.second;
      for (std::size_t p = 0; p < owner.size(); ++p) {
        if (obj.mask[p]) owner[p] = static_cast<int>(objects.size());
      }
      objects.push_back(std::move(obj));
      placed = true;
    }
    if (!placed) {
      throw std::runtime_error("image " + std::to_string(global_index) +
                               ": could not place class " +
                               std::to_string(class_id) + " after " +
                               std::to_string(kMaxPlacementAttempts) +
                               " attempts");
    }
  }

  // Render.
  Sample sample;
  {
    std::ostringstream id;
    id << "img_" << std::setfill('0') << std::setw(5) << global_index;
    sample.id = id.str();
  }
  sample.image = Tensor(Shape{size, size, 3});
  sample.ground_truth = SegMask(size, size);
  sample.labels.assign(static_cast<std::size_t>(cfg.num_classes), 0);
  for (const Object& o : objects) sample.labels[static_cast<std::size_t>(o.class_id)] = 1;

  const Rgb bg = Hsv(uniform(0.2, 0.6), uniform(0.1, 0.3), uniform(0.3, 0.45));
  const double gy = uniform(-0.08, 0.08), gx = uniform(-0.08, 0.08);
  const double phase = uniform(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 0.025);
  const double inv = 1.0 / static_cast<double>(size);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const std::size_t p = y * size + x;
      Rgb px;
      if (owner[p] < 0) {
        const double ramp = gy * (static_cast<double>(y) * inv - 0.5) +
                            gx * (static_cast<double>(x) * inv - 0.5);
        px = {bg[0] + ramp, bg[1] + ramp, bg[2] + ramp};
      } else {
        const Object& o = objects[static_cast<std::size_t>(owner[p])];
        const int tex = BodyTexture(cfg, o.class_id);
        const Rgb base = BodyColor(tex);
        // Low-contrast stripes; orientation depends on the texture id.
        const double u = (tex % 2 == 0 ? static_cast<double>(x) : 0.0) +
                         (tex % 3 != 1 ? static_cast<double>(y) : 0.0);
        const double stripe = 0.06 * std::sin(2.0 * std::numbers::pi * u / 5.0 + phase);
        px = {base[0] + stripe, base[1] + stripe, base[2] + stripe};
        const bool in_head = y >= o.head_y && y < o.head_y + kHeadPatchSize &&
                             x >= o.head_x && x < o.head_x + kHeadPatchSize;
        if (in_head) {
          const auto [a, b] = HeadColors(o.class_id);
          const bool even = (((y - o.head_y) / 2) + ((x - o.head_x) / 2)) % 2 == 0;
          px = even ? a : b;
        }
        sample.ground_truth.labels[p] = SegLabelOf(o.class_id);
      }
      for (std::size_t c = 0; c < 3; ++c) {
        sample.image.at(y, x, c) = std::clamp(px[c] + noise(rng), 0.0, 1.0);
      }
    }
  }
  return sample;
}

std::vector<Sample> Generate(const CorpusConfig& cfg) {
  ValidateConfig(cfg);
  std::vector<Sample> samples;
  samples.reserve(cfg.num_images);
  for (std::size_t i = 0; i < cfg.num_images; ++i) {
    samples.push_back(GenerateImage(cfg, i));
  }
  return samples;
}

void WriteCorpus(const std::filesystem::path& dir,
                 const std::vector<Sample>& samples, const std::string& split,
                 int num_classes) {
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "masks");
  const auto manifest = dir / "manifest.csv";
  const bool fresh = !std::filesystem::exists(manifest);
  std::ofstream out(manifest, std::ios::app);
  if (!out) throw std::runtime_error("cannot open " + manifest.string());
  if (fresh) out << "id,split,labels,image,mask\n";
  for (const Sample& s : samples) {
    const std::string image = "images/" + s.id + ".ppm";
    const std::string mask = "masks/" + s.id + ".pgm";
    netpbm::WritePpm(dir / image, s.image);
    netpbm::WritePgm(dir / mask, s.ground_truth);
    out << s.id << ',' << split << ',';
    for (std::size_t c = 0; c < s.labels.size(); ++c) {
      out << (c ? " " : "") << static_cast<int>(s.labels[c]);
    }
    out << ',' << image << ',' << mask << '\n';
  }
  netpbm::WriteLabelNames(dir / "masks" / "labels.txt", ClassNames(num_classes));
}

std::vector<Sample> ReadCorpus(const std::filesystem::path& dir,
                               const std::string& split) {
  std::ifstream in(dir / "manifest.csv");
  if (!in) throw std::runtime_error("missing manifest.csv in " + dir.string());
  std::vector<Sample> samples;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 5) throw std::runtime_error("bad manifest row: " + line);
    if (fields[1] != split) continue;
    Sample s;
    s.id = fields[0];
    std::stringstream ls(fields[2]);
    for (int v; ls >> v;) s.labels.push_back(static_cast<std::uint8_t>(v));
    s.image = netpbm::ReadPpm(dir / fields[3]);
    s.ground_truth = netpbm::ReadPgm(dir / fields[4]);
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace amnkit::synth
