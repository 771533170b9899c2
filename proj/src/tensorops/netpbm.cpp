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
#include "amnkit/tensorops/netpbm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace amnkit::netpbm {
namespace {

struct Header {
  std::string magic;
  std::size_t width = 0, height = 0;
  int maxval = 0;
};

Header ReadHeader(std::istream& in, const std::filesystem::path& path) {
  Header h;
  auto next_token = [&]() {
    std::string tok;
    while (in >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return tok;
    }
    throw std::runtime_error("truncated netpbm header in " + path.string());
  };
  h.magic = next_token();
  h.width = std::stoul(next_token());
  h.height = std::stoul(next_token());
  h.maxval = std::stoi(next_token());
  in.get();  // single whitespace before the raster
  if (h.maxval != 255) {
    throw std::runtime_error("only maxval 255 is supported: " + path.string());
  }
  return h;
}

std::ofstream OpenOut(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  return out;
}

std::ifstream OpenIn(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

}  // namespace

void WritePpm(const std::filesystem::path& path, const Tensor& image) {
  RequireRank(image, 3, "ppm image");
  if (image.extent(2) != 3) throw ShapeError("ppm image needs 3 channels");
  auto out = OpenOut(path);
  out << "P6\n" << image.extent(1) << ' ' << image.extent(0) << "\n255\n";
  std::vector<char> raster(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double v = std::clamp(image[i], 0.0, 1.0);
    raster[i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
  }
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
}

Tensor ReadPpm(const std::filesystem::path& path) {
  auto in = OpenIn(path);
  const Header h = ReadHeader(in, path);
  if (h.magic != "P6") throw std::runtime_error("not a binary PPM: " + path.string());
  std::vector<unsigned char> raster(h.width * h.height * 3);
  in.read(reinterpret_cast<char*>(raster.data()),
          static_cast<std::streamsize>(raster.size()));
  if (!in) throw std::runtime_error("truncated PPM raster: " + path.string());
  Tensor image(Shape{h.height, h.width, 3});
  for (std::size_t i = 0; i < raster.size(); ++i) image[i] = raster[i] / 255.0;
  return image;
}

void WritePgm(const std::filesystem::path& path, const SegMask& mask) {
  auto out = OpenOut(path);
  out << "P5\n" << mask.width << ' ' << mask.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(mask.labels.data()),
            static_cast<std::streamsize>(mask.labels.size()));
}

SegMask ReadPgm(const std::filesystem::path& path) {
  auto in = OpenIn(path);
  const Header h = ReadHeader(in, path);
  if (h.magic != "P5") throw std::runtime_error("not a binary PGM: " + path.string());
  SegMask mask(h.height, h.width);
  in.read(reinterpret_cast<char*>(mask.labels.data()),
          static_cast<std::streamsize>(mask.labels.size()));
  if (!in) throw std::runtime_error("truncated PGM raster: " + path.string());
  return mask;
}

void WriteLabelNames(const std::filesystem::path& path,
                     const std::vector<std::string>& class_names) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "0 background\n";
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    out << (c + 1) << ' ' << class_names[c] << '\n';
  }
  out << "255 undefined\n";
}

}  // namespace amnkit::netpbm
