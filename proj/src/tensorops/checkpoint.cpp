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
#include "amnkit/tensorops/checkpoint.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace amnkit {
namespace io {
namespace {

template <typename U>
void PutLe(std::ostream& out, U v) {
  std::array<char, sizeof(U)> bytes;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U GetLe(std::istream& in) {
  std::array<unsigned char, sizeof(U)> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw std::runtime_error("unexpected end of binary stream");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(bytes[i]) << (8 * i);
  }
  return v;
}

}  // namespace

void PutU32(std::ostream& out, std::uint32_t v) { PutLe(out, v); }
void PutU64(std::ostream& out, std::uint64_t v) { PutLe(out, v); }
void PutF64(std::ostream& out, double v) {
  PutLe(out, std::bit_cast<std::uint64_t>(v));
}
void PutF32(std::ostream& out, float v) {
  PutLe(out, std::bit_cast<std::uint32_t>(v));
}
std::uint32_t GetU32(std::istream& in) { return GetLe<std::uint32_t>(in); }
std::uint64_t GetU64(std::istream& in) { return GetLe<std::uint64_t>(in); }
double GetF64(std::istream& in) {
  return std::bit_cast<double>(GetLe<std::uint64_t>(in));
}
float GetF32(std::istream& in) {
  return std::bit_cast<float>(GetLe<std::uint32_t>(in));
}

void ExpectMagic(std::istream& in, const std::string& magic) {
  std::string got(magic.size(), '\0');
  in.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (!in || got != magic) {
    throw std::runtime_error("bad magic: expected \"" + magic + "\"");
  }
}

}  // namespace io

namespace {
constexpr char kMagic[] = "AMNKIT1";
}

void WriteCheckpoint(std::ostream& out,
                     const std::vector<NamedTensor>& tensors) {
  out.write(kMagic, sizeof(kMagic) - 1);
  for (const auto& [name, t] : tensors) {
    io::PutU32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    io::PutU32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) io::PutU64(out, e);
    for (double v : t.values()) io::PutF64(out, v);
  }
  if (!out) throw std::runtime_error("checkpoint write failed");
}

std::vector<NamedTensor> ReadCheckpoint(std::istream& in) {
  io::ExpectMagic(in, kMagic);
  std::vector<NamedTensor> tensors;
  while (in.peek() != std::char_traits<char>::eof()) {
    const std::uint32_t name_len = io::GetU32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw std::runtime_error("truncated checkpoint record name");
    const std::uint32_t rank = io::GetU32(in);
    Shape shape(rank);
    for (auto& e : shape) e = io::GetU64(in);
    std::vector<double> values(NumElements(shape));
    for (double& v : values) v = io::GetF64(in);
    tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  return tensors;
}

void SaveCheckpoint(const std::filesystem::path& path,
                    const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  WriteCheckpoint(out, tensors);
}

std::vector<NamedTensor> LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return ReadCheckpoint(in);
}

}  // namespace amnkit
