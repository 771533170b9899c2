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
#ifndef AMNKIT_TENSOROPS_CHECKPOINT_HPP_
#define AMNKIT_TENSOROPS_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "amnkit/tensorops/tensor.hpp"

namespace amnkit {

using NamedTensor = std::pair<std::string, Tensor>;

// Checkpoint layout (all integers little-endian):
//   "AMNKIT1"
//   repeated until EOF:
//     u32 name length, name bytes, u32 rank, rank x u64 extents,
//     product(extents) x f64 values
void WriteCheckpoint(std::ostream& out, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> ReadCheckpoint(std::istream& in);

void SaveCheckpoint(const std::filesystem::path& path,
                    const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> LoadCheckpoint(const std::filesystem::path& path);

// Little-endian primitives shared by the binary formats.
namespace io {
void PutU32(std::ostream& out, std::uint32_t v);
void PutU64(std::ostream& out, std::uint64_t v);
void PutF64(std::ostream& out, double v);
void PutF32(std::ostream& out, float v);
std::uint32_t GetU32(std::istream& in);
std::uint64_t GetU64(std::istream& in);
double GetF64(std::istream& in);
float GetF32(std::istream& in);
void ExpectMagic(std::istream& in, const std::string& magic);
}  // namespace io

}  // namespace amnkit

#endif  // AMNKIT_TENSOROPS_CHECKPOINT_HPP_
