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
#ifndef AMNKIT_TENSOROPS_NETPBM_HPP_
#define AMNKIT_TENSOROPS_NETPBM_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "amnkit/types.hpp"

// Binary PPM (P6) images and PGM (P5) label maps, maxval 255.
namespace amnkit::netpbm {

// Writes a [H, W, 3] image with values in [0, 1], quantized to 8 bits.
void WritePpm(const std::filesystem::path& path, const Tensor& image);
Tensor ReadPpm(const std::filesystem::path& path);

void WritePgm(const std::filesystem::path& path, const SegMask& mask);
SegMask ReadPgm(const std::filesystem::path& path);

// Sidecar "id name" lines describing the label values of a PGM mask.
void WriteLabelNames(const std::filesystem::path& path,
                     const std::vector<std::string>& class_names);

}  // namespace amnkit::netpbm

#endif  // AMNKIT_TENSOROPS_NETPBM_HPP_
