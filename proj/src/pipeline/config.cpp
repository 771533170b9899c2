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
#include "amnkit/pipeline/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "amnkit/types.hpp"

namespace amnkit::pipeline {
namespace {

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T ParseNumber(std::string_view text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("invalid number '" + std::string(text) + "'");
  }
  return value;
}

std::vector<int> ParseIntList(std::string_view text) {
  std::vector<int> out;
  if (text == "none") return out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(ParseNumber<int>(Trim(text.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Field {
  const char* key;
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename T>
Field Number(const char* key, T PipelineConfig::*member) {
  return {key,
          [member](PipelineConfig& c, std::string_view v) { c.*member = ParseNumber<T>(v); },
          [member](const PipelineConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return FormatDouble(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          }};
}

template <typename T>
Field CrfNumber(const char* key, T refine::CrfConfig::*member) {
  return {key,
          [member](PipelineConfig& c, std::string_view v) {
            c.crf.*member = ParseNumber<T>(v);
          },
          [member](const PipelineConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return FormatDouble(c.crf.*member);
            } else {
              return std::to_string(c.crf.*member);
            }
          }};
}

const std::vector<Field>& Fields() {
  static const std::vector<Field> fields = {
      Number("num_train", &PipelineConfig::num_train),
      Number("num_val", &PipelineConfig::num_val),
      Number("image_size", &PipelineConfig::image_size),
      Number("num_classes", &PipelineConfig::num_classes),
      Number("min_objects", &PipelineConfig::min_objects),
      Number("max_objects", &PipelineConfig::max_objects),
      Number("seed", &PipelineConfig::seed),
      Number("cls_epochs", &PipelineConfig::cls_epochs),
      Number("cls_lr", &PipelineConfig::cls_lr),
      Number("batch_size", &PipelineConfig::batch_size),
      Number("weight_decay", &PipelineConfig::weight_decay),
      CrfNumber("crf_iterations", &refine::CrfConfig::iterations),
      CrfNumber("crf_w_appearance", &refine::CrfConfig::w_appearance),
      CrfNumber("crf_w_smoothness", &refine::CrfConfig::w_smoothness),
      CrfNumber("crf_theta_alpha", &refine::CrfConfig::theta_alpha),
      CrfNumber("crf_theta_beta", &refine::CrfConfig::theta_beta),
      CrfNumber("crf_theta_gamma", &refine::CrfConfig::theta_gamma),
      CrfNumber("crf_confidence", &refine::CrfConfig::confidence_threshold),
      Number("amn_epochs", &PipelineConfig::amn_epochs),
      Number("amn_lr", &PipelineConfig::amn_lr),
      Number("amn_lr_ratio", &PipelineConfig::amn_lr_ratio),
      Number("epsilon", &PipelineConfig::epsilon),
      {"lc_placements",
       [](PipelineConfig& c, std::string_view v) { c.lc_placements = ParseIntList(v); },
       [](const PipelineConfig& c) {
         if (c.lc_placements.empty()) return std::string("none");
         std::string out;
         for (std::size_t i = 0; i < c.lc_placements.size(); ++i) {
           out += (i ? "," : "") + std::to_string(c.lc_placements[i]);
         }
         return out;
       }},
      Number("aspp_channels", &PipelineConfig::aspp_channels),
      Number("lc_bias_init", &PipelineConfig::lc_bias_init),
      Number("seg_epochs", &PipelineConfig::seg_epochs),
      Number("tau_global", &PipelineConfig::tau_global),
      Number("sweep_tau_min", &PipelineConfig::sweep_tau_min),
      Number("sweep_tau_max", &PipelineConfig::sweep_tau_max),
      Number("sweep_tau_step", &PipelineConfig::sweep_tau_step),
      Number("grid_step", &PipelineConfig::grid_step),
      Number("hist_bins", &PipelineConfig::hist_bins),
  };
  return fields;
}

}  // namespace

PipelineConfig ParseConfig(std::string_view text) {
  PipelineConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string_view key = Trim(line.substr(0, eq));
    const std::string_view value = Trim(line.substr(eq + 1));
    const Field* field = nullptr;
    for (const Field& f : Fields()) {
      if (key == f.key) field = &f;
    }
    if (field == nullptr) throw ConfigError(where + "unknown key '" + std::string(key) + "'");
    try {
      field->set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + std::string(key) + ": " + e.what());
    }
  }
  ValidateConfig(cfg);
  return cfg;
}

PipelineConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseConfig(buf.str());
}

std::string SerializeConfig(const PipelineConfig& cfg) {
  std::string out;
  for (const Field& f : Fields()) out += std::string(f.key) + " = " + f.get(cfg) + "\n";
  return out;
}

std::string ConfigHash(const PipelineConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(Fnv1a64(SerializeConfig(cfg))));
  return buf;
}

void ValidateConfig(const PipelineConfig& cfg) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("config: ") + what);
  };
  require(cfg.num_train >= 1, "num_train must be >= 1");
  require(cfg.image_size >= 32 && cfg.image_size % 8 == 0,
          "image_size must be a multiple of 8 and >= 32");
  require(cfg.num_classes >= 2 && cfg.num_classes <= 254, "num_classes must be in [2, 254]");
  require(cfg.min_objects >= 1 && cfg.max_objects >= cfg.min_objects,
          "objects range must satisfy 1 <= min_objects <= max_objects");
  require(cfg.cls_epochs >= 0 && cfg.amn_epochs >= 0 && cfg.seg_epochs >= 0,
          "epochs must be >= 0");
  require(cfg.batch_size >= 1, "batch_size must be >= 1");
  require(cfg.cls_lr > 0 && cfg.amn_lr > 0 && cfg.amn_lr_ratio > 0,
          "learning rates must be > 0");
  require(cfg.weight_decay >= 0, "weight_decay must be >= 0");
  require(cfg.epsilon >= 0 && cfg.epsilon < 1, "epsilon must be in [0, 1)");
  for (int b : cfg.lc_placements) require(b >= 1 && b <= 4, "lc_placements must be in 1..4");
  require(cfg.aspp_channels >= 1, "aspp_channels must be >= 1");
  require(cfg.tau_global > 0 && cfg.tau_global < 1, "tau_global must be in (0, 1)");
  require(cfg.sweep_tau_min >= 0 && cfg.sweep_tau_max <= 1 &&
              cfg.sweep_tau_min < cfg.sweep_tau_max && cfg.sweep_tau_step > 0,
          "sweep range must satisfy 0 <= min < max <= 1, step > 0");
  require(cfg.grid_step > 0 && cfg.grid_step <= 1, "grid_step must be in (0, 1]");
  require(cfg.hist_bins >= 1, "hist_bins must be >= 1");
  try {
    refine::Validate(cfg.crf);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

}  // namespace amnkit::pipeline
