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
#ifndef AMNKIT_PIPELINE_PIPELINE_HPP_
#define AMNKIT_PIPELINE_PIPELINE_HPP_

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "amnkit/amn/amn.hpp"
#include "amnkit/cam/cam.hpp"
#include "amnkit/evalkit/evalkit.hpp"
#include "amnkit/pipeline/config.hpp"

namespace amnkit::pipeline {

// Failure of a named stage, e.g. a missing upstream artifact.
class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Directory tree plus manifest.json recording, per stage, the config hash it
// was produced with and its timestamps. Single writer.
class ArtifactStore {
 public:
  explicit ArtifactStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  const std::string& run_id() const { return run_id_; }
  // root/<name>, created on demand.
  std::filesystem::path Dir(const std::string& name) const;

  bool IsComplete(const std::string& stage, const std::string& config_hash) const;
  void MarkStarted(const std::string& stage, const std::string& config_hash);
  void MarkComplete(const std::string& stage, const std::string& config_hash);

 private:
  struct Record {
    std::string config_hash;
    std::string started_at;
    std::string completed_at;
  };
  void Save() const;

  std::filesystem::path root_;
  std::string run_id_;
  std::map<std::string, Record> stages_;
};

// One trained activation manipulation network of the experiments.
struct AmnVariant {
  std::string name;
  std::vector<int> placements;  // empty: no label conditioning
  amn::LcInput input = amn::LcInput::kLabel;
};

AmnVariant MainVariant(const PipelineConfig& cfg);
AmnVariant NoLcVariant();

struct AblationResult {
  double cam = 0.0;
  double cam_pcl = 0.0;
  double cam_pcl_lc = 0.0;
  std::filesystem::path csv;
};

struct RowResult {
  std::string name;
  double miou = 0.0;
};

struct TableResult {
  std::vector<RowResult> rows;
  std::filesystem::path csv;
  double Get(const std::string& name) const;
};

struct SweepResult {
  eval::ThresholdSweep cam, amn;
  eval::ActivationStats cam_stats, amn_stats;  // means over (image, class)
  std::filesystem::path csv, stats_csv, svg;
};

struct HistogramResult {
  std::vector<std::size_t> cam_counts, amn_counts;
  std::vector<double> cam_tau_opt, amn_tau_opt;
  std::filesystem::path csv, tau_csv, svg;
};

struct EvalResult {
  double cam_tau_global = 0.0;   // CAM thresholded at tau_global
  double cam_tau_opt_mean = 0.0; // mean per-image optimal-threshold mIoU
  double stage1_crf = 0.0;       // CAM -> CRF -> argmax
  double stage2 = -1.0;          // final pseudo-masks, -1 when absent
  double stage3_val = -1.0;      // segmentation net on val, -1 when absent
  std::filesystem::path csv;
};

// Three-stage pipeline and experiments over one artifact store. Stages and
// trained networks are reused when the manifest records the same config hash.
class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, std::filesystem::path out_dir, int workers = 1,
           std::ostream* log = nullptr);
  ~Pipeline();

  const PipelineConfig& config() const { return cfg_; }
  const std::string& config_hash() const { return hash_; }
  ArtifactStore& store() { return store_; }

  void GenerateData();
  void RunStage1();
  void RunStage2();
  double RunStage3();

  AblationResult Ablation();
  TableResult LcPlacementAblation();
  TableResult LcEncodingAblation();
  SweepResult ThresholdSweepExperiment();
  HistogramResult ActivationHistogram();
  EvalResult Evaluate();

  // Loaded artifacts; each throws StageError when its stage has not run.
  const std::vector<Sample>& Train();
  const std::vector<Sample>& Val();
  const ClassifierNet& Classifier();
  // Normalized CAMs of the present classes of each training image.
  const std::vector<ActivationMap>& Cams();
  const std::vector<SegMask>& Seeds();
  // CAM -> CRF -> argmax masks of the training images.
  const std::vector<SegMask>& CamCrfMasks();
  // Trains the variant or loads its checkpoint.
  const amn::AmnNet& Amn(const AmnVariant& variant);
  // Post-softmax maps of a variant on the training images.
  std::vector<ActivationMap> AmnMaps(const AmnVariant& variant);
  // AMN -> CRF -> argmax pseudo-masks of the training images.
  const std::vector<SegMask>& AmnCrfMasks(const AmnVariant& variant);

 private:
  struct State;
  void Log(const std::string& message) const;
  void LogCrfConvergence(const std::string& where, std::size_t non_monotone,
                         std::size_t total) const;
  void RequireStage(const std::string& stage, const std::string& needed_by) const;
  // Fills the pseudo-mask cache for the variants, one CRF kernel per image.
  void ComputeAmnCrfMasks(const std::vector<AmnVariant>& variants);
  std::filesystem::path WriteCsv(const std::string& name, const std::string& header,
                                 const std::vector<std::string>& rows);
  TableResult RunTable(const std::string& name, const std::vector<AmnVariant>& variants);

  PipelineConfig cfg_;
  std::string hash_;
  ArtifactStore store_;
  int workers_;
  std::ostream* log_;
  std::unique_ptr<State> state_;
};

}  // namespace amnkit::pipeline

#endif  // AMNKIT_PIPELINE_PIPELINE_HPP_
