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
#include "amnkit/pipeline/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "amnkit/refine/crf.hpp"
#include "amnkit/synthdata/synthdata.hpp"
#include "amnkit/tensorops/checkpoint.hpp"
#include "amnkit/tensorops/netpbm.hpp"
#include "amnkit/tensorops/parallel.hpp"
#include "json.hpp"

namespace amnkit::pipeline {
namespace fs = std::filesystem;
namespace {

constexpr char kData[] = "data";
constexpr char kStage1[] = "stage1";
constexpr char kStage2[] = "stage2";
constexpr char kStage3[] = "stage3";

std::string UtcNow(const char* format = "%Y-%m-%dT%H:%M:%SZ") {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), format, &tm);
  return buf;
}

std::string Fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// Seeds of the independent random streams derived from the config seed.
std::uint64_t ClassifierSeed(const PipelineConfig& c) { return c.seed * 1000 + 1; }
std::uint64_t AmnSeed(const PipelineConfig& c) { return c.seed * 1000 + 2; }
std::uint64_t SegSeed(const PipelineConfig& c) { return c.seed * 1000 + 3; }

std::string InputName(amn::LcInput input) {
  switch (input) {
    case amn::LcInput::kLabel: return "label";
    case amn::LcInput::kAllOnes: return "ones";
    case amn::LcInput::kLabelNoise: return "noise";
  }
  return "label";
}

std::string PlacementName(const std::vector<int>& placements) {
  if (placements.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < placements.size(); ++i) {
    out += (i ? "+" : "") + std::to_string(placements[i]);
  }
  return out;
}

AmnVariant MakeVariant(std::vector<int> placements, amn::LcInput input) {
  if (placements.empty()) return NoLcVariant();
  AmnVariant v;
  v.name = "lc" + PlacementName(placements) + "-" + InputName(input);
  v.placements = std::move(placements);
  v.input = input;
  return v;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

double CorpusMiou(const std::vector<SegMask>& pred, const std::vector<Sample>& samples,
                  int num_classes) {
  eval::IouAccumulator acc(num_classes);
  for (std::size_t i = 0; i < samples.size(); ++i) acc.Add(pred[i], samples[i].ground_truth);
  return acc.Miou();
}

}  // namespace

// ---------------------------------------------------------------------------
// ArtifactStore

ArtifactStore::ArtifactStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_);
  const fs::path manifest = root_ / "manifest.json";
  if (fs::exists(manifest)) {
    std::ifstream in(manifest);
    const nlohmann::json j = nlohmann::json::parse(in);
    run_id_ = j.at("run_id").get<std::string>();
    for (const auto& [name, rec] : j.at("stages").items()) {
      stages_[name] = Record{rec.at("config_hash").get<std::string>(),
                             rec.value("started_at", ""), rec.value("completed_at", "")};
    }
  } else {
    run_id_ = "run-" + UtcNow("%Y%m%dT%H%M%SZ");
    Save();
  }
}

fs::path ArtifactStore::Dir(const std::string& name) const {
  fs::path dir = root_ / name;
  fs::create_directories(dir);
  return dir;
}

bool ArtifactStore::IsComplete(const std::string& stage,
                               const std::string& config_hash) const {
  const auto it = stages_.find(stage);
  return it != stages_.end() && it->second.config_hash == config_hash &&
         !it->second.completed_at.empty();
}

void ArtifactStore::MarkStarted(const std::string& stage, const std::string& config_hash) {
  stages_[stage] = Record{config_hash, UtcNow(), ""};
  Save();
}

void ArtifactStore::MarkComplete(const std::string& stage, const std::string& config_hash) {
  Record& r = stages_[stage];
  r.config_hash = config_hash;
  if (r.started_at.empty()) r.started_at = UtcNow();
  r.completed_at = UtcNow();
  Save();
}

void ArtifactStore::Save() const {
  nlohmann::json j;
  j["run_id"] = run_id_;
  j["stages"] = nlohmann::json::object();
  for (const auto& [name, r] : stages_) {
    j["stages"][name] = {{"stage", name},
                         {"config_hash", r.config_hash},
                         {"started_at", r.started_at},
                         {"completed_at", r.completed_at}};
  }
  WriteText(root_ / "manifest.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Variants and results

AmnVariant MainVariant(const PipelineConfig& cfg) {
  return MakeVariant(cfg.lc_placements, amn::LcInput::kLabel);
}

AmnVariant NoLcVariant() { return AmnVariant{"nolc", {}, amn::LcInput::kLabel}; }

double TableResult::Get(const std::string& name) const {
  for (const RowResult& r : rows) {
    if (r.name == name) return r.miou;
  }
  throw std::out_of_range("no table row '" + name + "'");
}

// ---------------------------------------------------------------------------
// Pipeline

struct Pipeline::State {
  std::optional<std::vector<Sample>> train, val;
  std::unique_ptr<ClassifierNet> classifier;
  std::optional<std::vector<ActivationMap>> cams;
  std::optional<std::vector<SegMask>> seeds, cam_crf_masks;
  std::map<std::string, std::unique_ptr<amn::AmnNet>> amns;
  std::map<std::string, std::vector<SegMask>> amn_crf_masks;
};

Pipeline::Pipeline(PipelineConfig cfg, fs::path out_dir, int workers, std::ostream* log)
    : cfg_(std::move(cfg)),
      hash_(ConfigHash(cfg_)),
      store_(std::move(out_dir)),
      workers_(std::max(1, workers)),
      log_(log),
      state_(std::make_unique<State>()) {
  ValidateConfig(cfg_);
}

Pipeline::~Pipeline() = default;

void Pipeline::Log(const std::string& message) const {
  if (log_) *log_ << "[" << hash_ << "] " << message << std::endl;
}

void Pipeline::LogCrfConvergence(const std::string& where, std::size_t non_monotone,
                                 std::size_t total) const {
  if (non_monotone > 0) {
    Log(where + ": warning: mean-field change was not monotone after the first iteration "
        "on " + std::to_string(non_monotone) + " of " + std::to_string(total) + " images");
  }
}

void Pipeline::RequireStage(const std::string& stage, const std::string& needed_by) const {
  if (!store_.IsComplete(stage, hash_)) {
    throw StageError(needed_by, "missing upstream artifact from stage '" + stage +
                                    "' for config " + hash_ + " in " +
                                    store_.root().string());
  }
}

fs::path Pipeline::WriteCsv(const std::string& name, const std::string& header,
                            const std::vector<std::string>& rows) {
  const fs::path path = store_.Dir("results") / name;
  std::string text = "config_hash," + header + "\n";
  for (const std::string& row : rows) text += hash_ + "," + row + "\n";
  WriteText(path, text);
  return path;
}

void Pipeline::GenerateData() {
  if (store_.IsComplete(kData, hash_)) {
    Log("data: up to date");
    return;
  }
  store_.MarkStarted(kData, hash_);
  const fs::path dir = store_.Dir(kData);
  fs::remove(dir / "manifest.csv");
  synth::CorpusConfig c;
  c.image_size = cfg_.image_size;
  c.num_classes = cfg_.num_classes;
  c.min_objects = cfg_.min_objects;
  c.max_objects = cfg_.max_objects;
  c.seed = cfg_.seed;
  c.num_images = cfg_.num_train;
  synth::WriteCorpus(dir, synth::Generate(c), "train", cfg_.num_classes);
  c.first_index = cfg_.num_train;
  c.num_images = cfg_.num_val;
  synth::WriteCorpus(dir, synth::Generate(c), "val", cfg_.num_classes);
  state_->train.reset();
  state_->val.reset();
  store_.MarkComplete(kData, hash_);
  Log("data: wrote " + std::to_string(cfg_.num_train) + " train / " +
      std::to_string(cfg_.num_val) + " val images");
}

const std::vector<Sample>& Pipeline::Train() {
  if (!state_->train) {
    RequireStage(kData, "load train split");
    state_->train = synth::ReadCorpus(store_.root() / kData, "train");
  }
  return *state_->train;
}

const std::vector<Sample>& Pipeline::Val() {
  if (!state_->val) {
    RequireStage(kData, "load val split");
    state_->val = synth::ReadCorpus(store_.root() / kData, "val");
  }
  return *state_->val;
}

void Pipeline::RunStage1() {
  RequireStage(kData, kStage1);
  if (store_.IsComplete(kStage1, hash_)) {
    Log("stage1: up to date");
    return;
  }
  store_.MarkStarted(kStage1, hash_);
  const auto& train = Train();
  ClassifierNet net(cfg_.num_classes, ClassifierSeed(cfg_));
  TrainConfig tc;
  tc.epochs = cfg_.cls_epochs;
  tc.batch_size = cfg_.batch_size;
  tc.learning_rate = cfg_.cls_lr;
  tc.weight_decay = cfg_.weight_decay;
  tc.seed = ClassifierSeed(cfg_);
  Log("stage1: training classifier");
  const TrainHistory history = TrainClassifier(net, train, tc);
  const fs::path dir = store_.Dir(kStage1);
  SaveCheckpoint(dir / "classifier.ckpt", StateDict(net.NamedParameters()));
  {
    std::string text = "step,loss,learning_rate\n";
    for (std::size_t i = 0; i < history.step_loss.size(); ++i) {
      text += std::to_string(i) + "," + Fixed(history.step_loss[i]) + "," +
              Fixed(history.learning_rate[i]) + "\n";
    }
    WriteText(dir / "classifier_history.csv", text);
  }
  Log("stage1: train accuracy " + Fixed(ClassificationAccuracy(net, train)) +
      ", val accuracy " + Fixed(ClassificationAccuracy(net, Val())));

  const fs::path cam_dir = store_.Dir("stage1/cams");
  const fs::path seed_dir = store_.Dir("stage1/seeds");
  const fs::path crf_dir = store_.Dir("stage1/crf_masks");
  const auto names = synth::ClassNames(cfg_.num_classes);
  netpbm::WriteLabelNames(seed_dir / "labels.txt", names);
  netpbm::WriteLabelNames(crf_dir / "labels.txt", names);
  std::atomic<std::size_t> non_monotone{0};
  ParallelFor(train.size(), workers_, [&](std::size_t i) {
    const Sample& s = train[i];
    const auto present = PresentClasses(s.labels);
    const ActivationMap cam = NormalizeMap(ComputeCams(net, s.image, present));
    SaveActivationMap(cam_dir / (s.id + ".amnmap"), cam);
    // Reload so in-memory and resumed runs see the same stored precision.
    const ActivationMap stored = LoadActivationMap(cam_dir / (s.id + ".amnmap"));
    refine::CrfTrace trace;
    const Tensor refined =
        refine::CrfRefine(s.image, refine::UnaryFromCams(stored, cfg_.tau_global), cfg_.crf, &trace);
    if (!trace.monotone) ++non_monotone;
    const auto labels = refine::ChannelLabels(present);
    netpbm::WritePgm(seed_dir / (s.id + ".pgm"), refine::MakeSeed(refined, cfg_.crf, labels));
    netpbm::WritePgm(crf_dir / (s.id + ".pgm"), refine::ArgmaxMask(refined, labels));
  });
  state_->classifier.reset();
  state_->cams.reset();
  state_->seeds.reset();
  state_->cam_crf_masks.reset();
  store_.MarkComplete(kStage1, hash_);
  Log("stage1: wrote CAMs and seeds for " + std::to_string(train.size()) + " images");
  LogCrfConvergence("stage1", non_monotone, train.size());
}

const ClassifierNet& Pipeline::Classifier() {
  if (!state_->classifier) {
    RequireStage(kStage1, "load classifier");
    auto net = std::make_unique<ClassifierNet>(cfg_.num_classes, ClassifierSeed(cfg_));
    LoadStateDict(net->NamedParameters(),
                  LoadCheckpoint(store_.root() / kStage1 / "classifier.ckpt"));
    state_->classifier = std::move(net);
  }
  return *state_->classifier;
}

const std::vector<ActivationMap>& Pipeline::Cams() {
  if (!state_->cams) {
    RequireStage(kStage1, "load CAMs");
    const auto& train = Train();
    std::vector<ActivationMap> maps(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      maps[i] = LoadActivationMap(store_.root() / "stage1/cams" / (train[i].id + ".amnmap"));
      maps[i].normalized = true;
    }
    state_->cams = std::move(maps);
  }
  return *state_->cams;
}

namespace {

std::vector<SegMask> LoadMasks(const fs::path& dir, const std::vector<Sample>& samples) {
  std::vector<SegMask> masks;
  masks.reserve(samples.size());
  for (const Sample& s : samples) masks.push_back(netpbm::ReadPgm(dir / (s.id + ".pgm")));
  return masks;
}

}  // namespace

const std::vector<SegMask>& Pipeline::Seeds() {
  if (!state_->seeds) {
    RequireStage(kStage1, "load seeds");
    state_->seeds = LoadMasks(store_.root() / "stage1/seeds", Train());
  }
  return *state_->seeds;
}

const std::vector<SegMask>& Pipeline::CamCrfMasks() {
  if (!state_->cam_crf_masks) {
    RequireStage(kStage1, "load CRF masks");
    state_->cam_crf_masks = LoadMasks(store_.root() / "stage1/crf_masks", Train());
  }
  return *state_->cam_crf_masks;
}

const amn::AmnNet& Pipeline::Amn(const AmnVariant& variant) {
  if (auto it = state_->amns.find(variant.name); it != state_->amns.end()) {
    return *it->second;
  }
  const std::string stage = "amn/" + variant.name;
  RequireStage(kStage1, stage);
  amn::AmnSpec spec;
  spec.num_classes = cfg_.num_classes;
  spec.lc_placements = variant.placements;
  spec.aspp_channels = cfg_.aspp_channels;
  spec.lc_bias_init = cfg_.lc_bias_init;
  auto net = std::make_unique<amn::AmnNet>(spec, AmnSeed(cfg_));
  const fs::path ckpt = store_.root() / stage / "amn.ckpt";
  if (store_.IsComplete(stage, hash_)) {
    LoadStateDict(net->NamedParameters(), LoadCheckpoint(ckpt));
  } else {
    store_.MarkStarted(stage, hash_);
    net->LoadBackbone(Classifier().backbone());
    const auto& train = Train();
    const auto& seeds = Seeds();
    std::vector<amn::AmnSample> corpus;
    for (std::size_t i = 0; i < train.size(); ++i) corpus.push_back({&train[i], &seeds[i]});
    amn::AmnTrainConfig tc;
    tc.epochs = cfg_.amn_epochs;
    tc.batch_size = cfg_.batch_size;
    tc.head_learning_rate = cfg_.amn_lr;
    tc.backbone_lr_ratio = cfg_.amn_lr_ratio;
    tc.weight_decay = cfg_.weight_decay;
    tc.epsilon = cfg_.epsilon;
    tc.lc_input = variant.input;
    tc.seed = AmnSeed(cfg_);
    Log(stage + ": training");
    const amn::AmnTrainHistory history = amn::TrainAmn(*net, corpus, tc);
    const fs::path dir = store_.Dir(stage);
    SaveCheckpoint(ckpt, StateDict(net->NamedParameters()));
    std::string text = "step,loss,learning_rate\n";
    for (std::size_t i = 0; i < history.step_loss.size(); ++i) {
      text += std::to_string(i) + "," + Fixed(history.step_loss[i]) + "," +
              Fixed(history.learning_rate[i]) + "\n";
    }
    WriteText(dir / "history.csv", text);
    if (history.clamped_logs > 0) {
      Log(stage + ": warning: " + std::to_string(history.clamped_logs) +
          " log terms clamped during training");
    }
    store_.MarkComplete(stage, hash_);
  }
  auto& slot = state_->amns[variant.name];
  slot = std::move(net);
  return *slot;
}

std::vector<ActivationMap> Pipeline::AmnMaps(const AmnVariant& variant) {
  const amn::AmnNet& net = Amn(variant);
  const auto& train = Train();
  std::vector<ActivationMap> maps(train.size());
  ParallelFor(train.size(), workers_, [&](std::size_t i) {
    maps[i] = amn::AmnForward(net, train[i].image, train[i].labels, variant.input, cfg_.seed,
                              train[i].id);
  });
  return maps;
}

void Pipeline::ComputeAmnCrfMasks(const std::vector<AmnVariant>& variants) {
  std::vector<AmnVariant> todo;
  for (const AmnVariant& v : variants) {
    const bool queued = std::any_of(todo.begin(), todo.end(),
                                    [&](const AmnVariant& t) { return t.name == v.name; });
    if (!queued && !state_->amn_crf_masks.count(v.name)) todo.push_back(v);
  }
  if (todo.empty()) return;
  std::vector<const amn::AmnNet*> nets;
  for (const AmnVariant& v : todo) nets.push_back(&Amn(v));
  const auto& train = Train();
  std::vector<std::vector<SegMask>> masks(todo.size(), std::vector<SegMask>(train.size()));
  std::vector<std::atomic<std::size_t>> non_monotone(todo.size());
  std::vector<int> classes(static_cast<std::size_t>(cfg_.num_classes));
  for (int c = 0; c < cfg_.num_classes; ++c) classes[static_cast<std::size_t>(c)] = c;
  const auto labels = refine::ChannelLabels(classes);
  // All variants of one image share the pairwise kernel.
  ParallelFor(train.size(), workers_, [&](std::size_t i) {
    const Sample& s = train[i];
    std::vector<Tensor> unaries;
    for (std::size_t v = 0; v < todo.size(); ++v) {
      const ActivationMap m =
          amn::AmnForward(*nets[v], s.image, s.labels, todo[v].input, cfg_.seed, s.id);
      unaries.push_back(amn::AmnUnary(m, cfg_.epsilon));
    }
    std::vector<refine::CrfTrace> traces;
    const auto refined = refine::CrfRefineMany(s.image, unaries, cfg_.crf, &traces);
    for (std::size_t v = 0; v < todo.size(); ++v) {
      if (!traces[v].monotone) ++non_monotone[v];
      masks[v][i] = refine::ArgmaxMask(refined[v], labels);
    }
  });
  for (std::size_t v = 0; v < todo.size(); ++v) {
    LogCrfConvergence("crf " + todo[v].name, non_monotone[v], train.size());
    state_->amn_crf_masks[todo[v].name] = std::move(masks[v]);
  }
}

const std::vector<SegMask>& Pipeline::AmnCrfMasks(const AmnVariant& variant) {
  ComputeAmnCrfMasks({variant});
  return state_->amn_crf_masks.at(variant.name);
}

void Pipeline::RunStage2() {
  RequireStage(kStage1, kStage2);
  if (store_.IsComplete(kStage2, hash_)) {
    Log("stage2: up to date");
    return;
  }
  store_.MarkStarted(kStage2, hash_);
  const auto maps = AmnMaps(MainVariant(cfg_));
  const auto& masks = AmnCrfMasks(MainVariant(cfg_));
  const auto& train = Train();
  const fs::path map_dir = store_.Dir("stage2/maps");
  const fs::path mask_dir = store_.Dir("stage2/masks");
  netpbm::WriteLabelNames(mask_dir / "labels.txt", synth::ClassNames(cfg_.num_classes));
  for (std::size_t i = 0; i < train.size(); ++i) {
    SaveActivationMap(map_dir / (train[i].id + ".amnmap"), maps[i]);
    netpbm::WritePgm(mask_dir / (train[i].id + ".pgm"), masks[i]);
  }
  store_.MarkComplete(kStage2, hash_);
  Log("stage2: pseudo-mask mIoU " + Fixed(CorpusMiou(masks, train, cfg_.num_classes)));
}

double Pipeline::RunStage3() {
  RequireStage(kStage2, kStage3);
  const fs::path dir = store_.Dir(kStage3);
  amn::AmnSpec spec;
  spec.num_classes = cfg_.num_classes;
  spec.lc_placements = {};
  spec.aspp_channels = cfg_.aspp_channels;
  amn::AmnNet net(spec, SegSeed(cfg_));
  if (store_.IsComplete(kStage3, hash_)) {
    LoadStateDict(net.NamedParameters(), LoadCheckpoint(dir / "segnet.ckpt"));
  } else {
    store_.MarkStarted(kStage3, hash_);
    net.LoadBackbone(Classifier().backbone());
    const auto& train = Train();
    const auto masks = LoadMasks(store_.root() / "stage2/masks", train);
    std::vector<amn::AmnSample> corpus;
    for (std::size_t i = 0; i < train.size(); ++i) corpus.push_back({&train[i], &masks[i]});
    amn::AmnTrainConfig tc;
    tc.epochs = cfg_.seg_epochs;
    tc.batch_size = cfg_.batch_size;
    tc.head_learning_rate = cfg_.amn_lr;
    tc.backbone_lr_ratio = cfg_.amn_lr_ratio;
    tc.weight_decay = cfg_.weight_decay;
    tc.epsilon = 0.0;  // hard labels
    tc.seed = SegSeed(cfg_);
    Log("stage3: training segmentation network");
    amn::TrainAmn(net, corpus, tc);
    SaveCheckpoint(dir / "segnet.ckpt", StateDict(net.NamedParameters()));
  }
  const auto& val = Val();
  std::vector<SegMask> pred(val.size());
  ParallelFor(val.size(), workers_, [&](std::size_t i) {
    NoGradGuard no_grad;
    const Var probs = net.Forward(Var::Constant(val[i].image), Var());
    pred[i] = refine::ArgmaxMask(probs.value());
  });
  const double miou = CorpusMiou(pred, val, cfg_.num_classes);
  WriteCsv("stage3_val.csv", "split,miou", {"val," + Fixed(miou)});
  if (!store_.IsComplete(kStage3, hash_)) store_.MarkComplete(kStage3, hash_);
  Log("stage3: val mIoU " + Fixed(miou));
  return miou;
}

AblationResult Pipeline::Ablation() {
  RequireStage(kStage1, "ablate");
  const auto& train = Train();
  AblationResult r;
  r.cam = CorpusMiou(CamCrfMasks(), train, cfg_.num_classes);
  ComputeAmnCrfMasks({NoLcVariant(), MainVariant(cfg_)});
  r.cam_pcl = CorpusMiou(AmnCrfMasks(NoLcVariant()), train, cfg_.num_classes);
  r.cam_pcl_lc = CorpusMiou(AmnCrfMasks(MainVariant(cfg_)), train, cfg_.num_classes);
  r.csv = WriteCsv("ablation.csv", "method,crf,miou",
                   {"CAM,yes," + Fixed(r.cam), "CAM+PCL,yes," + Fixed(r.cam_pcl),
                    "CAM+PCL+LC,yes," + Fixed(r.cam_pcl_lc)});
  Log("ablate: CAM " + Fixed(r.cam) + ", CAM+PCL " + Fixed(r.cam_pcl) + ", CAM+PCL+LC " +
      Fixed(r.cam_pcl_lc));
  return r;
}

TableResult Pipeline::RunTable(const std::string& name,
                               const std::vector<AmnVariant>& variants) {
  const auto& train = Train();
  TableResult t;
  std::vector<std::string> rows;
  ComputeAmnCrfMasks(variants);
  for (const AmnVariant& v : variants) {
    const double miou = CorpusMiou(AmnCrfMasks(v), train, cfg_.num_classes);
    t.rows.push_back({v.name, miou});
    rows.push_back(v.name + "," + PlacementName(v.placements) + "," +
                   (v.placements.empty() ? std::string("none") : InputName(v.input)) + "," +
                   Fixed(miou));
    Log(name + ": " + v.name + " " + Fixed(miou));
  }
  t.csv = WriteCsv(name + ".csv", "variant,placement,encoding,miou", rows);
  return t;
}

TableResult Pipeline::LcPlacementAblation() {
  RequireStage(kStage1, "lc-ablate");
  std::vector<AmnVariant> variants;
  for (std::vector<int> p : std::vector<std::vector<int>>{
           {1}, {2}, {3}, {4}, {3, 4}, {2, 3, 4}, {2, 3}}) {
    variants.push_back(MakeVariant(p, amn::LcInput::kLabel));
  }
  return RunTable("lc_placement", variants);
}

TableResult Pipeline::LcEncodingAblation() {
  RequireStage(kStage1, "lc-ablate");
  return RunTable("lc_encoding",
                  {NoLcVariant(), MakeVariant(cfg_.lc_placements, amn::LcInput::kAllOnes),
                   MakeVariant(cfg_.lc_placements, amn::LcInput::kLabelNoise),
                   MakeVariant(cfg_.lc_placements, amn::LcInput::kLabel)});
}

namespace {

eval::ActivationStats MeanStats(const std::vector<ActivationMap>& maps,
                                const std::vector<Sample>& samples) {
  eval::ActivationStats mean;
  std::size_t count = 0;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    for (std::size_t k = 0; k < maps[i].channels(); ++k) {
      const auto st = eval::ComputeActivationStats(maps[i], k, samples[i].ground_truth,
                                                   SegLabelOf(maps[i].classes[k]));
      if (st.fg_pixels == 0) continue;
      mean.fg_mean += st.fg_mean;
      mean.fg_std += st.fg_std;
      mean.bg_mean += st.bg_mean;
      mean.gap += st.gap;
      ++count;
    }
  }
  if (count > 0) {
    const double n = static_cast<double>(count);
    mean.fg_mean /= n;
    mean.fg_std /= n;
    mean.bg_mean /= n;
    mean.gap /= n;
  }
  return mean;
}

}  // namespace

SweepResult Pipeline::ThresholdSweepExperiment() {
  RequireStage(kStage1, "sweep");
  const auto& train = Train();
  const auto amn_raw = AmnMaps(MainVariant(cfg_));
  std::vector<ActivationMap> amn_maps(train.size());
  std::vector<SegMask> gts(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    amn_maps[i] = amn::AmnForegroundMaps(amn_raw[i], train[i].labels, cfg_.epsilon);
    gts[i] = train[i].ground_truth;
  }
  const auto taus = eval::TauRange(cfg_.sweep_tau_min, cfg_.sweep_tau_max, cfg_.sweep_tau_step);
  SweepResult r;
  r.cam = eval::Sweep(Cams(), gts, taus, cfg_.num_classes, workers_);
  r.amn = eval::Sweep(amn_maps, gts, taus, cfg_.num_classes, workers_);
  r.cam_stats = MeanStats(Cams(), train);
  r.amn_stats = MeanStats(amn_maps, train);

  std::vector<std::string> rows;
  for (std::size_t t = 0; t < taus.size(); ++t) {
    rows.push_back(Fixed(taus[t]) + "," + Fixed(r.cam.miou_per_tau[t]) + "," +
                   Fixed(r.amn.miou_per_tau[t]));
  }
  r.csv = WriteCsv("sweep.csv", "tau,cam_miou,amn_miou", rows);
  auto stats_row = [](const std::string& name, const eval::ActivationStats& s) {
    return name + "," + Fixed(s.fg_mean) + "," + Fixed(s.fg_std) + "," + Fixed(s.bg_mean) +
           "," + Fixed(s.gap);
  };
  r.stats_csv = WriteCsv("activation_stats.csv", "method,fg_mean,fg_std,bg_mean,gap",
                         {stats_row("CAM", r.cam_stats), stats_row("AMN", r.amn_stats)});
  const eval::Series series[] = {{"CAM", taus, r.cam.miou_per_tau},
                                 {"AMN", taus, r.amn.miou_per_tau}};
  r.svg = store_.Dir("results") / "sweep.svg";
  WriteText(r.svg, eval::LineChartSvg("Pseudo-mask mIoU vs threshold", "threshold",
                                      "mIoU", series));
  Log("sweep: CAM spread " + Fixed(r.cam.Spread()) + " peak " + Fixed(r.cam.Peak()) +
      "; AMN spread " + Fixed(r.amn.Spread()) + " peak " + Fixed(r.amn.Peak()));
  return r;
}

HistogramResult Pipeline::ActivationHistogram() {
  RequireStage(kStage1, "hist");
  const auto& train = Train();
  const auto amn_raw = AmnMaps(MainVariant(cfg_));
  const auto& cams = Cams();
  std::vector<double> cam_fg, amn_fg;
  HistogramResult r;
  std::vector<std::string> tau_rows;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const ActivationMap amn_map =
        amn::AmnForegroundMaps(amn_raw[i], train[i].labels, cfg_.epsilon);
    const SegMask& gt = train[i].ground_truth;
    for (std::size_t k = 0; k < cams[i].channels(); ++k) {
      const std::uint8_t label = SegLabelOf(cams[i].classes[k]);
      const std::size_t c = cams[i].channels();
      for (std::size_t p = 0; p < gt.size(); ++p) {
        if (gt.labels[p] != label) continue;
        cam_fg.push_back(cams[i].values[p * c + k]);
        amn_fg.push_back(amn_map.values[p * c + k]);
      }
    }
    const auto cam_opt = eval::OptimalThreshold(cams[i], gt, cfg_.grid_step);
    const auto amn_opt = eval::OptimalThreshold(amn_map, gt, cfg_.grid_step);
    r.cam_tau_opt.push_back(cam_opt.tau);
    r.amn_tau_opt.push_back(amn_opt.tau);
    tau_rows.push_back(train[i].id + "," + Fixed(cam_opt.tau) + "," + Fixed(cam_opt.miou) +
                       "," + Fixed(amn_opt.tau) + "," + Fixed(amn_opt.miou));
  }
  r.cam_counts = eval::Histogram(cam_fg, cfg_.hist_bins);
  r.amn_counts = eval::Histogram(amn_fg, cfg_.hist_bins);
  std::vector<std::string> rows;
  std::vector<double> centers, cam_frac, amn_frac;
  for (int b = 0; b < cfg_.hist_bins; ++b) {
    const double lo = static_cast<double>(b) / cfg_.hist_bins;
    const double hi = static_cast<double>(b + 1) / cfg_.hist_bins;
    const std::size_t bi = static_cast<std::size_t>(b);
    rows.push_back(Fixed(lo) + "," + Fixed(hi) + "," + std::to_string(r.cam_counts[bi]) +
                   "," + std::to_string(r.amn_counts[bi]));
    centers.push_back(0.5 * (lo + hi));
    cam_frac.push_back(static_cast<double>(r.cam_counts[bi]) /
                       static_cast<double>(std::max<std::size_t>(cam_fg.size(), 1)));
    amn_frac.push_back(static_cast<double>(r.amn_counts[bi]) /
                       static_cast<double>(std::max<std::size_t>(amn_fg.size(), 1)));
  }
  r.csv = WriteCsv("fg_histogram.csv", "bin_lo,bin_hi,cam_count,amn_count", rows);
  r.tau_csv = WriteCsv("tau_opt.csv", "id,cam_tau_opt,cam_miou,amn_tau_opt,amn_miou",
                       tau_rows);
  const eval::Series series[] = {{"CAM", centers, cam_frac}, {"AMN", centers, amn_frac}};
  r.svg = store_.Dir("results") / "fg_histogram.svg";
  WriteText(r.svg, eval::LineChartSvg("Foreground activation distribution", "activation",
                                      "fraction of pixels", series));
  Log("hist: " + std::to_string(cam_fg.size()) + " foreground pixels");
  return r;
}

EvalResult Pipeline::Evaluate() {
  RequireStage(kStage1, "eval");
  const auto& train = Train();
  const auto& cams = Cams();
  EvalResult r;
  std::vector<SegMask> thresholded(train.size());
  double opt_sum = 0.0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    thresholded[i] = eval::ThresholdMask(cams[i], cfg_.tau_global);
    opt_sum += eval::OptimalThreshold(cams[i], train[i].ground_truth, cfg_.grid_step).miou;
  }
  r.cam_tau_global = CorpusMiou(thresholded, train, cfg_.num_classes);
  r.cam_tau_opt_mean = train.empty() ? 0.0 : opt_sum / static_cast<double>(train.size());
  r.stage1_crf = CorpusMiou(CamCrfMasks(), train, cfg_.num_classes);
  std::vector<std::string> rows{"cam_tau_global," + Fixed(r.cam_tau_global),
                                "cam_tau_opt_mean_image," + Fixed(r.cam_tau_opt_mean),
                                "stage1_cam_crf," + Fixed(r.stage1_crf)};
  if (store_.IsComplete(kStage2, hash_)) {
    r.stage2 = CorpusMiou(LoadMasks(store_.root() / "stage2/masks", train), train,
                          cfg_.num_classes);
    rows.push_back("stage2_pseudo_masks," + Fixed(r.stage2));
  }
  if (store_.IsComplete(kStage3, hash_)) {
    r.stage3_val = RunStage3();
    rows.push_back("stage3_val," + Fixed(r.stage3_val));
  }
  r.csv = WriteCsv("eval.csv", "metric,miou", rows);
  for (const std::string& row : rows) Log("eval: " + row);
  return r;
}

}  // namespace amnkit::pipeline
