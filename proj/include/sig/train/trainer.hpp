#pragma once

#include <functional>
#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "sig/data/dataset.hpp"
#include "sig/grad/param_store.hpp"
#include "sig/train/config.hpp"
#include "sig/train/model.hpp"

namespace sig::train {

struct EpochLog {
  int epoch = 0;
  double lr_scale = 1.0;
  std::map<std::string, double> losses;  // epoch means of the active terms and "total"
};

struct PhaseLog {
  std::string name;
  std::vector<std::string> active_terms;
  std::vector<std::string> optimized_groups;
  std::vector<EpochLog> epochs;
};

struct SceneMetrics {
  int scene = 0;  // global scene index
  double psnr = 0;
  double ssim = 0;
  int test_views = 0;
};

/// Deterministic training summary. Wall-clock measurements live in
/// TrainTiming so that reports compare byte for byte across runs.
struct TrainReport {
  int stage = 1;
  Variant variant = Variant::kOurs;
  int scene_offset = 0;
  int scenes = 0;
  std::vector<PhaseLog> phases;
  std::vector<SceneMetrics> metrics;
  double mean_psnr = 0;
  double mean_ssim = 0;
  std::int64_t trainable_values_per_scene = 0;
  double stored_megabytes_per_scene = 0;  // mu
  double total_megabytes = 0;             // everything this stage stores

  nlohmann::json to_json() const;
};

struct TrainTiming {
  double total_seconds = 0;
  std::map<std::string, double> phase_seconds;
  double per_scene_minutes = 0;  // total / scenes

  nlohmann::json to_json() const;
};

using ProgressFn = std::function<void(const std::string&)>;

template <typename T>
struct StageResult {
  ParamStore<T> params;
  TrainReport report;
  TrainTiming timing;
};

/// Stage 1 on scenes [0, N1) of `dataset`: warm-up epochs on the latent loss
/// with the autoencoder frozen, then joint epochs on all three losses.
template <typename T>
StageResult<T> train_stage1(const data::SceneDataset& dataset, const TrainConfig& config,
                            const ProgressFn& progress = nullptr);

/// Stage 2 on scenes [N1, N1 + N2) of `dataset`, starting from stage-1
/// parameters: Latent Supervision, then RGB Alignment (decoder unfrozen).
/// The encoder is never updated.
template <typename T>
StageResult<T> train_stage2(const data::SceneDataset& dataset, ParamStore<T> stage1, const TrainConfig& config,
                            const ProgressFn& progress = nullptr);

/// PSNR / SSIM of each scene's test views; `first_scene` is the global index
/// of dataset scene 0.
template <typename T>
std::vector<SceneMetrics> evaluate(const ParamStore<T>& params, const ModelSpec& spec, const data::SceneDataset& dataset,
                                   int first_scene);

/// Stage 1 followed by stage 2 for a variant; returns both reports.
struct VariantResult {
  Variant variant = Variant::kOurs;
  TrainReport stage1;
  TrainReport stage2;
  TrainTiming timing1;
  TrainTiming timing2;
};
VariantResult train_variant(const data::SceneDataset& dataset, const TrainConfig& config,
                            const ProgressFn& progress = nullptr);

/// Checkpoint metadata written by the stages.
nlohmann::json checkpoint_meta(const TrainConfig& config, const data::SceneDataset& dataset, int stage);

}  // namespace sig::train
