#pragma once

#include <cstdint>
#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "sig/ae/autoencoder.hpp"
#include "sig/common/variant.hpp"
#include "sig/grad/schedule.hpp"
#include "sig/triplane/trainable_count.hpp"

namespace sig::train {

/// Parameter roles that learning rates are keyed by.
inline constexpr const char* kRoleMicro = "micro_planes";
inline constexpr const char* kRoleRenderer = "renderer";
inline constexpr const char* kRoleCoefficients = "coefficients";
inline constexpr const char* kRoleBasis = "basis_planes";
inline constexpr const char* kRoleEncoder = "encoder";
inline constexpr const char* kRoleDecoder = "decoder";

struct PhaseConfig {
  int epochs = 0;
  int batch_size = 32;
  std::map<std::string, double> lr;  // by role
  grad::ScheduleKind scheduler = grad::ScheduleKind::kMultistep;
  double decay_factor = 1.0;
  std::vector<int> milestones;

  /// Learning-rate multiplier for an epoch (the schedule with base 1).
  double lr_scale(int epoch) const;
};

struct LossWeights {
  double latent = 1.0;
  double rgb = 1.0;
  double ae = 0.1;
};

struct RenderConfig {
  int samples = 64;
  int hidden = 64;
  bool stratified = true;
};

enum class Precision { kF32, kF64 };

/// Defaults are the published stage-1 / stage-2 hyperparameters; desk-scale
/// presets override them from a JSON file.
struct TrainConfig {
  std::uint64_t seed = 0;
  Variant variant = Variant::kOurs;
  Precision precision = Precision::kF32;
  int n1 = 500;
  int n2 = 1500;
  int resolution = 64;
  int f_mic = 10;
  int f_mac = 22;
  int basis_count = 50;
  RenderConfig render;
  ae::AutoencoderConfig autoencoder;

  LossWeights stage1_loss;
  // Optional autoencoder-only epochs (reconstruction loss) on the stage-1
  // training views before warm-up, standing in for a pretrained
  // autoencoder. Zero by default.
  PhaseConfig ae_pretraining;
  PhaseConfig warmup;    // "pretraining" epochs: autoencoder frozen, latent loss only
  PhaseConfig training;  // joint epochs

  double stage2_lambda_latent = 1.0;
  double stage2_lambda_rgb = 1.0;
  PhaseConfig latent_supervision;
  PhaseConfig rgb_alignment;

  int features() const { return f_mic + f_mac; }
  bool latent_space() const { return !is_rgb_variant(variant); }
  triplane::CountConfig count_config() const { return {resolution, f_mic, f_mac, basis_count, n1}; }
};

TrainConfig default_config();

/// Throws kConfig on invalid values, including a feature split that
/// contradicts the variant (e.g. ours-macro with f_mic > 0).
void validate(const TrainConfig& config);

/// Copy of `config` switched to `variant` with the feature split the
/// variant implies (total feature count preserved).
TrainConfig project_variant(const TrainConfig& config, Variant variant);

nlohmann::json to_json(const TrainConfig& config);

/// Overlays `j` on `base`. Unknown keys are rejected with kConfig so typos
/// in a config file are not silently ignored.
TrainConfig config_from_json(const nlohmann::json& j, const TrainConfig& base = default_config());

TrainConfig load_config(const std::string& path, const TrainConfig& base = default_config());

}  // namespace sig::train
