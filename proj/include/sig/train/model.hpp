#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sig/ae/autoencoder.hpp"
#include "sig/common/image.hpp"
#include "sig/grad/param_store.hpp"
#include "sig/grad/tape.hpp"
#include "sig/render/camera.hpp"
#include "sig/render/head.hpp"
#include "sig/train/config.hpp"

namespace sig::train {

using grad::ParamStore;
using grad::Tape;
using grad::Var;

/// Everything needed to build the per-view objective, derived from a
/// TrainConfig and the dataset's bounding sphere.
struct ModelSpec {
  int resolution = 16;
  int f_mic = 4;
  int f_mac = 8;
  int basis_count = 8;
  bool latent = true;
  ae::AutoencoderConfig autoencoder;
  render::HeadLayout head;
  int samples = 32;
  bool stratified = true;
  double bound_radius = 1.0;

  static ModelSpec from_config(const TrainConfig& config, double bound_radius);
  int features() const { return f_mic + f_mac; }
  int colors() const { return head.colors; }
  /// Render resolution for a ground-truth image side.
  int render_size(int image_size) const { return latent ? image_size / autoencoder.downsample() : image_size; }
};

/// Shared groups: basis_planes (if f_mac > 0), renderer_mlp, and in latent
/// mode encoder and decoder.
template <typename T>
void init_shared_groups(ParamStore<T>& params, const ModelSpec& spec, std::mt19937_64& gen);

/// Per-scene groups: micro_planes[scene] (if f_mic > 0) and
/// basis_weights[scene] (if f_mac > 0).
template <typename T>
void init_scene_groups(ParamStore<T>& params, const ModelSpec& spec, int scene, std::mt19937_64& gen);

/// Composed Tri-Plane [3, K, K, F] of a scene: micro features followed by
/// the coefficient-weighted basis.
template <typename T>
Var<T> scene_triplane(Tape<T>& tape, const ModelSpec& spec, int scene);

/// Constant background for the renderer: white in RGB mode; in latent mode
/// the channel means of the encoded all-white image of the given size.
template <typename T>
std::vector<T> background(const ModelSpec& spec, const ParamStore<T>& params, int image_size);

/// Mean squared errors over all elements. Shapes must match.
template <typename T>
Var<T> loss_latent(const Var<T>& z, const Var<T>& z_rendered);
template <typename T>
Var<T> loss_rgb(const Var<T>& x, const Var<T>& x_decoded);
template <typename T>
Var<T> loss_ae(const Var<T>& x, const Var<T>& x_reconstructed);

struct TermWeights {
  double latent = 0;
  double rgb = 0;
  double ae = 0;
};

/// One (scene, view) training item.
struct TrainItem {
  int scene = 0;                   // parameter-group index
  render::CameraPose pose;         // at ground-truth resolution
  const Image* image = nullptr;    // ground truth RGB
  const Image* latent = nullptr;   // cached E(x); used when the encoder is frozen
  std::uint64_t sample_seed = 0;   // stratified jitter
};

/// Values of the individual terms of one item (zero for skipped terms).
struct TermValues {
  double latent = 0;
  double rgb = 0;
  double ae = 0;
  double total = 0;
};

/// Weighted per-view objective. In latent mode:
///   w.latent * |E(x) - R(T, p)|^2 + w.rgb * |x - D(R(T, p))|^2 + w.ae * |x - D(E(x))|^2.
/// In RGB mode the renderer outputs RGB and only w.rgb * |x - R(T, p)|^2 is
/// used. Terms with zero weight are not built.
template <typename T>
Var<T> item_objective(Tape<T>& tape, const ModelSpec& spec, const TrainItem& item, const TermWeights& weights,
                      std::span<const T> background, TermValues* values = nullptr);

/// Mean of item_objective over a batch.
template <typename T>
Var<T> stage1_objective(Tape<T>& tape, const ModelSpec& spec, std::span<const TrainItem> batch,
                        const TermWeights& weights, std::span<const T> background);

/// Plain render of a scene at a pose; decoded to RGB in latent mode.
/// Deterministic (midpoint samples).
template <typename T>
Image render_view(const ParamStore<T>& params, const ModelSpec& spec, int scene, const render::CameraPose& pose,
                  std::span<const T> background);

}  // namespace sig::train
