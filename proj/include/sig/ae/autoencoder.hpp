#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "sig/common/image.hpp"
#include "sig/grad/tape.hpp"

namespace sig::ae {

using grad::Var;

/// One 3x3 convolution stage. In the encoder `factor` is the stride; in the
/// decoder it is a nearest-neighbour upsampling applied before the conv.
struct ConvStage {
  int channels = 0;
  int factor = 1;
};

/// Encoder: conv stages with SiLU between them; the last stage's width is
/// the latent channel count and has no activation.
/// Decoder: upsample + conv + SiLU stages, then a 3x3 conv to RGB and a
/// sigmoid.
struct AutoencoderConfig {
  std::vector<ConvStage> encoder{{32, 2}, {64, 2}, {4, 1}};
  std::vector<ConvStage> decoder{{64, 1}, {32, 2}, {16, 2}};

  int downsample() const;       // product of encoder strides
  int latent_channels() const;  // width of the last encoder stage
  /// Throws kConfig when a stage is empty, widths are not positive, or the
  /// decoder's upsampling does not undo the encoder's downsampling.
  void validate() const;
};

/// Parameter counts of the flat "encoder" and "decoder" groups. Each conv
/// layer stores weight [Cout, 3, 3, Cin] followed by bias [Cout].
std::int64_t encoder_param_count(const AutoencoderConfig& config);
std::int64_t decoder_param_count(const AutoencoderConfig& config);

template <typename T>
struct AutoencoderParams {
  std::vector<T> encoder;
  std::vector<T> decoder;
};

/// Initial bias of the decoder's RGB output layer (sigmoid of it is 0.88).
inline constexpr double kDecoderOutputBias = 2.0;

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases, except
/// the decoder's output bias, which starts at kDecoderOutputBias.
template <typename T>
AutoencoderParams<T> init_autoencoder(const AutoencoderConfig& config, std::mt19937_64& gen);

/// image [H, W, 3] -> latent [H/d, W/d, C_lat].
template <typename T>
Var<T> encode_var(const Var<T>& image, const Var<T>& encoder, const AutoencoderConfig& config);

/// latent [h, w, C_lat] -> image [h*d, w*d, 3] in [0, 1].
template <typename T>
Var<T> decode_var(const Var<T>& latent, const Var<T>& decoder, const AutoencoderConfig& config);

/// Plain forward passes on images (latents use the Image container with
/// C_lat channels).
template <typename T>
Image encode(const Image& image, const AutoencoderParams<T>& params, const AutoencoderConfig& config);
template <typename T>
Image decode(const Image& latent, const AutoencoderParams<T>& params, const AutoencoderConfig& config);
template <typename T>
Image reconstruct(const Image& image, const AutoencoderParams<T>& params, const AutoencoderConfig& config);

/// Tape leaf holding an image's pixels, shaped [H, W, C].
template <typename T>
Var<T> image_constant(grad::Tape<T>& tape, const Image& image);

/// Tape value [H, W, C] copied back into an Image.
template <typename T>
Image to_image(const Var<T>& value);

}  // namespace sig::ae
