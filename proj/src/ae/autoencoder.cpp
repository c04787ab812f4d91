#include "sig/ae/autoencoder.hpp"

#include <cmath>

#include "sig/ae/conv.hpp"
#include "sig/grad/ops.hpp"
#include "sig/render/camera.hpp"

namespace sig::ae {

using grad::Shape;
using grad::Tape;

namespace {

constexpr int kRgbChannels = 3;

std::int64_t conv_size(int cin, int cout) { return static_cast<std::int64_t>(cout) * 9 * cin + cout; }

// Pulls the next conv layer out of a flat parameter tensor.
template <typename T>
Var<T> conv_layer(const Var<T>& x, const Var<T>& params, std::int64_t& offset, int cout, int stride) {
  const std::int64_t cin = x.shape().at(2);
  const Var<T> w = grad::slice(params, offset, Shape{cout, 3, 3, cin});
  offset += static_cast<std::int64_t>(cout) * 9 * cin;
  const Var<T> b = grad::slice(params, offset, Shape{cout});
  offset += cout;
  return conv3x3(x, w, b, stride);
}

}  // namespace

int AutoencoderConfig::downsample() const {
  int d = 1;
  for (const auto& s : encoder) d *= s.factor;
  return d;
}

int AutoencoderConfig::latent_channels() const { return encoder.empty() ? 0 : encoder.back().channels; }

void AutoencoderConfig::validate() const {
  if (encoder.empty() || decoder.empty()) throw_config_error("autoencoder: encoder and decoder need at least one stage");
  int up = 1;
  for (const auto& s : encoder)
    if (s.channels < 1 || s.factor < 1) throw_config_error("autoencoder: encoder stage widths and strides must be positive");
  for (const auto& s : decoder) {
    if (s.channels < 1 || s.factor < 1) throw_config_error("autoencoder: decoder stage widths and factors must be positive");
    up *= s.factor;
  }
  if (up != downsample()) {
    throw_config_error("autoencoder: decoder upsamples by " + std::to_string(up) + " but encoder downsamples by " +
                       std::to_string(downsample()));
  }
}

std::int64_t encoder_param_count(const AutoencoderConfig& config) {
  std::int64_t n = 0;
  int cin = kRgbChannels;
  for (const auto& s : config.encoder) {
    n += conv_size(cin, s.channels);
    cin = s.channels;
  }
  return n;
}

std::int64_t decoder_param_count(const AutoencoderConfig& config) {
  std::int64_t n = 0;
  int cin = config.latent_channels();
  for (const auto& s : config.decoder) {
    n += conv_size(cin, s.channels);
    cin = s.channels;
  }
  return n + conv_size(cin, kRgbChannels);
}

template <typename T>
AutoencoderParams<T> init_autoencoder(const AutoencoderConfig& config, std::mt19937_64& gen) {
  config.validate();
  auto fill_layers = [&](int cin, const std::vector<int>& widths) {
    std::vector<T> p;
    for (int cout : widths) {
      const double bound = 1.0 / std::sqrt(9.0 * cin);
      for (std::int64_t i = 0; i < conv_size(cin, cout); ++i)
        p.push_back(static_cast<T>((2.0 * render::uniform01(gen) - 1.0) * bound));
      cin = cout;
    }
    return p;
  };
  std::vector<int> enc, dec;
  for (const auto& s : config.encoder) enc.push_back(s.channels);
  for (const auto& s : config.decoder) dec.push_back(s.channels);
  dec.push_back(kRgbChannels);
  AutoencoderParams<T> p;
  p.encoder = fill_layers(kRgbChannels, enc);
  p.decoder = fill_layers(config.latent_channels(), dec);
  // Output bias starts at sigmoid^-1(0.88): decoded images begin near the
  // white background instead of reaching it by saturating the sigmoid,
  // which stalls training on mostly-background images.
  for (int c = 0; c < kRgbChannels; ++c) p.decoder[p.decoder.size() - kRgbChannels + c] = T(kDecoderOutputBias);
  return p;
}

template <typename T>
Var<T> encode_var(const Var<T>& image, const Var<T>& encoder, const AutoencoderConfig& config) {
  const auto& s = image.shape();
  if (s.size() != 3 || s[2] != kRgbChannels) throw_shape_error("encode: expected [H, W, 3], got " + grad::shape_string(s));
  const int d = config.downsample();
  if (s[0] % d != 0 || s[1] % d != 0) {
    throw_shape_error("encode: image " + std::to_string(s[0]) + "x" + std::to_string(s[1]) +
                      " not divisible by downsample factor " + std::to_string(d));
  }
  if (encoder.size() != encoder_param_count(config)) throw_shape_error("encode: encoder parameter count mismatch");
  std::int64_t offset = 0;
  Var<T> x = image;
  for (std::size_t i = 0; i < config.encoder.size(); ++i) {
    x = conv_layer(x, encoder, offset, config.encoder[i].channels, config.encoder[i].factor);
    if (i + 1 < config.encoder.size()) x = grad::activate(x, grad::Activation::kSilu);
  }
  return x;
}

template <typename T>
Var<T> decode_var(const Var<T>& latent, const Var<T>& decoder, const AutoencoderConfig& config) {
  const auto& s = latent.shape();
  if (s.size() != 3 || s[2] != config.latent_channels()) {
    throw_shape_error("decode: expected [h, w, " + std::to_string(config.latent_channels()) + "], got " +
                      grad::shape_string(s));
  }
  if (decoder.size() != decoder_param_count(config)) throw_shape_error("decode: decoder parameter count mismatch");
  std::int64_t offset = 0;
  Var<T> x = latent;
  for (const auto& stage : config.decoder) {
    x = upsample_nearest(x, stage.factor);
    x = grad::activate(conv_layer(x, decoder, offset, stage.channels, 1), grad::Activation::kSilu);
  }
  x = conv_layer(x, decoder, offset, kRgbChannels, 1);
  return grad::activate(x, grad::Activation::kSigmoid);
}

template <typename T>
Var<T> image_constant(Tape<T>& tape, const Image& image) {
  return tape.constant(std::vector<T>(image.data.begin(), image.data.end()), Shape{image.height, image.width, image.channels});
}

template <typename T>
Image to_image(const Var<T>& value) {
  const auto& s = value.shape();
  if (s.size() != 3) throw_shape_error("to_image: expected [H, W, C], got " + grad::shape_string(s));
  Image out(static_cast<int>(s[0]), static_cast<int>(s[1]), static_cast<int>(s[2]));
  const auto& v = value.value();
  for (std::size_t i = 0; i < v.size(); ++i) out.data[i] = static_cast<float>(v[i]);
  return out;
}

template <typename T>
Image encode(const Image& image, const AutoencoderParams<T>& params, const AutoencoderConfig& config) {
  Tape<T> tape;
  const Var<T> enc = tape.constant(params.encoder, Shape{static_cast<std::int64_t>(params.encoder.size())});
  return to_image(encode_var(image_constant(tape, image), enc, config));
}

template <typename T>
Image decode(const Image& latent, const AutoencoderParams<T>& params, const AutoencoderConfig& config) {
  Tape<T> tape;
  const Var<T> dec = tape.constant(params.decoder, Shape{static_cast<std::int64_t>(params.decoder.size())});
  return to_image(decode_var(image_constant(tape, latent), dec, config));
}

template <typename T>
Image reconstruct(const Image& image, const AutoencoderParams<T>& params, const AutoencoderConfig& config) {
  return decode(encode(image, params, config), params, config);
}

#define SIG_INSTANTIATE_AE(T)                                                                                    \
  template AutoencoderParams<T> init_autoencoder<T>(const AutoencoderConfig&, std::mt19937_64&);                 \
  template Var<T> encode_var<T>(const Var<T>&, const Var<T>&, const AutoencoderConfig&);                         \
  template Var<T> decode_var<T>(const Var<T>&, const Var<T>&, const AutoencoderConfig&);                         \
  template Image encode<T>(const Image&, const AutoencoderParams<T>&, const AutoencoderConfig&);                 \
  template Image decode<T>(const Image&, const AutoencoderParams<T>&, const AutoencoderConfig&);                 \
  template Image reconstruct<T>(const Image&, const AutoencoderParams<T>&, const AutoencoderConfig&);            \
  template Var<T> image_constant<T>(Tape<T>&, const Image&);                                                     \
  template Image to_image<T>(const Var<T>&);

SIG_INSTANTIATE_AE(float)
SIG_INSTANTIATE_AE(double)

}  // namespace sig::ae
