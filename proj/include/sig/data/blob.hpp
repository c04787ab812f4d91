#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sig/common/image.hpp"

namespace sig::data {

/// Tensor blob: "SIGT", u32 version (1), u8 dtype (0 = f32), u32 rank,
/// rank x u32 dims, then the row-major little-endian payload. Images are
/// stored with rank 3 and dims [H, W, C].
inline constexpr std::uint32_t kBlobVersion = 1;
inline constexpr std::uint8_t kBlobDtypeF32 = 0;

std::vector<std::uint8_t> encode_blob(const Image& image);

/// Throws sig::Error(kData, "malformed-blob") naming `source` on a bad
/// magic, version, dtype, rank or payload length.
Image decode_blob(const std::vector<std::uint8_t>& bytes, const std::string& source);

void write_blob(const std::filesystem::path& path, const Image& image);
Image read_blob(const std::filesystem::path& path);

}  // namespace sig::data
