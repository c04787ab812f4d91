#include "sig/data/blob.hpp"

#include "sig/common/bytes.hpp"
#include "sig/common/error.hpp"

namespace sig::data {

namespace {

[[noreturn]] void malformed(const std::string& source, const std::string& what) {
  throw_data_error("malformed-blob", source + ": " + what);
}

}  // namespace

std::vector<std::uint8_t> encode_blob(const Image& image) {
  std::vector<std::uint8_t> out;
  out.reserve(21 + image.data.size() * 4);
  bytes::put_string(out, "SIGT");
  bytes::put_u32(out, kBlobVersion);
  bytes::put_u8(out, kBlobDtypeF32);
  bytes::put_u32(out, 3);
  bytes::put_u32(out, static_cast<std::uint32_t>(image.height));
  bytes::put_u32(out, static_cast<std::uint32_t>(image.width));
  bytes::put_u32(out, static_cast<std::uint32_t>(image.channels));
  for (float v : image.data) bytes::put_f32(out, v);
  return out;
}

Image decode_blob(const std::vector<std::uint8_t>& data, const std::string& source) {
  bytes::Reader r(data.data(), data.size());
  std::string magic;
  if (!r.raw(4, magic) || magic != "SIGT") malformed(source, "bad magic");
  std::uint32_t version = 0, rank = 0;
  std::uint8_t dtype = 0;
  if (!r.u32(version) || version != kBlobVersion) malformed(source, "unsupported version");
  if (!r.u8(dtype) || dtype != kBlobDtypeF32) malformed(source, "unsupported dtype");
  if (!r.u32(rank) || rank != 3) malformed(source, "expected a rank-3 image tensor");
  std::uint32_t dims[3];
  for (auto& d : dims)
    if (!r.u32(d)) malformed(source, "truncated header");
  const std::uint64_t count = static_cast<std::uint64_t>(dims[0]) * dims[1] * dims[2];
  if (r.remaining() != count * 4) {
    malformed(source, "payload is " + std::to_string(r.remaining()) + " bytes, dims imply " + std::to_string(count * 4));
  }
  Image img(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]));
  for (auto& v : img.data) r.f32(v);
  return img;
}

void write_blob(const std::filesystem::path& path, const Image& image) { bytes::write_file(path, encode_blob(image)); }

Image read_blob(const std::filesystem::path& path) { return decode_blob(bytes::read_file(path), path.string()); }

}  // namespace sig::data
