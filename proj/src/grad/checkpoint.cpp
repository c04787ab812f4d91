#include "sig/grad/checkpoint.hpp"

#include <type_traits>

#include "sig/common/bytes.hpp"

namespace sig::grad {

namespace {

constexpr std::string_view kMagic = "SIGCKPT1";

template <typename T>
constexpr const char* dtype_name() {
  return std::is_same_v<T, float> ? "f32" : "f64";
}

[[noreturn]] void malformed(const std::string& source, const std::string& what) {
  throw_data_error("malformed-checkpoint", source + ": " + what);
}

}  // namespace

template <typename T>
std::vector<std::uint8_t> encode_checkpoint(const ParamStore<T>& params, const nlohmann::json& meta) {
  nlohmann::json header;
  header["dtype"] = dtype_name<T>();
  header["meta"] = meta;
  header["groups"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, g] : params) {
    const std::uint64_t nbytes = g.values.size() * sizeof(T);
    header["groups"].push_back({{"name", name}, {"shape", g.shape}, {"offset", offset}, {"nbytes", nbytes}});
    offset += nbytes;
  }
  const std::string text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(16 + text.size() + offset);
  bytes::put_string(out, kMagic);
  bytes::put_u64(out, text.size());
  bytes::put_string(out, text);
  for (const auto& [_, g] : params) {
    for (T v : g.values) {
      if constexpr (std::is_same_v<T, float>)
        bytes::put_f32(out, v);
      else
        bytes::put_f64(out, v);
    }
  }
  return out;
}

template <typename T>
ParamStore<T> decode_checkpoint(const std::vector<std::uint8_t>& data, CheckpointInfo* info, const std::string& source) {
  bytes::Reader r(data.data(), data.size());
  std::string magic;
  if (!r.raw(kMagic.size(), magic) || magic != kMagic) malformed(source, "bad magic");
  std::uint64_t header_len = 0;
  if (!r.u64(header_len) || header_len > r.remaining()) malformed(source, "truncated header");
  std::string text;
  r.raw(static_cast<std::size_t>(header_len), text);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    malformed(source, std::string("header is not valid JSON: ") + e.what());
  }
  const std::string dtype = header.value("dtype", "");
  if (dtype != "f32" && dtype != "f64") malformed(source, "unsupported dtype '" + dtype + "'");
  const std::size_t width = dtype == "f32" ? 4 : 8;
  const std::size_t payload_start = r.position();
  const std::size_t payload_size = r.remaining();

  ParamStore<T> params;
  try {
    for (const auto& g : header.at("groups")) {
      const auto name = g.at("name").get<std::string>();
      const auto shape = g.at("shape").get<Shape>();
      const auto offset = g.at("offset").get<std::uint64_t>();
      const auto nbytes = g.at("nbytes").get<std::uint64_t>();
      if (nbytes != static_cast<std::uint64_t>(numel(shape)) * width) malformed(source, "group '" + name + "' size mismatch");
      if (offset + nbytes > payload_size) malformed(source, "truncated payload for group '" + name + "'");
      bytes::Reader pr(data.data() + payload_start + offset, static_cast<std::size_t>(nbytes));
      std::vector<T> values(static_cast<std::size_t>(numel(shape)));
      for (auto& v : values) {
        if (width == 4) {
          float f = 0;
          pr.f32(f);
          v = static_cast<T>(f);
        } else {
          double d = 0;
          pr.f64(d);
          v = static_cast<T>(d);
        }
      }
      params.add(name, shape, std::move(values));
    }
  } catch (const nlohmann::json::exception& e) {
    malformed(source, std::string("bad group entry: ") + e.what());
  }
  if (info != nullptr) {
    info->dtype = dtype;
    info->meta = header.value("meta", nlohmann::json::object());
  }
  return params;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ParamStore<T>& params, const nlohmann::json& meta) {
  bytes::write_file(path, encode_checkpoint(params, meta));
}

template <typename T>
ParamStore<T> load_checkpoint(const std::filesystem::path& path, CheckpointInfo* info) {
  if (!std::filesystem::is_regular_file(path)) throw_data_error("missing-checkpoint", "no checkpoint at " + path.string());
  return decode_checkpoint<T>(bytes::read_file(path), info, path.string());
}

#define SIG_INSTANTIATE_CKPT(T)                                                                              \
  template std::vector<std::uint8_t> encode_checkpoint<T>(const ParamStore<T>&, const nlohmann::json&);      \
  template ParamStore<T> decode_checkpoint<T>(const std::vector<std::uint8_t>&, CheckpointInfo*,             \
                                              const std::string&);                                           \
  template void save_checkpoint<T>(const std::filesystem::path&, const ParamStore<T>&, const nlohmann::json&); \
  template ParamStore<T> load_checkpoint<T>(const std::filesystem::path&, CheckpointInfo*);

SIG_INSTANTIATE_CKPT(float)
SIG_INSTANTIATE_CKPT(double)

}  // namespace sig::grad
