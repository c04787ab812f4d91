#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"
#include "sig/grad/param_store.hpp"

namespace sig::grad {

/// Checkpoint layout (all integers little-endian):
///
///   offset 0   8 bytes   magic "SIGCKPT1"
///   offset 8   u64       header length L in bytes
///   offset 16  L bytes   UTF-8 JSON header
///   offset 16+L          payload: every group's values, concatenated
///
/// The header is {"dtype": "f32"|"f64", "groups": [...], "meta": {...}} with
/// one {"name", "shape", "offset", "nbytes"} entry per group in name order;
/// offsets are relative to the payload start. See docs/formats.md.
struct CheckpointInfo {
  std::string dtype;
  nlohmann::json meta;
};

template <typename T>
std::vector<std::uint8_t> encode_checkpoint(const ParamStore<T>& params, const nlohmann::json& meta = nlohmann::json::object());

/// Decodes into T, converting from the stored dtype when they differ.
/// Throws sig::Error(kData) on a bad magic, header or truncated payload.
template <typename T>
ParamStore<T> decode_checkpoint(const std::vector<std::uint8_t>& bytes, CheckpointInfo* info = nullptr,
                                const std::string& source = "<memory>");

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ParamStore<T>& params,
                     const nlohmann::json& meta = nlohmann::json::object());

/// Missing file raises category "missing-checkpoint".
template <typename T>
ParamStore<T> load_checkpoint(const std::filesystem::path& path, CheckpointInfo* info = nullptr);

}  // namespace sig::grad
