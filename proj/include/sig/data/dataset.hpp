#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sig/common/image.hpp"
#include "sig/data/scene.hpp"
#include "sig/render/camera.hpp"

namespace sig::data {

enum class CameraMode { kHemisphere, kFrontFacing };

CameraMode parse_camera_mode(std::string_view text);
std::string to_string(CameraMode mode);

struct GenerateOptions {
  int scenes = 4;
  int views = 20;
  int size = 64;
  std::uint64_t seed = 0;
  CameraMode mode = CameraMode::kHemisphere;
  double radius = 3.2;                 // camera distance from the origin
  double fov_y = 0.69813170079773179;  // 40 degrees
};

/// V poses at distance `radius` looking at the origin, z up. Hemisphere mode
/// spreads cameras over a Fibonacci lattice with z >= 0; front-facing mode
/// keeps them inside a 35 degree cone around +y.
std::vector<render::CameraPose> camera_poses(int views, CameraMode mode, double radius, double fov_y, int size);

struct ViewSplit {
  std::vector<int> train;  // ascending
  std::vector<int> test;   // ascending
};

/// floor(train_fraction * V) training views chosen by a seeded shuffle; the
/// rest are test views. Throws kConfig when V < 2.
ViewSplit split_views(int views, double train_fraction, std::uint64_t seed);

struct ViewRecord {
  render::CameraPose pose;
  std::string blob;  // relative to the manifest
  bool train = true;
};

struct SceneRecord {
  SceneSpec spec;
  std::vector<ViewRecord> views;
  std::vector<Image> images;  // one per view
};

struct SceneDataset {
  GenerateOptions options;
  double bound_radius = 1.0;  // scene bounding sphere plus 10% margin
  ViewSplit split;
  std::vector<SceneRecord> scenes;

  int view_count() const { return options.views; }
  /// Scenes [begin, end) as a dataset of their own (same poses and split).
  SceneDataset subset(int begin, int end) const;
};

SceneDataset generate_dataset(const GenerateOptions& options);

/// manifest.json plus blobs/scene_{i}/view_{j}.sigt under `dir`.
void save_dataset(const SceneDataset& dataset, const std::filesystem::path& dir);
std::string manifest_json(const SceneDataset& dataset);

/// Throws sig::Error(kData) with category "missing-file", "malformed-manifest"
/// or "malformed-blob".
SceneDataset load_dataset(const std::filesystem::path& dir);

}  // namespace sig::data
