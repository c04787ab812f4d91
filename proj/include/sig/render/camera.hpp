#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace sig::render {

/// Pinhole camera. The camera looks down its local -z axis with +x right and
/// +y up (OpenGL convention); camera_to_world maps camera to world space.
struct CameraPose {
  Eigen::Matrix4d camera_to_world = Eigen::Matrix4d::Identity();
  double fov_y = 0.69813170079773179;  // 40 degrees
  int height = 1;
  int width = 1;

  Eigen::Vector3d position() const { return camera_to_world.block<3, 1>(0, 3); }
  Eigen::Matrix3d rotation() const { return camera_to_world.block<3, 3>(0, 0); }
};

/// Throws sig::Error(kConfig) for a non-orthonormal rotation (tolerance
/// 1e-6), empty image or a field of view outside (0, pi).
void validate(const CameraPose& pose);

Eigen::Matrix4d look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up);

/// Same pose and field of view at another image size.
CameraPose with_resolution(const CameraPose& pose, int height, int width);

/// One ray per pixel, row-major.
struct RayBatch {
  std::vector<Eigen::Vector3d> origins;
  std::vector<Eigen::Vector3d> directions;  // unit length
  std::vector<double> near;
  std::vector<double> far;

  std::size_t size() const { return origins.size(); }
};

/// Rays through pixel centres. Pixel (r, c) maps to the camera-space
/// direction ((2c + 1 - W) / H * tan(fov/2), (H - 2r - 1) / H * tan(fov/2), -1).
RayBatch generate_rays(const CameraPose& pose, double near, double far);

/// Ray interval covering a sphere of `bound_radius` around the origin.
struct RayInterval {
  double near;
  double far;
};
RayInterval interval_for_bounds(const CameraPose& pose, double bound_radius);

/// Uniform double in [0, 1) from a 64-bit generator using the top 53 bits,
/// so draws match across standard libraries.
template <typename Gen>
double uniform01(Gen& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

struct RaySamples {
  std::vector<double> t;       // sample positions along the ray
  std::vector<double> deltas;  // bin widths; they partition [near, far]
};

/// n equal bins over [near, far]; midpoints when `gen` is null, otherwise
/// one uniform draw inside each bin.
template <typename Gen>
RaySamples sample_along(double near, double far, int n, Gen* gen);

RaySamples sample_along(double near, double far, int n);

}  // namespace sig::render
