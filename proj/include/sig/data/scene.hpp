#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "sig/common/image.hpp"
#include "sig/render/camera.hpp"

namespace sig::data {

enum class PrimitiveKind { kSphere, kBox };

/// Solid primitive. For spheres size.x() is the radius; for boxes size holds
/// the half extents.
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::kSphere;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d size = Eigen::Vector3d::Ones();
  Eigen::Vector3d albedo = Eigen::Vector3d::Constant(0.5);
};

struct SceneSpec {
  std::uint64_t seed = 0;
  std::vector<Primitive> primitives;
};

/// Radius of the smallest origin-centred sphere holding every primitive.
double bounding_radius(const SceneSpec& spec);

/// Toy-vehicle family parameters, drawn once per dataset: body proportions,
/// cabin placement and wheel size. Scenes jitter these.
struct VehicleFamily {
  double body_length = 0.70;  // half extent along y
  double body_width = 0.36;   // half extent along x
  double body_height = 0.16;  // half extent along z
  double cabin_length = 0.36;
  double cabin_height = 0.14;
  double cabin_offset = -0.10;  // along y, relative to the body centre
  double wheel_radius = 0.17;
};

VehicleFamily draw_family(std::uint64_t family_seed);

/// One vehicle: body box, cabin box and four sphere wheels, with per-scene
/// size and colour jitter. Every primitive stays inside [-1, 1]^3.
SceneSpec draw_vehicle(const VehicleFamily& family, std::uint64_t scene_seed);

/// Fixed directional light (unit length, no x component so that scenes
/// mirrored in x shade identically).
Eigen::Vector3d light_direction();
inline constexpr double kAmbient = 0.35;
inline constexpr double kDiffuse = 0.65;

/// Analytic ray tracer: nearest primitive hit per pixel centre, shaded as
/// albedo * (kAmbient + kDiffuse * max(0, n . l)); white where nothing is
/// hit.
Image render_ground_truth(const SceneSpec& spec, const render::CameraPose& pose);

}  // namespace sig::data
