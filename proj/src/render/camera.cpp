#include "sig/render/camera.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <numbers>
#include <random>

#include "sig/common/error.hpp"

namespace sig::render {

void validate(const CameraPose& pose) {
  if (pose.height < 1 || pose.width < 1) throw_config_error("camera image size must be at least 1x1");
  if (!(pose.fov_y > 0.0 && pose.fov_y < std::numbers::pi)) throw_config_error("camera field of view must lie in (0, pi)");
  const Eigen::Matrix3d r = pose.rotation();
  if ((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6) {
    throw_config_error("camera rotation is not orthonormal");
  }
  if (!pose.camera_to_world.allFinite()) throw_config_error("camera pose is not finite");
}

Eigen::Matrix4d look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  Eigen::Vector3d right = forward.cross(up);
  if (right.norm() < 1e-12) throw_config_error("look_at: up vector is parallel to the view direction");
  right.normalize();
  const Eigen::Vector3d true_up = right.cross(forward);
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.block<3, 1>(0, 0) = right;
  m.block<3, 1>(0, 1) = true_up;
  m.block<3, 1>(0, 2) = -forward;
  m.block<3, 1>(0, 3) = eye;
  return m;
}

CameraPose with_resolution(const CameraPose& pose, int height, int width) {
  CameraPose out = pose;
  out.height = height;
  out.width = width;
  return out;
}

RayBatch generate_rays(const CameraPose& pose, double near, double far) {
  validate(pose);
  if (!(near < far)) throw_config_error("ray interval requires near < far");
  const double tan_half = std::tan(0.5 * pose.fov_y);
  const Eigen::Matrix3d r = pose.rotation();
  const Eigen::Vector3d origin = pose.position();
  const auto n = static_cast<std::size_t>(pose.height) * pose.width;
  RayBatch rays;
  rays.origins.assign(n, origin);
  rays.directions.resize(n);
  rays.near.assign(n, near);
  rays.far.assign(n, far);
  const double h = pose.height;
  for (int row = 0; row < pose.height; ++row) {
    for (int col = 0; col < pose.width; ++col) {
      const Eigen::Vector3d d_cam((2.0 * col + 1.0 - pose.width) / h * tan_half,
                                  (pose.height - 2.0 * row - 1.0) / h * tan_half, -1.0);
      rays.directions[static_cast<std::size_t>(row) * pose.width + col] = (r * d_cam).normalized();
    }
  }
  return rays;
}

RayInterval interval_for_bounds(const CameraPose& pose, double bound_radius) {
  const double dist = pose.position().norm();
  return {std::max(dist - bound_radius, 1e-3), dist + bound_radius};
}

template <typename Gen>
RaySamples sample_along(double near, double far, int n, Gen* gen) {
  if (n < 1) throw_config_error("sample_along needs at least one sample");
  if (!(near < far)) throw_config_error("sample_along requires near < far");
  RaySamples s;
  s.t.resize(n);
  s.deltas.resize(n);
  const double span = far - near;
  for (int k = 0; k < n; ++k) {
    const double lo = near + span * k / n;
    const double hi = k + 1 == n ? far : near + span * (k + 1) / n;
    s.deltas[k] = hi - lo;
    const double frac = gen == nullptr ? 0.5 : uniform01(*gen);
    s.t[k] = lo + frac * (hi - lo);
  }
  return s;
}

RaySamples sample_along(double near, double far, int n) { return sample_along<std::mt19937_64>(near, far, n, nullptr); }

template RaySamples sample_along<std::mt19937_64>(double, double, int, std::mt19937_64*);

}  // namespace sig::render
