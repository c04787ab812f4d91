#include "sig/data/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "sig/common/parallel.hpp"

namespace sig::data {

namespace {

using Eigen::Vector3d;

double uniform(std::mt19937_64& gen, double lo, double hi) { return lo + (hi - lo) * render::uniform01(gen); }

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  Vector3d normal = Vector3d::Zero();
  Vector3d albedo = Vector3d::Ones();
};

void intersect_sphere(const Primitive& p, const Vector3d& o, const Vector3d& d, Hit& hit) {
  const Vector3d oc = o - p.center;
  const double b = oc.dot(d);
  const double c = oc.dot(oc) - p.size.x() * p.size.x();
  const double disc = b * b - c;
  if (disc < 0) return;
  const double t = -b - std::sqrt(disc);
  if (t <= 0 || t >= hit.t) return;
  hit.t = t;
  hit.normal = (oc + t * d) / p.size.x();
  hit.albedo = p.albedo;
}

void intersect_box(const Primitive& p, const Vector3d& o, const Vector3d& d, Hit& hit) {
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  int axis = -1;
  double sign = 0;
  for (int a = 0; a < 3; ++a) {
    const double lo = p.center[a] - p.size[a];
    const double hi = p.center[a] + p.size[a];
    if (d[a] == 0.0) {
      if (o[a] < lo || o[a] > hi) return;
      continue;
    }
    const double t_lo = (lo - o[a]) / d[a];
    const double t_hi = (hi - o[a]) / d[a];
    const double t0 = std::min(t_lo, t_hi);
    const double t1 = std::max(t_lo, t_hi);
    if (t0 > t_enter) {
      t_enter = t0;
      axis = a;
      sign = d[a] > 0 ? -1.0 : 1.0;
    }
    t_exit = std::min(t_exit, t1);
  }
  if (axis < 0 || t_enter > t_exit || t_enter <= 0 || t_enter >= hit.t) return;
  hit.t = t_enter;
  hit.normal = Vector3d::Zero();
  hit.normal[axis] = sign;
  hit.albedo = p.albedo;
}

}  // namespace

double bounding_radius(const SceneSpec& spec) {
  double r = 0;
  for (const auto& p : spec.primitives) {
    const double extent = p.kind == PrimitiveKind::kSphere ? p.size.x() : p.size.norm();
    r = std::max(r, p.center.norm() + extent);
  }
  return r;
}

VehicleFamily draw_family(std::uint64_t family_seed) {
  std::mt19937_64 gen(family_seed);
  VehicleFamily f;
  f.body_length = uniform(gen, 0.60, 0.72);
  f.body_width = uniform(gen, 0.30, 0.38);
  f.body_height = uniform(gen, 0.13, 0.18);
  f.cabin_length = uniform(gen, 0.28, 0.40);
  f.cabin_height = uniform(gen, 0.11, 0.16);
  f.cabin_offset = uniform(gen, -0.15, 0.05);
  f.wheel_radius = uniform(gen, 0.14, 0.19);
  return f;
}

SceneSpec draw_vehicle(const VehicleFamily& f, std::uint64_t scene_seed) {
  std::mt19937_64 gen(scene_seed);
  auto jitter = [&](double v) { return v * uniform(gen, 0.85, 1.15); };
  const double length = jitter(f.body_length);
  const double width = jitter(f.body_width);
  const double height = jitter(f.body_height);
  const double wheel = jitter(f.wheel_radius);
  const double cabin_length = std::min(jitter(f.cabin_length), 0.9 * length);
  const double cabin_height = jitter(f.cabin_height);
  const double cabin_offset = std::clamp(f.cabin_offset + uniform(gen, -0.05, 0.05), -length + cabin_length, length - cabin_length);
  const Vector3d body_color(uniform(gen, 0.1, 0.95), uniform(gen, 0.1, 0.95), uniform(gen, 0.1, 0.95));
  const Vector3d cabin_color = 0.5 * body_color + Vector3d::Constant(uniform(gen, 0.2, 0.45));
  const Vector3d wheel_color = Vector3d::Constant(uniform(gen, 0.08, 0.2));

  // Wheels rest on z = -0.5; the body sits on the wheel axles.
  const double ground = -0.5;
  const double body_z = ground + wheel + 0.5 * height;
  SceneSpec s;
  s.seed = scene_seed;
  s.primitives.push_back({PrimitiveKind::kBox, Vector3d(0, 0, body_z), Vector3d(width, length, height), body_color});
  s.primitives.push_back({PrimitiveKind::kBox, Vector3d(0, cabin_offset, body_z + height + cabin_height),
                          Vector3d(0.85 * width, cabin_length, cabin_height), cabin_color});
  for (double sx : {-1.0, 1.0}) {
    for (double sy : {-1.0, 1.0}) {
      s.primitives.push_back({PrimitiveKind::kSphere, Vector3d(sx * width, sy * 0.65 * length, ground + wheel),
                              Vector3d::Constant(wheel), wheel_color});
    }
  }
  return s;
}

Eigen::Vector3d light_direction() { return Vector3d(0.0, 0.3, 1.0).normalized(); }

Image render_ground_truth(const SceneSpec& spec, const render::CameraPose& pose) {
  const double dist = pose.position().norm();
  const render::RayBatch rays = render::generate_rays(pose, 1e-6, dist + 1e6);
  const Vector3d light = light_direction();
  Image img(pose.height, pose.width, 3, 1.0f);
  parallel_chunks(static_cast<std::int64_t>(rays.size()), 512, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) {
      Hit hit;
      for (const auto& p : spec.primitives) {
        if (p.kind == PrimitiveKind::kSphere)
          intersect_sphere(p, rays.origins[i], rays.directions[i], hit);
        else
          intersect_box(p, rays.origins[i], rays.directions[i], hit);
      }
      if (!std::isfinite(hit.t)) continue;
      const double shade = kAmbient + kDiffuse * std::max(0.0, hit.normal.dot(light));
      for (int c = 0; c < 3; ++c) img.data[i * 3 + c] = static_cast<float>(std::clamp(hit.albedo[c] * shade, 0.0, 1.0));
    }
  });
  return img;
}

}  // namespace sig::data
