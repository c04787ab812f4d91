#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "sig/common/error.hpp"
#include "sig/data/blob.hpp"
#include "sig/data/dataset.hpp"

using namespace sig;
using namespace sig::data;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("sig_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

render::CameraPose pose_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& up, int size) {
  render::CameraPose p;
  p.camera_to_world = render::look_at(eye, Eigen::Vector3d::Zero(), up);
  p.height = p.width = size;
  return p;
}

}  // namespace

TEST_CASE("hemisphere and front-facing poses") {
  for (auto mode : {CameraMode::kHemisphere, CameraMode::kFrontFacing}) {
    const auto poses = camera_poses(40, mode, 3.2, 0.7, 8);
    CHECK(poses.size() == 40);
    for (const auto& p : poses) {
      CHECK(std::abs(p.position().norm() - 3.2) < 1e-6);
      if (mode == CameraMode::kHemisphere) CHECK(p.position().z() >= 0.0);
      CHECK_NOTHROW(render::validate(p));
    }
  }
  CHECK(parse_camera_mode(to_string(CameraMode::kFrontFacing)) == CameraMode::kFrontFacing);
  CHECK_THROWS_AS(parse_camera_mode("orbit"), Error);
}

TEST_CASE("view splits") {
  CHECK(split_views(160, 0.9, 0).train.size() == 144);
  CHECK(split_views(160, 0.9, 0).test.size() == 16);
  CHECK(split_views(50, 0.9, 1).train.size() == 45);
  CHECK(split_views(50, 0.9, 1).test.size() == 5);
  const auto s = split_views(10, 0.9, 2);
  CHECK(s.train.size() == 9);
  CHECK(s.test.size() == 1);
  CHECK(std::is_sorted(s.train.begin(), s.train.end()));
  CHECK(split_views(10, 0.9, 2).test == s.test);
  CHECK_THROWS_AS(split_views(1, 0.9, 0), Error);
}

TEST_CASE("empty scene renders white") {
  const auto img = render_ground_truth(SceneSpec{}, pose_at({0, -3, 1}, Eigen::Vector3d::UnitZ(), 6));
  for (float v : img.data) CHECK(v == 1.0f);
}

TEST_CASE("sphere seen from above has hand-shaded centre") {
  SceneSpec spec;
  Primitive s;
  s.center = Eigen::Vector3d::Zero();
  s.size = Eigen::Vector3d(0.8, 0.8, 0.8);
  s.albedo = Eigen::Vector3d(0.2, 0.6, 0.9);
  spec.primitives.push_back(s);
  const auto img = render_ground_truth(spec, pose_at({0, 0, 3}, Eigen::Vector3d::UnitY(), 5));
  // Hit point (0, 0, 0.8), normal +z, light (0, 0.3, 1) / sqrt(1.09).
  const double shade = kAmbient + kDiffuse / std::sqrt(1.09);
  for (int c = 0; c < 3; ++c) CHECK(std::abs(img.at(2, 2, c) - s.albedo[c] * shade) < 1e-6);
}

TEST_CASE("mirrored scene and camera give a mirrored image") {
  const auto family = draw_family(5);
  const SceneSpec spec = draw_vehicle(family, 17);
  SceneSpec mirrored = spec;
  for (auto& p : mirrored.primitives) p.center.x() = -p.center.x();
  const Eigen::Matrix3d m = Eigen::Vector3d(-1, 1, 1).asDiagonal();
  const auto pose = pose_at({1.3, -2.6, 1.4}, Eigen::Vector3d::UnitZ(), 24);
  auto flipped = pose;
  flipped.camera_to_world.block<3, 3>(0, 0) = m * pose.rotation() * m;
  flipped.camera_to_world.block<3, 1>(0, 3) = m * pose.position();
  const auto a = render_ground_truth(spec, pose);
  const auto b = render_ground_truth(mirrored, flipped);
  for (int r = 0; r < 24; ++r)
    for (int q = 0; q < 24; ++q)
      for (int c = 0; c < 3; ++c) CHECK(a.at(r, q, c) == b.at(r, 23 - q, c));
}

TEST_CASE("vehicles stay in the unit box") {
  const auto family = draw_family(9);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto spec = draw_vehicle(family, seed);
    for (const auto& p : spec.primitives) {
      const Eigen::Vector3d ext = p.kind == PrimitiveKind::kSphere ? Eigen::Vector3d::Constant(p.size.x()) : p.size;
      CHECK(((p.center + ext).array() <= 1.0).all());
      CHECK(((p.center - ext).array() >= -1.0).all());
      CHECK((p.albedo.array() >= 0.0).all());
      CHECK((p.albedo.array() <= 1.0).all());
    }
  }
}

TEST_CASE("blob golden bytes") {
  Image img(1, 2, 1);
  img.data = {1.0f, -2.0f};
  const std::vector<std::uint8_t> expected = {'S', 'I', 'G', 'T', 1, 0, 0, 0, 0, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0,
                                              1, 0, 0, 0, 0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0xc0};
  const auto bytes = encode_blob(img);
  CHECK(bytes == expected);
  // Header is 25 bytes; the payload is the dims product times 4.
  CHECK(bytes.size() - 25 == 1 * 2 * 1 * 4);
  CHECK(decode_blob(bytes, "x").data == img.data);
}

TEST_CASE("blob errors name the file") {
  Image img(2, 2, 3, 0.5f);
  auto bytes = encode_blob(img);
  bytes[1] = 'X';
  try {
    decode_blob(bytes, "scene_0/view_3.sigt");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == "malformed-blob");
    CHECK(std::string(e.what()).find("scene_0/view_3.sigt") != std::string::npos);
  }
  auto shortened = encode_blob(img);
  shortened.resize(shortened.size() - 1);
  CHECK_THROWS_AS(decode_blob(shortened, "x"), Error);
}

TEST_CASE("dataset save load save is byte identical") {
  GenerateOptions o;
  o.scenes = 2;
  o.views = 5;
  o.size = 8;
  o.seed = 3;
  const auto ds = generate_dataset(o);
  CHECK(ds.scenes.size() == 2);
  CHECK(ds.split.train.size() + ds.split.test.size() == 5);
  const auto a = temp_dir("ds_a"), b = temp_dir("ds_b");
  save_dataset(ds, a);
  const auto loaded = load_dataset(a);
  save_dataset(loaded, b);
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 5; ++j) {
      const auto rel = fs::path("blobs") / ("scene_" + std::to_string(i)) / ("view_" + std::to_string(j) + ".sigt");
      CHECK(fs::exists(a / rel));
      CHECK(slurp(a / rel) == slurp(b / rel));
    }
  CHECK(manifest_json(generate_dataset(o)) == manifest_json(ds));
  CHECK(loaded.bound_radius == ds.bound_radius);
}

TEST_CASE("dataset load errors") {
  const auto dir = temp_dir("ds_err");
  try {
    load_dataset(dir);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == "missing-file");
  }
  std::ofstream(dir / "manifest.json") << "{not json";
  try {
    load_dataset(dir);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == "malformed-manifest");
  }
  GenerateOptions o;
  o.scenes = 1;
  o.views = 2;
  o.size = 4;
  save_dataset(generate_dataset(o), dir);
  auto blob = slurp(dir / "blobs/scene_0/view_1.sigt");
  blob[0] = 'Z';
  std::ofstream(dir / "blobs/scene_0/view_1.sigt", std::ios::binary).write(reinterpret_cast<const char*>(blob.data()), blob.size());
  try {
    load_dataset(dir);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == "malformed-blob");
    CHECK(std::string(e.what()).find("view_1.sigt") != std::string::npos);
  }
}
