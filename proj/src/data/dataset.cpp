#include "sig/data/dataset.hpp"

#include <cmath>
#include <json.hpp>
#include <numbers>
#include <random>

#include "sig/common/bytes.hpp"
#include "sig/common/error.hpp"
#include "sig/common/parallel.hpp"
#include "sig/data/blob.hpp"

namespace sig::data {

using nlohmann::json;

namespace {

constexpr int kManifestVersion = 1;
constexpr double kBoundMargin = 1.1;
constexpr double kFrontConeRadians = 35.0 * std::numbers::pi / 180.0;

std::string blob_name(int scene, int view) {
  return "blobs/scene_" + std::to_string(scene) + "/view_" + std::to_string(view) + ".sigt";
}

[[noreturn]] void malformed(const std::filesystem::path& path, const std::string& what) {
  throw_data_error("malformed-manifest", path.string() + ": " + what);
}

json pose_json(const render::CameraPose& pose) {
  std::vector<double> m(16);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m[r * 4 + c] = pose.camera_to_world(r, c);
  return m;
}

json primitive_json(const Primitive& p) {
  auto vec = [](const Eigen::Vector3d& v) { return std::vector<double>{v.x(), v.y(), v.z()}; };
  return json{{"kind", p.kind == PrimitiveKind::kSphere ? "sphere" : "box"},
              {"center", vec(p.center)},
              {"size", vec(p.size)},
              {"albedo", vec(p.albedo)}};
}

Eigen::Vector3d vec3(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw std::invalid_argument("expected three components");
  return {v[0], v[1], v[2]};
}

}  // namespace

CameraMode parse_camera_mode(std::string_view text) {
  if (text == "hemisphere") return CameraMode::kHemisphere;
  if (text == "front-facing") return CameraMode::kFrontFacing;
  throw_config_error("unknown camera mode '" + std::string(text) + "' (expected hemisphere or front-facing)");
}

std::string to_string(CameraMode mode) { return mode == CameraMode::kHemisphere ? "hemisphere" : "front-facing"; }

std::vector<render::CameraPose> camera_poses(int views, CameraMode mode, double radius, double fov_y, int size) {
  if (views < 1) throw_config_error("need at least one view");
  if (!(radius > 0)) throw_config_error("camera radius must be positive");
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<render::CameraPose> poses;
  for (int j = 0; j < views; ++j) {
    const double frac = (j + 0.5) / views;
    const double azimuth = golden * j;
    Eigen::Vector3d dir;
    if (mode == CameraMode::kHemisphere) {
      // Heights in [0.08, 0.92] avoid both the horizon and the pole.
      const double z = 0.08 + 0.84 * frac;
      const double rho = std::sqrt(1.0 - z * z);
      dir = Eigen::Vector3d(rho * std::cos(azimuth), rho * std::sin(azimuth), z);
    } else {
      const double cos_cone = std::cos(kFrontConeRadians);
      const double c = 1.0 - (1.0 - cos_cone) * frac;
      const double s = std::sqrt(1.0 - c * c);
      dir = Eigen::Vector3d(s * std::cos(azimuth), c, s * std::sin(azimuth));
    }
    render::CameraPose pose;
    pose.camera_to_world = render::look_at(radius * dir, Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ());
    pose.fov_y = fov_y;
    pose.height = size;
    pose.width = size;
    poses.push_back(pose);
  }
  return poses;
}

ViewSplit split_views(int views, double train_fraction, std::uint64_t seed) {
  if (views < 2) throw_config_error("split_views needs at least two views, got " + std::to_string(views));
  if (!(train_fraction > 0 && train_fraction < 1)) throw_config_error("train fraction must lie in (0, 1)");
  const int n_train = std::clamp(static_cast<int>(std::floor(train_fraction * views + 1e-9)), 1, views - 1);
  std::vector<int> order(views);
  for (int i = 0; i < views; ++i) order[i] = i;
  std::mt19937_64 gen(seed);
  // Fisher-Yates with our own index draw so the split is library independent.
  for (int i = views - 1; i > 0; --i) {
    const int j = static_cast<int>(render::uniform01(gen) * (i + 1));
    std::swap(order[i], order[j]);
  }
  ViewSplit s;
  s.train.assign(order.begin(), order.begin() + n_train);
  s.test.assign(order.begin() + n_train, order.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

SceneDataset SceneDataset::subset(int begin, int end) const {
  if (begin < 0 || end > static_cast<int>(scenes.size()) || begin > end) throw_config_error("scene subset out of range");
  SceneDataset out;
  out.options = options;
  out.options.scenes = end - begin;
  out.bound_radius = bound_radius;
  out.split = split;
  out.scenes.assign(scenes.begin() + begin, scenes.begin() + end);
  return out;
}

SceneDataset generate_dataset(const GenerateOptions& options) {
  if (options.scenes < 1 || options.views < 1) throw_config_error("dataset needs at least one scene and one view");
  if (options.size < 1) throw_config_error("image size must be positive");
  SceneDataset ds;
  ds.options = options;
  const auto poses = camera_poses(options.views, options.mode, options.radius, options.fov_y, options.size);
  ds.split = options.views >= 2 ? split_views(options.views, 0.9, options.seed) : ViewSplit{{0}, {}};
  std::vector<bool> is_train(options.views, false);
  for (int j : ds.split.train) is_train[j] = true;

  const VehicleFamily family = draw_family(options.seed);
  std::mt19937_64 seeds(options.seed ^ 0x9e3779b97f4a7c15ULL);
  double bound = 0;
  for (int i = 0; i < options.scenes; ++i) {
    SceneRecord rec;
    rec.spec = draw_vehicle(family, seeds());
    bound = std::max(bound, bounding_radius(rec.spec));
    for (int j = 0; j < options.views; ++j) rec.views.push_back({poses[j], blob_name(i, j), is_train[j]});
    rec.images.resize(options.views);
    for (int j = 0; j < options.views; ++j) rec.images[j] = render_ground_truth(rec.spec, poses[j]);
    ds.scenes.push_back(std::move(rec));
  }
  ds.bound_radius = kBoundMargin * bound;
  return ds;
}

std::string manifest_json(const SceneDataset& ds) {
  json scenes = json::array();
  for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
    const auto& s = ds.scenes[i];
    json views = json::array();
    for (std::size_t j = 0; j < s.views.size(); ++j) {
      const auto& v = s.views[j];
      views.push_back({{"index", j},
                       {"pose", pose_json(v.pose)},
                       {"fov_y", v.pose.fov_y},
                       {"height", v.pose.height},
                       {"width", v.pose.width},
                       {"split", v.train ? "train" : "test"},
                       {"blob", v.blob}});
    }
    json prims = json::array();
    for (const auto& p : s.spec.primitives) prims.push_back(primitive_json(p));
    scenes.push_back({{"index", i}, {"seed", s.spec.seed}, {"primitives", prims}, {"views", views}});
  }
  const auto& o = ds.options;
  json m = {{"version", kManifestVersion},
            {"options",
             {{"scenes", o.scenes},
              {"views", o.views},
              {"size", o.size},
              {"seed", o.seed},
              {"mode", to_string(o.mode)},
              {"radius", o.radius},
              {"fov_y", o.fov_y}}},
            {"bound_radius", ds.bound_radius},
            {"split", {{"train", ds.split.train}, {"test", ds.split.test}}},
            {"scenes", scenes}};
  return m.dump(2) + "\n";
}

void save_dataset(const SceneDataset& ds, const std::filesystem::path& dir) {
  for (const auto& s : ds.scenes)
    for (std::size_t j = 0; j < s.views.size(); ++j) write_blob(dir / s.views[j].blob, s.images.at(j));
  bytes::write_text(dir / "manifest.json", manifest_json(ds));
}

SceneDataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  const auto raw = bytes::read_file(manifest_path);
  json m;
  try {
    m = json::parse(raw.begin(), raw.end());
  } catch (const json::exception& e) {
    malformed(manifest_path, std::string("invalid JSON: ") + e.what());
  }
  SceneDataset ds;
  try {
    if (m.at("version").get<int>() != kManifestVersion) malformed(manifest_path, "unsupported manifest version");
    const auto& o = m.at("options");
    ds.options.scenes = o.at("scenes").get<int>();
    ds.options.views = o.at("views").get<int>();
    ds.options.size = o.at("size").get<int>();
    ds.options.seed = o.at("seed").get<std::uint64_t>();
    ds.options.mode = parse_camera_mode(o.at("mode").get<std::string>());
    ds.options.radius = o.at("radius").get<double>();
    ds.options.fov_y = o.at("fov_y").get<double>();
    ds.bound_radius = m.at("bound_radius").get<double>();
    ds.split.train = m.at("split").at("train").get<std::vector<int>>();
    ds.split.test = m.at("split").at("test").get<std::vector<int>>();
    for (const auto& js : m.at("scenes")) {
      SceneRecord rec;
      rec.spec.seed = js.at("seed").get<std::uint64_t>();
      for (const auto& jp : js.at("primitives")) {
        Primitive p;
        const auto kind = jp.at("kind").get<std::string>();
        if (kind != "sphere" && kind != "box") malformed(manifest_path, "unknown primitive kind '" + kind + "'");
        p.kind = kind == "sphere" ? PrimitiveKind::kSphere : PrimitiveKind::kBox;
        p.center = vec3(jp.at("center"));
        p.size = vec3(jp.at("size"));
        p.albedo = vec3(jp.at("albedo"));
        rec.spec.primitives.push_back(p);
      }
      for (const auto& jv : js.at("views")) {
        ViewRecord v;
        const auto pm = jv.at("pose").get<std::vector<double>>();
        if (pm.size() != 16) malformed(manifest_path, "pose needs 16 values");
        for (int r = 0; r < 4; ++r)
          for (int c = 0; c < 4; ++c) v.pose.camera_to_world(r, c) = pm[r * 4 + c];
        v.pose.fov_y = jv.at("fov_y").get<double>();
        v.pose.height = jv.at("height").get<int>();
        v.pose.width = jv.at("width").get<int>();
        const auto split = jv.at("split").get<std::string>();
        if (split != "train" && split != "test") malformed(manifest_path, "unknown split label '" + split + "'");
        v.train = split == "train";
        v.blob = jv.at("blob").get<std::string>();
        rec.views.push_back(std::move(v));
      }
      ds.scenes.push_back(std::move(rec));
    }
  } catch (const json::exception& e) {
    malformed(manifest_path, e.what());
  } catch (const std::invalid_argument& e) {
    malformed(manifest_path, e.what());
  }
  if (static_cast<int>(ds.scenes.size()) != ds.options.scenes) malformed(manifest_path, "scene count disagrees with options");
  for (auto& s : ds.scenes) {
    if (static_cast<int>(s.views.size()) != ds.options.views) malformed(manifest_path, "view count differs between scenes");
    for (const auto& v : s.views) {
      render::validate(v.pose);
      Image img = read_blob(dir / v.blob);
      if (img.height != v.pose.height || img.width != v.pose.width || img.channels != 3) {
        throw_data_error("malformed-blob", (dir / v.blob).string() + ": dims do not match the manifest");
      }
      s.images.push_back(std::move(img));
    }
  }
  return ds;
}

}  // namespace sig::data
