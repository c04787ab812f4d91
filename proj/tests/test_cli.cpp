#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "sig/cli/cli.hpp"
#include "sig/train/config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sig;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("sig_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

// Small enough for a few seconds per stage.
json tiny_config() {
  auto c = train::default_config();
  c.n1 = 2;
  c.n2 = 1;
  c.resolution = 8;
  c.f_mic = 2;
  c.f_mac = 4;
  c.basis_count = 3;
  c.render = {8, 16, true};
  c.autoencoder.encoder = {{8, 2}, {4, 1}};
  c.autoencoder.decoder = {{8, 2}};
  for (auto* p : {&c.warmup, &c.training, &c.latent_supervision, &c.rgb_alignment}) {
    p->epochs = 2;
    p->batch_size = 4;
  }
  return train::to_json(c);
}

}  // namespace

TEST_CASE("help and usage errors") {
  const auto help = call({"--help"});
  CHECK(help.code == cli::kExitOk);
  CHECK(help.out.find("train-stage1") != std::string::npos);
  CHECK(call({"gradcheck", "--help"}).out.find("--epsilon") != std::string::npos);

  const auto unknown = call({"gradcheck", "--no-such-flag"});
  CHECK(unknown.code == cli::kExitUsage);
  CHECK(unknown.err.rfind("error: usage:", 0) == 0);
  CHECK(call({"frobnicate"}).code == cli::kExitUsage);
  CHECK(call({"gradcheck", "--bits", "16"}).code == cli::kExitUsage);
  CHECK(call({"cost-report", "--out", scratch("usage").string()}).code == cli::kExitUsage);
}

TEST_CASE("cost-report reference fixtures") {
  const auto dir = scratch("cost");
  const auto r = call({"cost-report", "--fixtures", "paper", "--n", "2000", "--out", dir.string()});
  REQUIRE(r.code == cli::kExitOk);
  const auto j = json::parse(slurp(dir / "cost_report.json"));
  const auto& row = j["rows"][0];
  CHECK(row["ours_minutes"].get<double>() == doctest::Approx(5217).epsilon(0.005));
  CHECK(row["ours_megabytes"].get<double>() == doctest::Approx(1081).epsilon(0.005));
  CHECK(row["rgb_minutes"].get<double>() == doctest::Approx(32040).epsilon(0.005));
  CHECK(row["rgb_megabytes"].get<double>() == doctest::Approx(3000).epsilon(0.005));
  CHECK(j.contains("time_crossover"));
  CHECK(r.out.find("time crossover N = ") != std::string::npos);
  CHECK(fs::exists(dir / "cost_report.txt"));
  CHECK(fs::exists(dir / "resolved_config.json"));
}

TEST_CASE("gradcheck subcommand") {
  const auto dir = scratch("gradcheck");
  const auto r = call({"gradcheck", "--ops", "sample_plane", "head_forward", "--points", "5", "--out", dir.string()});
  CHECK(r.code == cli::kExitOk);
  const auto j = json::parse(slurp(dir / "gradcheck.json"));
  CHECK(j["ops"].size() == 2);
  // A step this large leaves a truncation error far above tolerance.
  CHECK(call({"gradcheck", "--ops", "render", "--points", "2", "--epsilon", "0.3"}).code == cli::kExitNumeric);
}

TEST_CASE("config and data errors") {
  const auto dir = scratch("errors");
  REQUIRE(call({"gen-data", "--scenes", "3", "--views", "4", "--size", "16", "--out", (dir / "data").string()}).code == 0);

  std::ofstream(dir / "bad.json") << R"({"triplane": {"resolutoin": 4}})";
  const auto bad = call({"train-stage1", "--data", (dir / "data").string(), "--config", (dir / "bad.json").string(),
                         "--out", (dir / "o").string()});
  CHECK(bad.code == cli::kExitConfig);
  CHECK(bad.err.find("resolutoin") != std::string::npos);

  const auto missing = call({"train-stage2", "--data", (dir / "data").string(), "--checkpoint",
                             (dir / "nope.ckpt").string(), "--out", (dir / "o").string()});
  CHECK(missing.code == cli::kExitData);
  CHECK(missing.err.rfind("error: missing-checkpoint:", 0) == 0);

  const auto no_data = call({"train-stage1", "--data", (dir / "absent").string(), "--out", (dir / "o").string()});
  CHECK(no_data.code == cli::kExitData);
}

TEST_CASE("end-to-end tiny pipeline is reproducible") {
  const auto dir = scratch("e2e");
  const auto data = (dir / "data").string();
  REQUIRE(call({"gen-data", "--scenes", "3", "--views", "6", "--size", "16", "--seed", "2", "--out", data}).code == 0);
  std::ofstream(dir / "tiny.json") << tiny_config().dump();
  const auto cfg = (dir / "tiny.json").string();

  auto run_pipeline = [&](const std::string& tag) {
    const auto out = (dir / tag).string();
    REQUIRE(call({"train-stage1", "--data", data, "--config", cfg, "--out", out, "--quiet"}).code == 0);
    const auto ckpt = (dir / tag / "stage1.ckpt").string();
    REQUIRE(call({"train-stage2", "--data", data, "--config", cfg, "--checkpoint", ckpt, "--out", out, "--quiet"}).code == 0);
    const auto ck2 = (dir / tag / "stage2.ckpt").string();
    REQUIRE(call({"eval", "--data", data, "--config", cfg, "--checkpoint", ck2, "--stage", "2", "--out", out}).code == 0);
    REQUIRE(call({"render", "--data", data, "--config", cfg, "--checkpoint", ck2, "--scene", "2", "--view", "0",
                  "--out", out}).code == 0);
  };
  run_pipeline("a");
  run_pipeline("b");

  for (const char* f : {"stage1.ckpt", "stage2.ckpt", "stage1_report.json", "stage2_report.json", "eval.json",
                        "scene_2_view_0.sigt", "resolved_config.json"}) {
    INFO(f);
    REQUIRE(fs::exists(dir / "a" / f));
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  CHECK(fs::exists(dir / "a" / "stage1_timing.json"));
  const auto ev = json::parse(slurp(dir / "a" / "eval.json"));
  CHECK(ev["scenes"].size() == 1);
  CHECK(ev["scenes"][0]["scene"] == 2);

  const auto resolved = json::parse(slurp(dir / "a" / "resolved_config.json"));
  CHECK(resolved == tiny_config());
}
