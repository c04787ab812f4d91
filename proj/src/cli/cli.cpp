#include "sig/cli/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "sig/cli/gradcheck.hpp"
#include "sig/common/error.hpp"
#include "sig/data/blob.hpp"
#include "sig/data/dataset.hpp"
#include "sig/grad/checkpoint.hpp"
#include "sig/metrics/costs.hpp"
#include "sig/train/trainer.hpp"

namespace sig::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw_data_error("write-failed", "cannot write " + path.string());
  f << text;
  if (!f) throw_data_error("write-failed", "cannot write " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path, const std::string& missing_category) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw_data_error(missing_category, "cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw_data_error("malformed-json", path.string() + ": " + e.what());
  }
}

// Flags shared by the training-style subcommands. Unset flags leave the
// config file value in place.
struct TrainFlags {
  std::string data;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> precision;
  std::optional<std::string> variant;
  bool quiet = false;

  void add_to(CLI::App* app, bool need_data = true) {
    auto* d = app->add_option("--data", data, "Dataset directory written by gen-data");
    if (need_data) d->required();
    app->add_option("--config", config, "JSON training configuration (defaults when omitted)");
    app->add_option("--out", out, "Output directory")->required();
    app->add_option("--seed", seed, "Override the configuration seed");
    app->add_option("--precision", precision, "Override precision: f32 or f64");
    app->add_option("--variant", variant,
                    "Override variant: ours, rgb-baseline, ours-micro, ours-macro, ours-m1, ours-rgb");
    app->add_flag("--quiet", quiet, "Suppress per-epoch progress");
  }

  // Defaults < config file < flags.
  train::TrainConfig resolve() const {
    train::TrainConfig c = config.empty() ? train::default_config() : train::load_config(config);
    json patch = json::object();
    if (seed) patch["seed"] = *seed;
    if (precision) patch["precision"] = *precision;
    if (!patch.empty()) c = train::config_from_json(patch, c);
    if (variant) c = train::project_variant(c, parse_variant(*variant));
    train::validate(c);
    return c;
  }

  train::ProgressFn progress(std::ostream& err) const {
    if (quiet) return nullptr;
    return [&err](const std::string& line) { err << line << "\n"; };
  }
};

json timing_json(const train::TrainTiming& t) { return t.to_json(); }

template <typename T>
int stage1_impl(const data::SceneDataset& ds, const train::TrainConfig& c, const TrainFlags& f, std::ostream& out,
                std::ostream& err) {
  auto r = train::train_stage1<T>(ds, c, f.progress(err));
  const fs::path dir(f.out);
  grad::save_checkpoint(dir / "stage1.ckpt", r.params, train::checkpoint_meta(c, ds, 1));
  write_json(dir / "stage1_report.json", r.report.to_json());
  write_json(dir / "stage1_timing.json", timing_json(r.timing));
  out << fmt::format("stage 1: {} scenes, mean PSNR {:.2f} dB, mean SSIM {:.4f}\n", r.report.scenes,
                     r.report.mean_psnr, r.report.mean_ssim);
  return kExitOk;
}

template <typename T>
int stage2_impl(const data::SceneDataset& ds, const train::TrainConfig& c, const TrainFlags& f,
                const std::string& checkpoint, std::ostream& out, std::ostream& err) {
  auto params = grad::load_checkpoint<T>(checkpoint);
  auto r = train::train_stage2<T>(ds, std::move(params), c, f.progress(err));
  const fs::path dir(f.out);
  grad::save_checkpoint(dir / "stage2.ckpt", r.params, train::checkpoint_meta(c, ds, 2));
  write_json(dir / "stage2_report.json", r.report.to_json());
  write_json(dir / "stage2_timing.json", timing_json(r.timing));
  out << fmt::format("stage 2: {} scenes, mean PSNR {:.2f} dB, mean SSIM {:.4f}\n", r.report.scenes,
                     r.report.mean_psnr, r.report.mean_ssim);
  return kExitOk;
}

std::string metrics_table(const std::vector<train::SceneMetrics>& m, double mean_psnr, double mean_ssim) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : m) {
    rows.push_back({std::to_string(s.scene), fmt::format("{:.2f}", s.psnr), fmt::format("{:.4f}", s.ssim),
                    std::to_string(s.test_views)});
  }
  rows.push_back({"mean", fmt::format("{:.2f}", mean_psnr), fmt::format("{:.4f}", mean_ssim), ""});
  return metrics::format_table({"scene", "PSNR", "SSIM", "views"}, rows);
}

template <typename T>
json eval_impl(const data::SceneDataset& ds, const train::TrainConfig& c, const std::string& checkpoint, int stage) {
  grad::CheckpointInfo info;
  const auto params = grad::load_checkpoint<T>(checkpoint, &info);
  const int first = stage == 1 ? 0 : c.n1;
  const int count = stage == 1 ? c.n1 : c.n2;
  if (static_cast<int>(ds.scenes.size()) < first + count) {
    throw_config_error(fmt::format("eval of stage {} needs scenes [{}, {}), dataset has {}", stage, first,
                                   first + count, ds.scenes.size()));
  }
  const auto spec = train::ModelSpec::from_config(c, ds.bound_radius);
  const auto m = train::evaluate(params, spec, ds.subset(first, first + count), first);
  json rows = json::array();
  double psnr = 0, ssim = 0;
  for (const auto& s : m) {
    rows.push_back({{"scene", s.scene}, {"psnr", s.psnr}, {"ssim", s.ssim}, {"test_views", s.test_views}});
    psnr += s.psnr / static_cast<double>(m.size());
    ssim += s.ssim / static_cast<double>(m.size());
  }
  return {{"stage", stage}, {"variant", to_string(c.variant)}, {"scenes", rows}, {"mean_psnr", psnr},
          {"mean_ssim", ssim}};
}

template <typename T>
Image render_impl(const data::SceneDataset& ds, const train::TrainConfig& c, const std::string& checkpoint,
                  int scene, int view, int size) {
  const auto params = grad::load_checkpoint<T>(checkpoint);
  if (scene < 0 || scene >= static_cast<int>(ds.scenes.size())) throw_config_error("--scene out of range");
  if (view < 0 || view >= ds.view_count()) throw_config_error("--view out of range");
  const auto spec = train::ModelSpec::from_config(c, ds.bound_radius);
  const int side = size > 0 ? size : ds.options.size;
  const auto pose = render::with_resolution(ds.scenes[scene].views[view].pose, side, side);
  const auto bg = train::background(spec, params, side);
  return train::render_view(params, spec, scene, pose, std::span<const T>(bg));
}

metrics::StageCost stage_cost(const json& report, const json& timing) {
  metrics::StageCost s;
  s.stage = report.at("stage").get<int>();
  s.scenes = report.at("scenes").get<int>();
  s.total_minutes = timing.at("total_seconds").get<double>() / 60.0;
  s.total_megabytes = report.at("total_megabytes").get<double>();
  s.scene_minutes.assign(static_cast<std::size_t>(s.scenes), timing.at("per_scene_minutes").get<double>());
  s.scene_megabytes.assign(static_cast<std::size_t>(s.scenes), report.at("stored_megabytes_per_scene").get<double>());
  return s;
}

std::vector<metrics::StageCost> run_costs(const fs::path& dir) {
  std::vector<metrics::StageCost> out;
  for (int stage : {1, 2}) {
    const auto rep = read_json(dir / fmt::format("stage{}_report.json", stage), "missing-file");
    const auto tim = read_json(dir / fmt::format("stage{}_timing.json", stage), "missing-file");
    out.push_back(stage_cost(rep, tim));
  }
  return out;
}

int dispatch(CLI::App& app, std::ostream& out, std::ostream& err, const std::vector<std::string>& args) {
  // gen-data
  data::GenerateOptions gen;
  std::string gen_mode = "hemisphere";
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic multi-scene dataset");
  gen_cmd->add_option("--scenes", gen.scenes, "Number of scenes")->capture_default_str();
  gen_cmd->add_option("--views", gen.views, "Views per scene")->capture_default_str();
  gen_cmd->add_option("--size", gen.size, "Image side in pixels")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Dataset seed")->capture_default_str();
  gen_cmd->add_option("--mode", gen_mode, "Camera mode: hemisphere or front-facing")->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "Output directory")->required();

  TrainFlags s1;
  auto* s1_cmd = app.add_subcommand("train-stage1", "Train the autoencoder, basis and first scene subset");
  s1.add_to(s1_cmd);

  TrainFlags s2;
  std::string s2_ckpt;
  auto* s2_cmd = app.add_subcommand("train-stage2", "Train the remaining scenes on the stage-1 components");
  s2.add_to(s2_cmd);
  s2_cmd->add_option("--checkpoint", s2_ckpt, "Stage-1 checkpoint")->required();

  TrainFlags ev;
  std::string ev_ckpt;
  int ev_stage = 1;
  auto* ev_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the test views");
  ev.add_to(ev_cmd);
  ev_cmd->add_option("--checkpoint", ev_ckpt, "Checkpoint to evaluate")->required();
  ev_cmd->add_option("--stage", ev_stage, "Which scenes to evaluate: 1 or 2")->check(CLI::IsMember({1, 2}))
      ->capture_default_str();

  TrainFlags ab;
  std::vector<std::string> ab_variants;
  auto* ab_cmd = app.add_subcommand("ablate", "Run every variant through both stages");
  ab.add_to(ab_cmd);
  ab_cmd->add_option("--variants", ab_variants, "Subset of variants (default: all)");

  std::string cr_fixtures, cr_run, cr_baseline, cr_out;
  std::vector<double> cr_n = {500, 1000, 2000};
  auto* cr_cmd = app.add_subcommand("cost-report", "Training time and memory as a function of scene count");
  cr_cmd->add_option("--fixtures", cr_fixtures, "Use reference measurements: paper")->check(CLI::IsMember({"paper"}));
  cr_cmd->add_option("--run", cr_run, "Directory with stage{1,2}_report.json and _timing.json");
  cr_cmd->add_option("--baseline-run", cr_baseline, "Run directory of the rgb-baseline variant");
  cr_cmd->add_option("--n", cr_n, "Scene counts to tabulate")->capture_default_str();
  cr_cmd->add_option("--out", cr_out, "Output directory")->required();

  TrainFlags rd;
  std::string rd_ckpt;
  int rd_scene = 0, rd_view = 0, rd_size = 0;
  auto* rd_cmd = app.add_subcommand("render", "Render one dataset pose from a checkpoint to a .sigt blob");
  rd.add_to(rd_cmd);
  rd_cmd->add_option("--checkpoint", rd_ckpt, "Checkpoint")->required();
  rd_cmd->add_option("--scene", rd_scene, "Global scene index")->capture_default_str();
  rd_cmd->add_option("--view", rd_view, "View index of the dataset pose")->capture_default_str();
  rd_cmd->add_option("--size", rd_size, "Output side (default: dataset size)");

  GradcheckOptions gc;
  std::string gc_out;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Compare reverse-mode gradients with central differences");
  gc_cmd->add_option("--bits", gc.bits, "32 or 64")->check(CLI::IsMember({32, 64}))->capture_default_str();
  gc_cmd->add_option("--points", gc.points, "Random points per operation")->capture_default_str();
  gc_cmd->add_option("--coords", gc.coords_per_group, "Coordinates probed per group and point")
      ->capture_default_str();
  gc_cmd->add_option("--seed", gc.seed, "Seed")->capture_default_str();
  gc_cmd->add_option("--epsilon", gc.epsilon, "Central-difference step")->capture_default_str();
  gc_cmd->add_option("--ops", gc.only, "Restrict to these operations");
  gc_cmd->add_option("--out", gc_out, "Output directory (report printed only when omitted)");

  app.require_subcommand(1);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  app.parse(reversed);

  if (gen_cmd->parsed()) {
    gen.mode = data::parse_camera_mode(gen_mode);
    const auto ds = data::generate_dataset(gen);
    data::save_dataset(ds, gen_out);
    write_json(fs::path(gen_out) / "resolved_config.json",
               {{"scenes", gen.scenes}, {"views", gen.views}, {"size", gen.size}, {"seed", gen.seed},
                {"mode", data::to_string(gen.mode)}, {"radius", gen.radius}, {"fov_y", gen.fov_y}});
    out << fmt::format("wrote {} scenes x {} views to {}\n", gen.scenes, gen.views, gen_out);
    return kExitOk;
  }

  if (cr_cmd->parsed()) {
    if (cr_fixtures.empty() == cr_run.empty()) throw Error(ErrorKind::kUsage, "usage", "give exactly one of --fixtures or --run");
    metrics::CostModel model;
    std::optional<double> tau_rgb, mu_rgb;
    if (!cr_fixtures.empty()) {
      const metrics::ReferenceFixtures p;
      model = p.ours;
      tau_rgb = p.tau_rgb;
      mu_rgb = p.mu_rgb;
    } else {
      model = metrics::fit_cost_model(run_costs(cr_run));
      if (!cr_baseline.empty()) {
        const auto base = metrics::fit_cost_model(run_costs(cr_baseline));
        tau_rgb = base.tau;
        mu_rgb = base.mu;
      }
    }
    model.validate();
    json rows = json::array();
    std::vector<std::vector<std::string>> table;
    for (double n : cr_n) {
      json row = {{"n", n}, {"ours_minutes", metrics::cost_time(model, n)}, {"ours_megabytes", metrics::cost_mem(model, n)}};
      std::vector<std::string> t = {fmt::format("{:g}", n), fmt::format("{:.4g}", metrics::cost_time(model, n)),
                                    fmt::format("{:.4g}", metrics::cost_mem(model, n))};
      if (tau_rgb) {
        row["rgb_minutes"] = metrics::baseline_time(*tau_rgb, n);
        row["rgb_megabytes"] = metrics::baseline_mem(*mu_rgb, n);
        t.push_back(fmt::format("{:.4g}", metrics::baseline_time(*tau_rgb, n)));
        t.push_back(fmt::format("{:.4g}", metrics::baseline_mem(*mu_rgb, n)));
      }
      rows.push_back(row);
      table.push_back(t);
    }
    json report = {{"model", {{"t1", model.t1}, {"tau", model.tau}, {"m1", model.m1}, {"mu", model.mu}, {"n1", model.n1}}},
                   {"rows", rows}};
    std::vector<std::string> header = {"N", "ours time [min]", "ours memory [MB]"};
    std::string text;
    if (tau_rgb) {
      header.push_back("rgb time [min]");
      header.push_back("rgb memory [MB]");
      report["tau_rgb"] = *tau_rgb;
      report["mu_rgb"] = *mu_rgb;
      if (*tau_rgb > model.tau) report["time_crossover"] = metrics::time_crossover(model, *tau_rgb);
      if (*mu_rgb > model.mu) report["memory_crossover"] = metrics::memory_crossover(model, *mu_rgb);
    }
    text = metrics::format_table(header, table);
    if (report.contains("time_crossover")) {
      text += fmt::format("time crossover N = {:.2f}\n", report["time_crossover"].get<double>());
    }
    if (report.contains("memory_crossover")) {
      text += fmt::format("memory crossover N = {:.2f}\n", report["memory_crossover"].get<double>());
    }
    write_json(fs::path(cr_out) / "cost_report.json", report);
    write_text(fs::path(cr_out) / "cost_report.txt", text);
    write_json(fs::path(cr_out) / "resolved_config.json",
               {{"fixtures", cr_fixtures}, {"run", cr_run}, {"baseline_run", cr_baseline}, {"n", cr_n}});
    out << text;
    return kExitOk;
  }

  if (gc_cmd->parsed()) {
    const auto report = run_gradcheck(gc);
    if (!gc_out.empty()) {
      write_json(fs::path(gc_out) / "gradcheck.json", report.to_json());
      write_text(fs::path(gc_out) / "gradcheck.txt", report.table());
      write_json(fs::path(gc_out) / "resolved_config.json",
                 {{"bits", gc.bits}, {"points", gc.points}, {"coords", gc.coords_per_group}, {"seed", gc.seed},
                  {"epsilon", gc.epsilon}, {"ops", gc.only}});
    }
    out << report.table();
    if (!report.passed()) {
      err << "error: gradcheck-failed: relative error above tolerance\n";
      return kExitNumeric;
    }
    return kExitOk;
  }

  // Everything below reads a dataset and a training configuration.
  TrainFlags* flags = s1_cmd->parsed() ? &s1 : s2_cmd->parsed() ? &s2 : ev_cmd->parsed() ? &ev
                    : ab_cmd->parsed() ? &ab : &rd;
  const auto config = flags->resolve();
  const fs::path out_dir(flags->out);
  fs::create_directories(out_dir);
  write_json(out_dir / "resolved_config.json", train::to_json(config));
  const bool f64 = config.precision == train::Precision::kF64;

  if (s2_cmd->parsed() && !fs::exists(s2_ckpt)) {
    throw_data_error("missing-checkpoint", "no stage-1 checkpoint at " + s2_ckpt);
  }
  const auto ds = data::load_dataset(flags->data);

  if (s1_cmd->parsed()) return f64 ? stage1_impl<double>(ds, config, s1, out, err) : stage1_impl<float>(ds, config, s1, out, err);
  if (s2_cmd->parsed()) {
    return f64 ? stage2_impl<double>(ds, config, s2, s2_ckpt, out, err)
               : stage2_impl<float>(ds, config, s2, s2_ckpt, out, err);
  }
  if (ev_cmd->parsed()) {
    const json j = f64 ? eval_impl<double>(ds, config, ev_ckpt, ev_stage) : eval_impl<float>(ds, config, ev_ckpt, ev_stage);
    std::vector<train::SceneMetrics> m;
    for (const auto& r : j["scenes"]) {
      m.push_back({r["scene"].get<int>(), r["psnr"].get<double>(), r["ssim"].get<double>(), r["test_views"].get<int>()});
    }
    const auto text = metrics_table(m, j["mean_psnr"].get<double>(), j["mean_ssim"].get<double>());
    write_json(out_dir / "eval.json", j);
    write_text(out_dir / "eval.txt", text);
    out << text;
    return kExitOk;
  }
  if (rd_cmd->parsed()) {
    const Image img = f64 ? render_impl<double>(ds, config, rd_ckpt, rd_scene, rd_view, rd_size)
                          : render_impl<float>(ds, config, rd_ckpt, rd_scene, rd_view, rd_size);
    const auto path = out_dir / fmt::format("scene_{}_view_{}.sigt", rd_scene, rd_view);
    data::write_blob(path, img);
    out << "wrote " << path.string() << "\n";
    return kExitOk;
  }

  // ablate
  std::vector<Variant> variants = {Variant::kOurs,      Variant::kRgbBaseline, Variant::kOursMicro,
                                   Variant::kOursMacro, Variant::kOursM1,      Variant::kOursRgb};
  if (!ab_variants.empty()) {
    variants.clear();
    for (const auto& v : ab_variants) variants.push_back(parse_variant(v));
  }
  json results = json::array();
  json timings = json::object();
  std::vector<std::vector<std::string>> table;
  for (Variant v : variants) {
    const auto vc = train::project_variant(config, v);
    const auto progress = flags->progress(err);
    if (progress) progress("variant " + to_string(v));
    const auto r = train::train_variant(ds, vc, progress);
    results.push_back({{"variant", to_string(v)},
                       {"config", train::to_json(vc)},
                       {"stage1", r.stage1.to_json()},
                       {"stage2", r.stage2.to_json()}});
    timings[to_string(v)] = {{"stage1", r.timing1.to_json()}, {"stage2", r.timing2.to_json()}};
    table.push_back({to_string(v), fmt::format("{:.2f}", r.stage1.mean_psnr), fmt::format("{:.4f}", r.stage1.mean_ssim),
                     fmt::format("{:.2f}", r.stage2.mean_psnr), fmt::format("{:.4f}", r.stage2.mean_ssim),
                     std::to_string(r.stage2.trainable_values_per_scene),
                     fmt::format("{:.6f}", r.stage2.stored_megabytes_per_scene)});
  }
  const auto text = metrics::format_table(
      {"variant", "S1 PSNR", "S1 SSIM", "S2 PSNR", "S2 SSIM", "values/scene", "mu [MB]"}, table);
  write_json(out_dir / "ablation.json", results);
  write_text(out_dir / "ablation.txt", text);
  write_json(out_dir / "ablation_timing.json", timings);
  out << text;
  return kExitOk;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return kExitUsage;
    case ErrorKind::kConfig: return kExitConfig;
    case ErrorKind::kData: return kExitData;
    case ErrorKind::kNumeric: return kExitNumeric;
  }
  return kExitConfig;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Multi-scene Tri-Plane radiance fields with a shared basis and latent rendering", "sig");
  try {
    return dispatch(app, out, err, args);
  } catch (const CLI::ParseError& e) {
    // Help requests arrive as parse errors with exit code 0; help() shows
    // the selected subcommand's flags.
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: usage: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.category() << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    err << "error: config: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return kExitConfig;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace sig::cli
