#include "sig/train/trainer.hpp"

#include <chrono>
#include <fmt/format.h>
#include <set>

#include "sig/common/error.hpp"
#include "sig/grad/adam.hpp"
#include "sig/metrics/metrics.hpp"
#include "sig/triplane/trainable_count.hpp"

namespace sig::train {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finaliser over a combined key
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string role_of(std::string_view group) {
  if (group.starts_with("micro_planes[")) return kRoleMicro;
  if (group.starts_with("basis_weights[")) return kRoleCoefficients;
  if (group == grad::kBasisPlanes) return kRoleBasis;
  if (group == grad::kRendererMlp) return kRoleRenderer;
  if (group == grad::kEncoder) return kRoleEncoder;
  if (group == grad::kDecoder) return kRoleDecoder;
  throw_config_error("no learning-rate role for group '" + std::string(group) + "'");
}

struct PhasePlan {
  std::string name;
  const PhaseConfig* config = nullptr;
  std::vector<std::string> roles;
  TermWeights weights;
};

template <typename T>
std::set<std::string, std::less<>> active_groups(const ParamStore<T>& params, const std::vector<std::string>& roles,
                                                 const std::set<int>& scenes) {
  std::set<std::string, std::less<>> out;
  auto add = [&](std::string_view name) {
    if (params.contains(name)) out.insert(std::string(name));
  };
  for (const auto& role : roles) {
    if (role == kRoleMicro) {
      for (int s : scenes) add(grad::micro_planes_name(s));
    } else if (role == kRoleCoefficients) {
      for (int s : scenes) add(grad::basis_weights_name(s));
    } else if (role == kRoleBasis) {
      add(grad::kBasisPlanes);
    } else if (role == kRoleRenderer) {
      add(grad::kRendererMlp);
    } else if (role == kRoleEncoder) {
      add(grad::kEncoder);
    } else if (role == kRoleDecoder) {
      add(grad::kDecoder);
    }
  }
  return out;
}

std::vector<std::string> term_names(const ModelSpec& spec, const TermWeights& w) {
  if (!spec.latent) return {"rgb"};
  std::vector<std::string> out;
  if (w.latent != 0) out.push_back("latent");
  if (w.rgb != 0) out.push_back("rgb");
  if (w.ae != 0) out.push_back("ae");
  return out;
}

template <typename T>
PhaseLog run_phase(ParamStore<T>& params, const ModelSpec& spec, const data::SceneDataset& ds, int first_scene,
                   const PhasePlan& plan, int stage, int phase_index, std::uint64_t seed, const ProgressFn& progress) {
  const PhaseConfig& pc = *plan.config;
  for (const auto& role : plan.roles) {
    if (!pc.lr.count(role)) throw_config_error("phase '" + plan.name + "' has no learning rate for '" + role + "'");
  }
  PhaseLog log;
  log.name = plan.name;
  log.active_terms = term_names(spec, plan.weights);
  {
    std::set<int> all;
    for (int s = 0; s < static_cast<int>(ds.scenes.size()); ++s) all.insert(first_scene + s);
    const auto groups = active_groups(params, plan.roles, all);
    log.optimized_groups.assign(groups.begin(), groups.end());
  }
  if (pc.epochs == 0) return log;

  const int image_size = ds.options.size;
  const bool encoder_trains = spec.latent && std::find(plan.roles.begin(), plan.roles.end(), kRoleEncoder) != plan.roles.end();
  const bool renders = !spec.latent || plan.weights.latent != 0 || plan.weights.rgb != 0;
  const bool needs_latent = spec.latent && (plan.weights.latent != 0 || plan.weights.ae != 0);

  struct Slot {
    int scene;  // local index
    int view;
  };
  std::vector<Slot> slots;
  for (int s = 0; s < static_cast<int>(ds.scenes.size()); ++s)
    for (int j : ds.split.train) slots.push_back({s, j});
  if (slots.empty()) throw_config_error("phase '" + plan.name + "' has no training views");

  // With the encoder frozen the targets E(x) and the background are fixed
  // for the whole phase.
  std::vector<std::vector<Image>> latents;
  std::vector<T> bg = background(spec, params, image_size);
  if (needs_latent && !encoder_trains) {
    ae::AutoencoderParams<T> ae_params;
    const auto enc = params.values(grad::kEncoder);
    ae_params.encoder.assign(enc.begin(), enc.end());
    latents.resize(ds.scenes.size());
    for (std::size_t s = 0; s < ds.scenes.size(); ++s) {
      latents[s].resize(ds.scenes[s].images.size());
      for (int j : ds.split.train) latents[s][j] = ae::encode(ds.scenes[s].images[j], ae_params, spec.autoencoder);
    }
  }

  grad::OptimizerState<T> opt;
  const std::uint64_t phase_seed = mix(mix(seed, static_cast<std::uint64_t>(stage)), static_cast<std::uint64_t>(phase_index));
  std::int64_t step = 0;
  for (int epoch = 0; epoch < pc.epochs; ++epoch) {
    const double scale = pc.lr_scale(epoch);
    std::vector<Slot> order = slots;
    std::mt19937_64 gen(mix(phase_seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(render::uniform01(gen) * static_cast<double>(i + 1));
      std::swap(order[i], order[j]);
    }
    TermValues sums;
    for (std::size_t begin = 0; begin < order.size(); begin += pc.batch_size) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(pc.batch_size));
      if (encoder_trains && renders) bg = background(spec, params, image_size);
      std::set<int> batch_scenes;
      for (std::size_t i = begin; i < end; ++i) batch_scenes.insert(first_scene + order[i].scene);
      const auto active = active_groups(params, plan.roles, batch_scenes);
      grad::Gradients<T> total;
      for (std::size_t i = begin; i < end; ++i) {
        const auto& slot = order[i];
        const auto& scene = ds.scenes[slot.scene];
        TrainItem item;
        item.scene = first_scene + slot.scene;
        item.pose = scene.views[slot.view].pose;
        item.image = &scene.images[slot.view];
        item.latent = latents.empty() ? nullptr : &latents[slot.scene][slot.view];
        item.sample_seed = mix(phase_seed, static_cast<std::uint64_t>(epoch) * 1000003ULL + i);
        TermValues tv;
        grad::ValueAndGrad<T> vg;
        try {
          vg = grad::value_and_grad<T>(
              [&](Tape<T>& tape) { return item_objective(tape, spec, item, plan.weights, std::span<const T>(bg), &tv); },
              params, active);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kNumeric) throw;
          throw_numeric_error(fmt::format("stage {} {} epoch {} step {}: {}", stage, plan.name, epoch, step, e.what()));
        }
        sums.latent += tv.latent;
        sums.rgb += tv.rgb;
        sums.ae += tv.ae;
        sums.total += tv.total;
        for (auto& [name, g] : vg.grads) {
          auto it = total.find(name);
          if (it == total.end()) {
            total.emplace(name, std::move(g));
          } else {
            for (std::size_t k = 0; k < g.size(); ++k) it->second[k] += g[k];
          }
        }
      }
      const T inv = T(1) / static_cast<T>(end - begin);
      for (auto& [name, g] : total)
        for (auto& v : g) v *= inv;
      grad::adam_step(params, total, opt, grad::LearningRateFn([&](std::string_view group) {
                        return pc.lr.at(role_of(group)) * scale;
                      }));
      ++step;
    }
    const double n = static_cast<double>(order.size());
    EpochLog el;
    el.epoch = epoch;
    el.lr_scale = scale;
    for (const auto& t : log.active_terms) {
      if (t == "latent") el.losses["latent"] = sums.latent / n;
      if (t == "rgb") el.losses["rgb"] = sums.rgb / n;
      if (t == "ae") el.losses["ae"] = sums.ae / n;
    }
    el.losses["total"] = sums.total / n;
    if (!std::isfinite(el.losses["total"])) {
      throw_numeric_error(fmt::format("stage {} {} epoch {}: non-finite loss", stage, plan.name, epoch));
    }
    if (progress) {
      std::string line = fmt::format("stage{} {} epoch {}/{}", stage, plan.name, epoch + 1, pc.epochs);
      for (const auto& [k, v] : el.losses) line += fmt::format(" {}={:.6f}", k, v);
      progress(line);
    }
    log.epochs.push_back(std::move(el));
  }
  return log;
}

template <typename T>
double store_megabytes(const ParamStore<T>& params) {
  return static_cast<double>(params.total_values()) * 4.0 / triplane::kBytesPerMegabyte;
}

void fill_means(TrainReport& r) {
  r.mean_psnr = r.mean_ssim = 0;
  int n = 0;
  for (const auto& m : r.metrics) {
    if (m.test_views == 0) continue;
    r.mean_psnr += m.psnr;
    r.mean_ssim += m.ssim;
    ++n;
  }
  if (n > 0) {
    r.mean_psnr /= n;
    r.mean_ssim /= n;
  }
}

std::vector<std::string> base_roles() { return {kRoleMicro, kRoleCoefficients, kRoleBasis, kRoleRenderer}; }

}  // namespace

json TrainReport::to_json() const {
  json phases_j = json::array();
  for (const auto& p : phases) {
    json epochs_j = json::array();
    for (const auto& e : p.epochs) epochs_j.push_back({{"epoch", e.epoch}, {"lr_scale", e.lr_scale}, {"losses", e.losses}});
    phases_j.push_back(
        {{"name", p.name}, {"active_terms", p.active_terms}, {"optimized_groups", p.optimized_groups}, {"epochs", epochs_j}});
  }
  json metrics_j = json::array();
  for (const auto& m : metrics)
    metrics_j.push_back({{"scene", m.scene}, {"psnr", m.psnr}, {"ssim", m.ssim}, {"test_views", m.test_views}});
  return {{"stage", stage},
          {"variant", to_string(variant)},
          {"scene_offset", scene_offset},
          {"scenes", scenes},
          {"phases", phases_j},
          {"metrics", metrics_j},
          {"mean_psnr", mean_psnr},
          {"mean_ssim", mean_ssim},
          {"trainable_values_per_scene", trainable_values_per_scene},
          {"stored_megabytes_per_scene", stored_megabytes_per_scene},
          {"total_megabytes", total_megabytes}};
}

json TrainTiming::to_json() const {
  return {{"total_seconds", total_seconds}, {"phase_seconds", phase_seconds}, {"per_scene_minutes", per_scene_minutes}};
}

json checkpoint_meta(const TrainConfig& config, const data::SceneDataset& dataset, int stage) {
  return {{"stage", stage},
          {"config", to_json(config)},
          {"bound_radius", dataset.bound_radius},
          {"image_size", dataset.options.size},
          {"dataset_seed", dataset.options.seed}};
}

template <typename T>
std::vector<SceneMetrics> evaluate(const ParamStore<T>& params, const ModelSpec& spec, const data::SceneDataset& ds,
                                   int first_scene) {
  std::vector<SceneMetrics> out;
  const std::vector<T> bg = background(spec, params, ds.options.size);
  for (std::size_t s = 0; s < ds.scenes.size(); ++s) {
    SceneMetrics m;
    m.scene = first_scene + static_cast<int>(s);
    for (int j : ds.split.test) {
      const Image pred = render_view(params, spec, m.scene, ds.scenes[s].views[j].pose, std::span<const T>(bg));
      m.psnr += metrics::psnr(pred, ds.scenes[s].images[j]);
      m.ssim += metrics::ssim(pred, ds.scenes[s].images[j]);
      ++m.test_views;
    }
    if (m.test_views > 0) {
      m.psnr /= m.test_views;
      m.ssim /= m.test_views;
    }
    out.push_back(m);
  }
  return out;
}

template <typename T>
StageResult<T> train_stage1(const data::SceneDataset& dataset, const TrainConfig& config, const ProgressFn& progress) {
  validate(config);
  if (static_cast<int>(dataset.scenes.size()) < config.n1) {
    throw_config_error(fmt::format("stage 1 needs {} scenes, dataset has {}", config.n1, dataset.scenes.size()));
  }
  const auto start = Clock::now();
  const data::SceneDataset s1 = dataset.subset(0, config.n1);
  const ModelSpec spec = ModelSpec::from_config(config, dataset.bound_radius);
  StageResult<T> r;
  std::mt19937_64 gen(config.seed);
  init_shared_groups(r.params, spec, gen);
  for (int i = 0; i < config.n1; ++i) init_scene_groups(r.params, spec, i, gen);

  const bool latent = spec.latent;
  std::vector<std::string> all_roles = base_roles();
  if (latent) {
    all_roles.push_back(kRoleEncoder);
    all_roles.push_back(kRoleDecoder);
  }
  std::vector<PhasePlan> plans;
  if (latent && config.ae_pretraining.epochs > 0) {
    plans.push_back({"ae_pretraining", &config.ae_pretraining, {kRoleEncoder, kRoleDecoder}, TermWeights{0, 0, 1}});
  }
  plans.push_back(
      {"warmup", &config.warmup, base_roles(), latent ? TermWeights{config.stage1_loss.latent, 0, 0} : TermWeights{0, 1, 0}});
  plans.push_back({"training", &config.training, all_roles,
                   latent ? TermWeights{config.stage1_loss.latent, config.stage1_loss.rgb, config.stage1_loss.ae}
                          : TermWeights{0, 1, 0}});
  for (std::size_t p = 0; p < plans.size(); ++p) {
    const auto t0 = Clock::now();
    r.report.phases.push_back(run_phase(r.params, spec, s1, 0, plans[p], 1, static_cast<int>(p), config.seed, progress));
    r.timing.phase_seconds[plans[p].name] = seconds_since(t0);
  }
  r.report.stage = 1;
  r.report.variant = config.variant;
  r.report.scene_offset = 0;
  r.report.scenes = config.n1;
  r.report.metrics = evaluate(r.params, spec, s1, 0);
  fill_means(r.report);
  const auto count = triplane::trainable_count(config.count_config(), triplane::Stage::kOne, config.variant);
  r.report.trainable_values_per_scene = count.values;
  r.report.stored_megabytes_per_scene = count.megabytes();
  r.report.total_megabytes = store_megabytes(r.params);
  r.timing.total_seconds = seconds_since(start);
  r.timing.per_scene_minutes = r.timing.total_seconds / 60.0 / config.n1;
  return r;
}

template <typename T>
StageResult<T> train_stage2(const data::SceneDataset& dataset, ParamStore<T> stage1, const TrainConfig& config,
                            const ProgressFn& progress) {
  validate(config);
  if (static_cast<int>(dataset.scenes.size()) < config.n1 + config.n2) {
    throw_config_error(
        fmt::format("stage 2 needs scenes [{}, {}), dataset has {}", config.n1, config.n1 + config.n2, dataset.scenes.size()));
  }
  const ModelSpec spec = ModelSpec::from_config(config, dataset.bound_radius);
  for (std::string_view g : {grad::kRendererMlp, grad::kEncoder, grad::kDecoder}) {
    if (!spec.latent && g != grad::kRendererMlp) continue;
    if (!stage1.contains(g)) throw_config_error("stage-1 parameters lack group '" + std::string(g) + "'");
  }
  if (spec.f_mac > 0 && !stage1.contains(grad::kBasisPlanes)) throw_config_error("stage-1 parameters lack the basis");
  const auto start = Clock::now();
  const data::SceneDataset s2 = dataset.subset(config.n1, config.n1 + config.n2);
  StageResult<T> r;
  r.params = std::move(stage1);
  std::mt19937_64 gen(mix(config.seed, 2));
  for (int i = 0; i < config.n2; ++i) init_scene_groups(r.params, spec, config.n1 + i, gen);

  std::vector<std::string> ra_roles = base_roles();
  if (spec.latent) ra_roles.push_back(kRoleDecoder);
  const bool latent = spec.latent;
  const std::vector<PhasePlan> plans = {
      {"latent_supervision", &config.latent_supervision, base_roles(),
       latent ? TermWeights{config.stage2_lambda_latent, 0, 0} : TermWeights{0, 1, 0}},
      {"rgb_alignment", &config.rgb_alignment, ra_roles, TermWeights{0, latent ? config.stage2_lambda_rgb : 1.0, 0}},
  };
  for (std::size_t p = 0; p < plans.size(); ++p) {
    const auto t0 = Clock::now();
    r.report.phases.push_back(
        run_phase(r.params, spec, s2, config.n1, plans[p], 2, static_cast<int>(p), config.seed, progress));
    r.timing.phase_seconds[plans[p].name] = seconds_since(t0);
  }
  r.report.stage = 2;
  r.report.variant = config.variant;
  r.report.scene_offset = config.n1;
  r.report.scenes = config.n2;
  r.report.metrics = evaluate(r.params, spec, s2, config.n1);
  fill_means(r.report);
  const auto count = triplane::trainable_count(config.count_config(), triplane::Stage::kTwo, config.variant);
  r.report.trainable_values_per_scene = count.values;
  r.report.stored_megabytes_per_scene = count.megabytes();
  r.report.total_megabytes = count.megabytes() * config.n2;
  r.timing.total_seconds = seconds_since(start);
  r.timing.per_scene_minutes = r.timing.total_seconds / 60.0 / config.n2;
  return r;
}

namespace {

template <typename T>
VariantResult run_variant(const data::SceneDataset& dataset, const TrainConfig& config, const ProgressFn& progress) {
  VariantResult out;
  out.variant = config.variant;
  auto s1 = train_stage1<T>(dataset, config, progress);
  out.stage1 = s1.report;
  out.timing1 = s1.timing;
  auto s2 = train_stage2<T>(dataset, std::move(s1.params), config, progress);
  out.stage2 = s2.report;
  out.timing2 = s2.timing;
  return out;
}

}  // namespace

VariantResult train_variant(const data::SceneDataset& dataset, const TrainConfig& config, const ProgressFn& progress) {
  validate(config);
  return config.precision == Precision::kF64 ? run_variant<double>(dataset, config, progress)
                                             : run_variant<float>(dataset, config, progress);
}

#define SIG_INSTANTIATE_TRAINER(T)                                                                                  \
  template StageResult<T> train_stage1<T>(const data::SceneDataset&, const TrainConfig&, const ProgressFn&);        \
  template StageResult<T> train_stage2<T>(const data::SceneDataset&, ParamStore<T>, const TrainConfig&,             \
                                          const ProgressFn&);                                                       \
  template std::vector<SceneMetrics> evaluate<T>(const ParamStore<T>&, const ModelSpec&, const data::SceneDataset&, \
                                                 int);

SIG_INSTANTIATE_TRAINER(float)
SIG_INSTANTIATE_TRAINER(double)

}  // namespace sig::train
