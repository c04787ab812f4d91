#include "sig/train/config.hpp"

#include <set>

#include "sig/common/bytes.hpp"
#include "sig/common/error.hpp"

namespace sig::train {

using nlohmann::json;

namespace {

const std::vector<std::string> kAllRoles = {kRoleMicro, kRoleRenderer, kRoleCoefficients,
                                            kRoleBasis, kRoleEncoder,  kRoleDecoder};

PhaseConfig phase(int epochs, int batch, std::map<std::string, double> lr, grad::ScheduleKind kind, double factor,
                  std::vector<int> milestones = {}) {
  PhaseConfig p;
  p.epochs = epochs;
  p.batch_size = batch;
  p.lr = std::move(lr);
  p.scheduler = kind;
  p.decay_factor = factor;
  p.milestones = std::move(milestones);
  return p;
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw_config_error(where + ": expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw_config_error(where + ": unknown key '" + k + "'");
  }
}

template <typename V>
void read(const json& j, const char* key, V& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const json::exception&) {
    throw_config_error(where + "." + key + ": wrong type");
  }
}

json stages_json(const std::vector<ae::ConvStage>& stages) {
  json a = json::array();
  for (const auto& s : stages) a.push_back({{"channels", s.channels}, {"factor", s.factor}});
  return a;
}

std::vector<ae::ConvStage> stages_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw_config_error(where + ": expected a list of stages");
  std::vector<ae::ConvStage> out;
  for (const auto& s : j) {
    reject_unknown(s, {"channels", "factor"}, where);
    ae::ConvStage st;
    read(s, "channels", st.channels, where);
    read(s, "factor", st.factor, where);
    out.push_back(st);
  }
  return out;
}

json phase_json(const PhaseConfig& p) {
  json sched = {{"kind", grad::to_string(p.scheduler)}, {"factor", p.decay_factor}};
  if (p.scheduler == grad::ScheduleKind::kMultistep) sched["milestones"] = p.milestones;
  return {{"batch_size", p.batch_size}, {"lr", p.lr}, {"scheduler", sched}};
}

void phase_from_json(const json& j, PhaseConfig& p, const std::string& where) {
  reject_unknown(j, {"batch_size", "lr", "scheduler"}, where);
  read(j, "batch_size", p.batch_size, where);
  if (j.contains("lr")) {
    const auto& lr = j.at("lr");
    if (!lr.is_object()) throw_config_error(where + ".lr: expected an object");
    for (const auto& [k, v] : lr.items()) {
      if (!p.lr.count(k)) throw_config_error(where + ".lr: role '" + k + "' is not trained in this phase");
      if (!v.is_number()) throw_config_error(where + ".lr." + k + ": expected a number");
      p.lr[k] = v.get<double>();
    }
  }
  if (j.contains("scheduler")) {
    const auto& s = j.at("scheduler");
    reject_unknown(s, {"kind", "factor", "milestones"}, where + ".scheduler");
    std::string kind = grad::to_string(p.scheduler);
    read(s, "kind", kind, where + ".scheduler");
    p.scheduler = grad::parse_schedule_kind(kind);
    read(s, "factor", p.decay_factor, where + ".scheduler");
    read(s, "milestones", p.milestones, where + ".scheduler");
  }
}

std::string precision_name(Precision p) { return p == Precision::kF32 ? "f32" : "f64"; }

}  // namespace

double PhaseConfig::lr_scale(int epoch) const {
  grad::ScheduleSpec s;
  s.kind = scheduler;
  s.base = 1.0;
  s.factor = decay_factor;
  s.milestones = milestones;
  return grad::lr_at(s, epoch);
}

TrainConfig default_config() {
  using grad::ScheduleKind;
  TrainConfig c;
  c.ae_pretraining = phase(0, 32, {{kRoleEncoder, 1e-3}, {kRoleDecoder, 1e-3}}, ScheduleKind::kMultistep, 1.0);
  c.warmup = phase(50, 512, {{kRoleMicro, 1e-2}, {kRoleRenderer, 1e-2}, {kRoleCoefficients, 1e-2}, {kRoleBasis, 1e-2}},
                   ScheduleKind::kMultistep, 0.3, {20, 40});
  c.training = phase(50, 32,
                     {{kRoleEncoder, 1e-4},
                      {kRoleDecoder, 1e-4},
                      {kRoleMicro, 1e-4},
                      {kRoleRenderer, 1e-4},
                      {kRoleCoefficients, 1e-2},
                      {kRoleBasis, 1e-2}},
                     ScheduleKind::kMultistep, 0.3, {20, 40});
  c.latent_supervision =
      phase(30, 32, {{kRoleMicro, 1e-2}, {kRoleRenderer, 1e-2}, {kRoleCoefficients, 1e-2}, {kRoleBasis, 1e-2}},
            ScheduleKind::kExponential, 0.941);
  c.rgb_alignment = phase(50, 32,
                          {{kRoleDecoder, 1e-4},
                           {kRoleMicro, 1e-3},
                           {kRoleRenderer, 1e-3},
                           {kRoleCoefficients, 1e-2},
                           {kRoleBasis, 1e-2}},
                          ScheduleKind::kExponential, 0.941);
  return c;
}

void validate(const TrainConfig& c) {
  if (c.n1 < 1 || c.n2 < 1) throw_config_error("n1 and n2 must be positive");
  if (c.resolution < 2) throw_config_error("Tri-Plane resolution must be at least 2");
  if (c.f_mic < 0 || c.f_mac < 0 || c.features() < 1) throw_config_error("feature counts must be nonnegative with F >= 1");
  if (c.basis_count < 0) throw_config_error("basis_count must be nonnegative");
  if ((c.f_mac > 0) != (c.basis_count > 0)) throw_config_error("macro features and basis_count must be both zero or both positive");
  switch (c.variant) {
    case Variant::kRgbBaseline:
    case Variant::kOursMicro:
      if (c.f_mac != 0) throw_config_error(to_string(c.variant) + " requires f_mac = 0");
      break;
    case Variant::kOursMacro:
      if (c.f_mic != 0) throw_config_error("ours-macro requires f_mic = 0");
      break;
    case Variant::kOursM1:
      if (c.basis_count != 1) throw_config_error("ours-m1 requires basis_count = 1");
      break;
    case Variant::kOurs:
    case Variant::kOursRgb:
      break;
  }
  if (c.render.samples < 1 || c.render.hidden < 1) throw_config_error("render samples and hidden width must be positive");
  const auto w = c.stage1_loss;
  if (w.latent < 0 || w.rgb < 0 || w.ae < 0 || c.stage2_lambda_latent < 0 || c.stage2_lambda_rgb < 0) {
    throw_config_error("loss weights must be nonnegative");
  }
  for (const auto* p : {&c.ae_pretraining, &c.warmup, &c.training, &c.latent_supervision, &c.rgb_alignment}) {
    if (p->epochs < 0) throw_config_error("epoch counts must be nonnegative");
    if (p->batch_size < 1) throw_config_error("batch sizes must be positive");
    for (const auto& [role, lr] : p->lr)
      if (!(lr > 0)) throw_config_error("learning rate for '" + role + "' must be positive");
    grad::ScheduleSpec s{p->scheduler, 1.0, p->decay_factor, p->milestones};
    grad::validate(s);
  }
  if (c.latent_space()) c.autoencoder.validate();
}

TrainConfig project_variant(const TrainConfig& config, Variant variant) {
  TrainConfig out = config;
  out.variant = variant;
  const auto split = triplane::project_variant(config.count_config(), variant);
  out.f_mic = split.f_mic;
  out.f_mac = split.f_mac;
  out.basis_count = split.basis_count;
  return out;
}

json to_json(const TrainConfig& c) {
  return {{"seed", c.seed},
          {"variant", to_string(c.variant)},
          {"precision", precision_name(c.precision)},
          {"general", {{"n1", c.n1}, {"n2", c.n2}}},
          {"triplane", {{"resolution", c.resolution}, {"f_mic", c.f_mic}, {"f_mac", c.f_mac}, {"basis_count", c.basis_count}}},
          {"render", {{"samples", c.render.samples}, {"hidden", c.render.hidden}, {"stratified", c.render.stratified}}},
          {"autoencoder", {{"encoder", stages_json(c.autoencoder.encoder)}, {"decoder", stages_json(c.autoencoder.decoder)}}},
          {"stage1",
           {{"ae_pretraining_epochs", c.ae_pretraining.epochs},
            {"pretraining_epochs", c.warmup.epochs},
            {"training_epochs", c.training.epochs},
            {"loss", {{"lambda_latent", c.stage1_loss.latent}, {"lambda_rgb", c.stage1_loss.rgb}, {"lambda_ae", c.stage1_loss.ae}}},
            {"ae_pretraining", phase_json(c.ae_pretraining)},
            {"warmup", phase_json(c.warmup)},
            {"training", phase_json(c.training)}}},
          {"stage2",
           {{"latent_supervision_epochs", c.latent_supervision.epochs},
            {"rgb_alignment_epochs", c.rgb_alignment.epochs},
            {"loss", {{"lambda_latent", c.stage2_lambda_latent}, {"lambda_rgb", c.stage2_lambda_rgb}}},
            {"latent_supervision", phase_json(c.latent_supervision)},
            {"rgb_alignment", phase_json(c.rgb_alignment)}}}};
}

TrainConfig config_from_json(const json& j, const TrainConfig& base) {
  TrainConfig c = base;
  reject_unknown(j, {"seed", "variant", "precision", "general", "triplane", "render", "autoencoder", "stage1", "stage2"},
                 "config");
  read(j, "seed", c.seed, "config");
  if (j.contains("variant")) {
    std::string v;
    read(j, "variant", v, "config");
    c.variant = parse_variant(v);
  }
  if (j.contains("precision")) {
    std::string p;
    read(j, "precision", p, "config");
    if (p != "f32" && p != "f64") throw_config_error("config.precision: expected f32 or f64");
    c.precision = p == "f32" ? Precision::kF32 : Precision::kF64;
  }
  if (j.contains("general")) {
    const auto& g = j.at("general");
    reject_unknown(g, {"n1", "n2"}, "general");
    read(g, "n1", c.n1, "general");
    read(g, "n2", c.n2, "general");
  }
  if (j.contains("triplane")) {
    const auto& t = j.at("triplane");
    reject_unknown(t, {"resolution", "f_mic", "f_mac", "basis_count"}, "triplane");
    read(t, "resolution", c.resolution, "triplane");
    read(t, "f_mic", c.f_mic, "triplane");
    read(t, "f_mac", c.f_mac, "triplane");
    read(t, "basis_count", c.basis_count, "triplane");
  }
  if (j.contains("render")) {
    const auto& r = j.at("render");
    reject_unknown(r, {"samples", "hidden", "stratified"}, "render");
    read(r, "samples", c.render.samples, "render");
    read(r, "hidden", c.render.hidden, "render");
    read(r, "stratified", c.render.stratified, "render");
  }
  if (j.contains("autoencoder")) {
    const auto& a = j.at("autoencoder");
    reject_unknown(a, {"encoder", "decoder"}, "autoencoder");
    if (a.contains("encoder")) c.autoencoder.encoder = stages_from_json(a.at("encoder"), "autoencoder.encoder");
    if (a.contains("decoder")) c.autoencoder.decoder = stages_from_json(a.at("decoder"), "autoencoder.decoder");
  }
  if (j.contains("stage1")) {
    const auto& s = j.at("stage1");
    reject_unknown(s,
                   {"ae_pretraining_epochs", "pretraining_epochs", "training_epochs", "loss", "ae_pretraining", "warmup",
                    "training"},
                   "stage1");
    read(s, "ae_pretraining_epochs", c.ae_pretraining.epochs, "stage1");
    read(s, "pretraining_epochs", c.warmup.epochs, "stage1");
    read(s, "training_epochs", c.training.epochs, "stage1");
    if (s.contains("loss")) {
      const auto& l = s.at("loss");
      reject_unknown(l, {"lambda_latent", "lambda_rgb", "lambda_ae"}, "stage1.loss");
      read(l, "lambda_latent", c.stage1_loss.latent, "stage1.loss");
      read(l, "lambda_rgb", c.stage1_loss.rgb, "stage1.loss");
      read(l, "lambda_ae", c.stage1_loss.ae, "stage1.loss");
    }
    if (s.contains("ae_pretraining")) phase_from_json(s.at("ae_pretraining"), c.ae_pretraining, "stage1.ae_pretraining");
    if (s.contains("warmup")) phase_from_json(s.at("warmup"), c.warmup, "stage1.warmup");
    if (s.contains("training")) phase_from_json(s.at("training"), c.training, "stage1.training");
  }
  if (j.contains("stage2")) {
    const auto& s = j.at("stage2");
    reject_unknown(s, {"latent_supervision_epochs", "rgb_alignment_epochs", "loss", "latent_supervision", "rgb_alignment"},
                   "stage2");
    read(s, "latent_supervision_epochs", c.latent_supervision.epochs, "stage2");
    read(s, "rgb_alignment_epochs", c.rgb_alignment.epochs, "stage2");
    if (s.contains("loss")) {
      const auto& l = s.at("loss");
      reject_unknown(l, {"lambda_latent", "lambda_rgb"}, "stage2.loss");
      read(l, "lambda_latent", c.stage2_lambda_latent, "stage2.loss");
      read(l, "lambda_rgb", c.stage2_lambda_rgb, "stage2.loss");
    }
    if (s.contains("latent_supervision"))
      phase_from_json(s.at("latent_supervision"), c.latent_supervision, "stage2.latent_supervision");
    if (s.contains("rgb_alignment")) phase_from_json(s.at("rgb_alignment"), c.rgb_alignment, "stage2.rgb_alignment");
  }
  return c;
}

TrainConfig load_config(const std::string& path, const TrainConfig& base) {
  const auto raw = bytes::read_file(path);
  json j;
  try {
    j = json::parse(raw.begin(), raw.end());
  } catch (const json::exception& e) {
    throw_config_error(path + ": invalid JSON: " + e.what());
  }
  return config_from_json(j, base);
}

}  // namespace sig::train
