#include "sig/metrics/costs.hpp"

#include <algorithm>

#include "sig/common/error.hpp"

namespace sig::metrics {

void CostModel::validate() const {
  if (t1 < 0 || tau < 0 || m1 < 0 || mu < 0 || n1 < 0) throw_config_error("cost model parameters must be nonnegative");
}

double cost_time(const CostModel& model, double n) {
  if (n < model.n1) throw_config_error("cost_time: N below the stage-1 scene count");
  return model.t1 + (n - model.n1) * model.tau;
}

double cost_mem(const CostModel& model, double n) {
  if (n < model.n1) throw_config_error("cost_mem: N below the stage-1 scene count");
  return model.m1 + (n - model.n1) * model.mu;
}

double baseline_time(double tau_rgb, double n) { return n * tau_rgb; }
double baseline_mem(double mu_rgb, double n) { return n * mu_rgb; }

double time_crossover(const CostModel& model, double tau_rgb) {
  if (!(tau_rgb > model.tau)) throw_config_error("time_crossover: per-scene baseline time must exceed tau");
  return (model.t1 - model.n1 * model.tau) / (tau_rgb - model.tau);
}

double memory_crossover(const CostModel& model, double mu_rgb) {
  if (!(mu_rgb > model.mu)) throw_config_error("memory_crossover: per-scene baseline memory must exceed mu");
  return (model.m1 - model.n1 * model.mu) / (mu_rgb - model.mu);
}

CostModel fit_cost_model(const std::vector<StageCost>& reports) {
  CostModel m;
  bool have1 = false;
  double tau_sum = 0, mu_sum = 0;
  int count2 = 0;
  for (const auto& r : reports) {
    if (r.stage == 1) {
      have1 = true;
      m.t1 += r.total_minutes;
      m.m1 += r.total_megabytes;
      m.n1 += r.scenes;
    } else if (r.stage == 2) {
      if (r.scene_minutes.empty() || r.scene_minutes.size() != r.scene_megabytes.size()) {
        throw_config_error("fit_cost_model: stage-2 report without per-scene costs");
      }
      for (std::size_t i = 0; i < r.scene_minutes.size(); ++i) {
        tau_sum += r.scene_minutes[i];
        mu_sum += r.scene_megabytes[i];
        ++count2;
      }
    } else {
      throw_config_error("fit_cost_model: unknown stage " + std::to_string(r.stage));
    }
  }
  if (!have1 || count2 == 0) throw_config_error("fit_cost_model needs at least one stage-1 and one stage-2 report");
  m.tau = tau_sum / count2;
  m.mu = mu_sum / count2;
  return m;
}

std::string format_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) width[c] = std::max(width[c], row[c].size());
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t c = 0; c < width.size(); ++c) {
      const std::string cell = c < cells.size() ? cells[c] : "";
      s += cell;
      if (c + 1 < width.size()) s += std::string(width[c] - cell.size() + 2, ' ');
    }
    return s + "\n";
  };
  std::string out = line(header);
  std::vector<std::string> rule;
  for (auto w : width) rule.emplace_back(w, '-');
  out += line(rule);
  for (const auto& row : rows) out += line(row);
  return out;
}

}  // namespace sig::metrics
