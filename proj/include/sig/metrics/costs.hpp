#pragma once

#include <string>
#include <vector>

namespace sig::metrics {

/// Affine scaling laws for training N scenes with the two-stage method:
///   t(N) = t1 + (N - N1) tau,   m(N) = m1 + (N - N1) mu.
/// Times are minutes, memory MB (2^20 bytes).
struct CostModel {
  double t1 = 0;
  double tau = 0;
  double m1 = 0;
  double mu = 0;
  int n1 = 0;

  void validate() const;  // all nonnegative, n1 >= 0
};

/// Throws kConfig when n < model.n1.
double cost_time(const CostModel& model, double n);
double cost_mem(const CostModel& model, double n);

/// Per-scene baselines: N tau_rgb and N mu_rgb.
double baseline_time(double tau_rgb, double n);
double baseline_mem(double mu_rgb, double n);

/// Root of t1 + (N - N1) tau = N tau_rgb, i.e. (t1 - N1 tau) / (tau_rgb - tau).
/// Beyond it the two-stage method is cheaper. Throws kConfig when
/// tau_rgb <= tau (no crossover).
double time_crossover(const CostModel& model, double tau_rgb);
double memory_crossover(const CostModel& model, double mu_rgb);

/// Reference numbers from the published measurements: Stage 1 of 500 scenes
/// took 31.2 h and 361 MB; afterwards 2.23 min and 0.48 MB per scene versus
/// 16.02 min and 1.50 MB per scene for independent RGB Tri-Planes.
struct ReferenceFixtures {
  CostModel ours{1872.0, 2.23, 361.0, 0.48, 500};
  double tau_rgb = 16.02;
  double mu_rgb = 1.50;
};

/// Cost measurements of one training stage.
struct StageCost {
  int stage = 1;
  double total_minutes = 0;
  double total_megabytes = 0;
  int scenes = 0;
  std::vector<double> scene_minutes;    // per scene wall clock
  std::vector<double> scene_megabytes;  // per scene stored bytes / 2^20
};

/// t1, m1 summed over stage-1 costs; tau, mu as the mean over all stage-2
/// scenes; N1 the number of stage-1 scenes. Throws kConfig when either stage
/// is missing or a stage-2 report has no scenes.
CostModel fit_cost_model(const std::vector<StageCost>& reports);

/// Left-aligned text columns separated by two spaces, header underlined.
std::string format_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);

}  // namespace sig::metrics
