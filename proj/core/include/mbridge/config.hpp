#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace mbridge {

struct PipelineConfig {
  // Calibration.
  int kappa = 30;
  int top_k = 20;
  double rho = 0.5;
  // Optimal transport.
  double lambda_reg = 25.0;
  int sinkhorn_max_iters = 1000;
  double sinkhorn_tol = 1e-8;
  // Contrastive learning and memory.
  double tau = 0.5;
  double mu = 0.1;
  double gamma = 1.0;
  double sigma = 1.0;
  double alpha = 0.5;
  double beta1 = 0.5;
  double beta2 = 10.0;
  // Clustering.
  double dbscan_eps = 0.6;
  int dbscan_min_pts = 4;
  // Schedule.
  int warmup_epochs = 50;
  int total_epochs = 100;
  int batch_p = 8;
  int batch_k = 4;
  // 0 picks ceil(max(N_v, N_r) / (batch_p * batch_k)).
  int iters_per_epoch = 0;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  int threads = 1;
  // Ablation switches.
  bool use_npc = true;
  bool use_nrl = true;
  bool use_otpm = true;
  bool use_mhl = true;

  // Throws Error on out-of-range values.
  void validate() const;

  bool operator==(const PipelineConfig&) const = default;
};

// Plain-text "key = value" records. '#' starts a comment. Unknown keys are
// rejected.
void apply_config_entry(PipelineConfig& cfg, std::string_view key, std::string_view value);
PipelineConfig parse_config(std::istream& in, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

// Writes every field, in a fixed order, such that parse_config reproduces
// the same config.
void write_config(std::ostream& out, const PipelineConfig& cfg);
std::string to_string(const PipelineConfig& cfg);

}  // namespace mbridge
