#pragma once

#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mbridge/calibration.hpp"
#include "mbridge/config.hpp"
#include "mbridge/memory.hpp"
#include "mbridge/otmatch.hpp"
#include "mbridge/types.hpp"

namespace mbridge::pipeline {

// Free per-sample embeddings stand in for an encoder; everything else is the
// state the epoch loop carries between stages.
struct TrainState {
  Matrix visible;
  Matrix infrared;
  std::optional<std::vector<int>> truth_v;
  std::optional<std::vector<int>> truth_r;

  PseudoLabeling labels_v;
  PseudoLabeling labels_r;
  calibration::PrototypeSet protos_v;
  calibration::PrototypeSet protos_r;
  std::optional<otmatch::CrossModalMatch> match;
  memory::MemoryBank bank_v{{}, 0.0, memory::BankKind::visible};
  memory::MemoryBank bank_r{{}, 0.0, memory::BankKind::infrared};
  std::optional<memory::MemoryBank> hybrid;
  // The modality whose clusters index the hybrid memory.
  Modality hybrid_anchor = Modality::infrared;

  int epoch = 0;
  std::mt19937_64 rng;

  // Set by prepare_epoch for the current epoch.
  bool nrl_active = false;
};

struct EpochReport {
  int epoch = 0;
  std::optional<double> l_ms;
  std::optional<double> l_mi;
  std::optional<double> l_nrl;
  std::optional<double> l_total;
  int y_v = 0;
  int y_r = 0;
  std::optional<double> ari_v;
  std::optional<double> ari_r;
  std::optional<double> match_acc;
  std::optional<double> rank1;
  std::optional<double> map;
  std::vector<std::string> warnings;
};

struct RunReport {
  std::vector<EpochReport> epochs;
  TrainState state;
};

TrainState init_state(const ModalityDataset& visible, const ModalityDataset& infrared,
                      const PipelineConfig& config);

// Stages (1)-(4): cluster, calibrate, refresh banks, match and build the
// hybrid memory.
void prepare_epoch(TrainState& state, const PipelineConfig& config, EpochReport& report);
// Stage (5): batched optimisation of the embeddings followed by momentum
// updates; then evaluation. Advances the epoch counter.
void train_epoch(TrainState& state, const PipelineConfig& config, EpochReport& report);

EpochReport run_epoch(TrainState& state, const PipelineConfig& config);

RunReport run(const PipelineConfig& config, const ModalityDataset& visible,
              const ModalityDataset& infrared);

// Header: epoch,L_MS,L_MI,L_NRL,L_total,Y_v,Y_r,ARI_v,ARI_r,match_acc,rank1,mAP.
// Absent values are left empty.
void write_metrics_csv(std::ostream& out, const std::vector<EpochReport>& epochs);

struct AblationToggle {
  bool npc = false;
  bool nrl = false;
  bool otpm = false;
  bool mhl = false;

  bool operator==(const AblationToggle&) const = default;
};

// The eight-row module grid, baseline first and the full method last.
std::vector<AblationToggle> ablation_table();

struct AblationRow {
  int order = 0;  // position in ablation_table(), 0 if not part of it
  AblationToggle toggle;
  double rank1 = 0.0;
  double map = 0.0;
  double ari_v = 0.0;
  double ari_r = 0.0;
};

// Runs every toggle with the config's seed. Rejects MHL without OTPM before
// running anything.
std::vector<AblationRow> ablate(const PipelineConfig& config, const ModalityDataset& visible,
                                const ModalityDataset& infrared,
                                const std::vector<AblationToggle>& grid);

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows);

}  // namespace mbridge::pipeline
