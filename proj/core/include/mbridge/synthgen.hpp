#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mbridge/types.hpp"

namespace mbridge::synth {

// Two-modality Gaussian identity mixture on the unit sphere.
//
// Every identity c owns a base direction b_c drawn uniformly on the sphere.
// Each modality t owns one offset vector o_t of length modality_shift_norm,
// shared by all identities. A sample is normalize(b_c + o_t + e) with
// e ~ N(0, intra_sigma^2 I). Rows are emitted identity-major.
struct SynthSpec {
  int n_identities = 10;
  int per_identity_per_modality = 20;
  int d = 32;
  double intra_sigma = 0.05;
  double modality_shift_norm = 0.5;
  double noise_frac = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SynthData {
  ModalityDataset visible;
  ModalityDataset infrared;
  // n_identities x d, unit rows.
  Matrix bases;
};

SynthData generate(const SynthSpec& spec);

struct Corruption {
  std::vector<int> labels;
  // Ascending positions whose label was changed.
  std::vector<std::size_t> corrupted;
};

// Reassigns exactly floor(noise_frac * N) entries, each to a uniformly
// chosen class different from its current one.
Corruption corrupt_labels(const std::vector<int>& truth, double noise_frac, int n_classes,
                          std::uint64_t seed);

}  // namespace mbridge::synth
