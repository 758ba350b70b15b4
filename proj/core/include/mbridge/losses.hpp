#pragma once

#include <optional>
#include <vector>

#include "mbridge/memory.hpp"
#include "mbridge/types.hpp"

namespace mbridge::losses {

struct Batch {
  Matrix features;  // N_B x d, unit rows
  std::vector<int> labels;
  Modality modality = Modality::visible;

  std::size_t size() const { return features.rows(); }
};

struct LossValue {
  double value = 0.0;
  Matrix grad;  // d loss / d features, same shape as the batch

  static LossValue zero(std::size_t rows, std::size_t cols) { return {0.0, Matrix(rows, cols)}; }
};

// Pairwise weights exp(-d_ij^2 / sigma). The loss treats them as constants.
Matrix nrl_weights(const Matrix& features, double sigma);

// (1/N_B) sum_ij [ w_ij d_ij^2 + (1 - w_ij) max(0, gamma - d_ij)^2 ] over
// ordered pairs, with d_ij the Euclidean distance.
LossValue nrl_loss(const Batch& batch, double gamma, double sigma);
// Same, with caller-supplied weights held fixed.
LossValue nrl_loss_with_weights(const Matrix& features, const Matrix& weights, double gamma);

// -(1/N_B) sum_i log softmax_k(f_i . M_k / tau)[y_i]. `label_map`, when
// given, translates batch labels into memory rows. Memory rows receive no
// gradient.
LossValue cluster_nce(const Batch& batch, const Matrix& memory,
                      const std::vector<int>* label_map, double tau);

// Parity-alternating contrastive loss on the hybrid memory: even epochs
// expect a batch from the non-anchor modality (labels translated through
// `to_anchor`), odd epochs a batch from the anchor modality.
LossValue modality_invariant_loss(const Batch& batch, const memory::MemoryBank& hybrid, int epoch,
                                  const std::vector<int>& to_anchor, double tau,
                                  Modality anchor = Modality::infrared);

// L = ms + beta1 * mi + beta2 * nrl, with gradients combined the same way.
LossValue total_loss(const LossValue& ms, const LossValue& mi, const LossValue& nrl, double beta1,
                     double beta2);

}  // namespace mbridge::losses
