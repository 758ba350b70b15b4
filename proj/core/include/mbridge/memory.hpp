#pragma once

#include <span>
#include <vector>

#include "mbridge/calibration.hpp"
#include "mbridge/types.hpp"

namespace mbridge {

namespace otmatch {
struct CrossModalMatch;
}

namespace memory {

enum class BankKind { visible, infrared, hybrid };

// Y x d cluster memory. Rows stay unit-norm across updates.
struct MemoryBank {
  Matrix rows;
  double mu = 0.1;
  BankKind kind = BankKind::visible;

  std::size_t size() const { return rows.rows(); }
};

BankKind bank_kind(Modality m);

// Row c is the normalized mean of the features labelled c.
MemoryBank init_from_centroids(const FeatureMatrix& features, const PseudoLabeling& labeling,
                               double mu, BankKind kind);

// Row i = normalize(alpha * anchor_i + (1 - alpha) * partner), where the
// anchor side is `anchor` (infrared unless the caller swapped roles) and the
// partner is the matched prototype of the other modality.
MemoryBank build_hybrid(const MemoryBank& anchor_bank, const calibration::PrototypeSet& visible,
                        const calibration::PrototypeSet& infrared,
                        const otmatch::CrossModalMatch& match, double alpha,
                        Modality anchor = Modality::infrared);

// row <- normalize(mu * row + (1 - mu) * f). mu == 1 keeps the row and
// mu == 0 copies f, both bit-exactly.
void momentum_update(MemoryBank& bank, int label, std::span<const double> f, double mu);

// Alternating hybrid update. Even epochs take samples of the non-anchor
// modality and write to rows translated through `to_anchor`; odd epochs take
// anchor-modality samples with their own labels.
void hybrid_update(MemoryBank& bank, int epoch, const Matrix& features,
                   const std::vector<int>& labels, Modality batch_modality,
                   const std::vector<int>& to_anchor, double mu,
                   Modality anchor = Modality::infrared);

}  // namespace memory
}  // namespace mbridge
