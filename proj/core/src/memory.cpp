#include "mbridge/memory.hpp"

#include <algorithm>
#include <string>

#include "mbridge/otmatch.hpp"

namespace mbridge::memory {

BankKind bank_kind(Modality m) {
  return m == Modality::visible ? BankKind::visible : BankKind::infrared;
}

MemoryBank init_from_centroids(const FeatureMatrix& features, const PseudoLabeling& labeling,
                               double mu, BankKind kind) {
  if (labeling.y_count < 1) throw Error("init_from_centroids: labeling has no clusters");
  if (labeling.size() != features.n()) {
    throw Error("init_from_centroids: labeling and features disagree on N");
  }
  return {calibration::centroid_prototypes(features, labeling).protos, mu, kind};
}

MemoryBank build_hybrid(const MemoryBank& anchor_bank, const calibration::PrototypeSet& visible,
                        const calibration::PrototypeSet& infrared,
                        const otmatch::CrossModalMatch& match, double alpha, Modality anchor) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("build_hybrid: alpha must lie in [0, 1]");
  const bool ir_anchor = anchor == Modality::infrared;
  const Matrix& own = ir_anchor ? infrared.protos : visible.protos;
  const Matrix& partner = ir_anchor ? visible.protos : infrared.protos;
  const std::vector<int>& to_partner = ir_anchor ? match.r2v : match.v2r;
  if (own.cols() != partner.cols() || (anchor_bank.size() > 0 && anchor_bank.rows.cols() != own.cols())) {
    throw Error("build_hybrid: dimension mismatch");
  }
  if (to_partner.size() != own.rows()) {
    throw Error("build_hybrid: match covers " + std::to_string(to_partner.size()) + " of " +
                std::to_string(own.rows()) + " anchor clusters");
  }

  MemoryBank out{Matrix(own.rows(), own.cols()), anchor_bank.mu, BankKind::hybrid};
  for (std::size_t i = 0; i < own.rows(); ++i) {
    const int p = to_partner[i];
    if (p < 0 || static_cast<std::size_t>(p) >= partner.rows()) {
      throw Error("build_hybrid: missing match entry for cluster " + std::to_string(i));
    }
    auto row = out.rows.row(i);
    const auto a = own.row(i);
    const auto b = partner.row(static_cast<std::size_t>(p));
    // Endpoints copy the prototype so the result is bit-identical to it.
    if (alpha == 1.0 || alpha == 0.0) {
      const auto src = alpha == 1.0 ? a : b;
      std::copy(src.begin(), src.end(), row.begin());
      continue;
    }
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = alpha * a[j] + (1.0 - alpha) * b[j];
    if (!normalize_in_place(row)) {
      throw Error("build_hybrid: matched prototypes cancel for cluster " + std::to_string(i));
    }
  }
  return out;
}

void momentum_update(MemoryBank& bank, int label, std::span<const double> f, double mu) {
  if (label < 0 || static_cast<std::size_t>(label) >= bank.size()) {
    throw Error("momentum_update: label " + std::to_string(label) + " outside bank of size " +
                std::to_string(bank.size()));
  }
  if (f.size() != bank.rows.cols()) throw Error("momentum_update: feature dimension mismatch");
  auto row = bank.rows.row(static_cast<std::size_t>(label));
  if (mu == 1.0) return;
  if (mu == 0.0) {
    std::copy(f.begin(), f.end(), row.begin());
    return;
  }
  std::vector<double> mixed(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) mixed[j] = mu * row[j] + (1.0 - mu) * f[j];
  // An exact cancellation keeps the previous row.
  if (normalize_in_place(mixed)) std::copy(mixed.begin(), mixed.end(), row.begin());
}

void hybrid_update(MemoryBank& bank, int epoch, const Matrix& features,
                   const std::vector<int>& labels, Modality batch_modality,
                   const std::vector<int>& to_anchor, double mu, Modality anchor) {
  if (epoch < 0) throw Error("hybrid_update: negative epoch");
  if (labels.size() != features.rows()) throw Error("hybrid_update: labels and features differ");
  const bool translate = epoch % 2 == 0;
  const Modality expected = translate ? other(anchor) : anchor;
  if (batch_modality != expected) {
    throw Error("hybrid_update: epoch " + std::to_string(epoch) + " expects a " +
                std::string(to_string(expected)) + " batch");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int row = labels[i];
    if (translate) {
      if (row < 0 || static_cast<std::size_t>(row) >= to_anchor.size()) {
        throw Error("hybrid_update: label " + std::to_string(row) + " has no match");
      }
      row = to_anchor[static_cast<std::size_t>(row)];
    }
    momentum_update(bank, row, features.row(i), mu);
  }
}

}  // namespace mbridge::memory
