#include "mbridge/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mbridge {

std::string_view to_string(Modality m) {
  return m == Modality::visible ? "visible" : "infrared";
}

Modality other(Modality m) {
  return m == Modality::visible ? Modality::infrared : Modality::visible;
}

FeatureMatrix::FeatureMatrix(Matrix data, bool normalized)
    : data_(std::move(data)), normalized_(normalized) {
  if (data_.rows() < 1 || data_.cols() < 1) {
    throw Error("feature matrix must have at least one row and one column");
  }
  for (std::size_t i = 0; i < data_.rows(); ++i) {
    for (double x : data_.row(i)) {
      if (!std::isfinite(x)) {
        throw Error("non-finite feature value in row " + std::to_string(i));
      }
    }
    if (normalized_ && std::abs(norm(data_.row(i)) - 1.0) > kNormTolerance) {
      throw Error("row " + std::to_string(i) + " is flagged normalized but is not unit length");
    }
  }
}

void PseudoLabeling::validate() const {
  if (y_count < 0) throw Error("negative cluster count");
  std::vector<char> seen(static_cast<std::size_t>(y_count), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int l = labels[i];
    if (l == kOutlier) continue;
    if (l < 0 || l >= y_count) {
      throw Error("label " + std::to_string(l) + " at sample " + std::to_string(i) +
                  " is outside 0.." + std::to_string(y_count - 1));
    }
    seen[static_cast<std::size_t>(l)] = 1;
  }
  const auto empty = std::find(seen.begin(), seen.end(), 0);
  if (empty != seen.end()) {
    throw Error("cluster " + std::to_string(empty - seen.begin()) + " has no members");
  }
}

std::vector<std::vector<std::size_t>> PseudoLabeling::members() const {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(y_count));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != kOutlier) out[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  return out;
}

std::vector<int> PseudoLabeling::compact() {
  std::vector<int> remap(static_cast<std::size_t>(y_count), kOutlier);
  for (int l : labels) {
    if (l != kOutlier) remap[static_cast<std::size_t>(l)] = 0;
  }
  std::vector<int> kept;
  for (int c = 0; c < y_count; ++c) {
    if (remap[static_cast<std::size_t>(c)] == 0) {
      remap[static_cast<std::size_t>(c)] = static_cast<int>(kept.size());
      kept.push_back(c);
    }
  }
  for (int& l : labels) {
    if (l != kOutlier) l = remap[static_cast<std::size_t>(l)];
  }
  y_count = static_cast<int>(kept.size());
  return kept;
}

void ModalityDataset::validate() const {
  if (truth && truth->size() != features.n()) {
    throw Error("truth has " + std::to_string(truth->size()) + " entries but features have " +
                std::to_string(features.n()) + " rows");
  }
}

FeatureMatrix l2_normalize(const FeatureMatrix& m) {
  if (m.normalized()) return m;
  Matrix out = m.data();
  for (std::size_t i = 0; i < out.rows(); ++i) {
    if (!normalize_in_place(out.row(i))) {
      throw Error("cannot normalize zero-norm row " + std::to_string(i));
    }
  }
  return FeatureMatrix(std::move(out), true);
}

}  // namespace mbridge
