#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mbridge/matrix.hpp"

namespace mbridge {

// Raised for malformed inputs, broken invariants and I/O failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LoadError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

enum class Modality { visible, infrared };

std::string_view to_string(Modality m);
Modality other(Modality m);

// N x d embeddings. Immutable after construction; the constructor checks
// shape, finiteness and (when flagged) unit row norms.
class FeatureMatrix {
 public:
  static constexpr double kNormTolerance = 1e-6;

  explicit FeatureMatrix(Matrix data, bool normalized = false);

  std::size_t n() const { return data_.rows(); }
  std::size_t d() const { return data_.cols(); }
  bool normalized() const { return normalized_; }
  const Matrix& data() const { return data_; }
  std::span<const double> row(std::size_t i) const { return data_.row(i); }

  bool operator==(const FeatureMatrix&) const = default;

 private:
  Matrix data_;
  bool normalized_;
};

// Per-sample cluster ids in 0..y_count-1, or kOutlier.
struct PseudoLabeling {
  static constexpr int kOutlier = -1;

  std::vector<int> labels;
  int y_count = 0;

  // Throws Error unless every non-outlier label is < y_count and every
  // cluster id has at least one member.
  void validate() const;

  std::size_t size() const { return labels.size(); }
  std::vector<std::vector<std::size_t>> members() const;

  // Drops empty cluster ids and renumbers the survivors in increasing order.
  // Returns the old id of each surviving cluster.
  std::vector<int> compact();

  bool operator==(const PseudoLabeling&) const = default;
};

struct ModalityDataset {
  FeatureMatrix features;
  Modality modality;
  std::optional<std::vector<int>> truth;

  void validate() const;
};

FeatureMatrix l2_normalize(const FeatureMatrix& m);

}  // namespace mbridge
