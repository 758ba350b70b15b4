#pragma once

#include <span>
#include <vector>

#include "mbridge/clustering.hpp"
#include "mbridge/config.hpp"
#include "mbridge/types.hpp"

namespace mbridge::calibration {

// R(i, kappa) for every sample, stored as ascending index lists.
struct NeighborSets {
  std::vector<std::vector<std::size_t>> sets;
  int kappa = 0;

  const std::vector<std::size_t>& operator[](std::size_t i) const { return sets[i]; }
  std::size_t size() const { return sets.size(); }
};

// Jaccard affinities between the members of one cluster, indexed by member
// position.
struct AffinityMatrix {
  Matrix values;
};

using SimilarityCounter = std::vector<int>;

enum class PrototypeKind { robust, centroid };

// Y x d, unit rows.
struct PrototypeSet {
  Matrix protos;
  PrototypeKind kind = PrototypeKind::robust;

  std::size_t size() const { return protos.rows(); }
};

// N(i, kappa): the kappa closest other samples, ties broken by ascending
// index. R(i, kappa) keeps j in N(i, kappa) only when i is in N(j, kappa).
NeighborSets k_reciprocal_neighbors(const clustering::DistanceMatrix& dist, int kappa);

// S_ij = |R_i & R_j| / |R_i | R_j|, zero when the union is empty.
AffinityMatrix jaccard_affinity(const NeighborSets& nbrs, std::span<const std::size_t> members);

// G_i = #{ j : S_ij > rho }.
SimilarityCounter similarity_counter(const AffinityMatrix& s, double rho);

// Normalized mean of the top_k members by count; ties favour the lower
// sample index. Uses every member when the cluster is smaller than top_k.
std::vector<double> robust_prototype(const FeatureMatrix& features,
                                     std::span<const std::size_t> members,
                                     const SimilarityCounter& counts, int top_k);

// Normalized mean of each cluster's members.
PrototypeSet centroid_prototypes(const FeatureMatrix& features, const PseudoLabeling& labeling);

struct Calibration {
  PseudoLabeling labeling;
  PrototypeSet prototypes;
};

// Robust prototypes per cluster, then every non-outlier sample moves to the
// prototype with the highest cosine similarity (ties to the lower id).
// Clusters left without members are dropped and ids compacted in order;
// their prototypes are dropped with them. kappa is clamped to N-1.
Calibration calibrate(const FeatureMatrix& features, const PseudoLabeling& labeling,
                      const PipelineConfig& config);
Calibration calibrate(const FeatureMatrix& features, const PseudoLabeling& labeling,
                      const PipelineConfig& config, const clustering::DistanceMatrix& dist);

}  // namespace mbridge::calibration
