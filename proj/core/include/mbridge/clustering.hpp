#pragma once

#include "mbridge/types.hpp"

namespace mbridge::clustering {

enum class Metric { euclidean, cosine_distance };

// Symmetric N x N matrix with an exactly zero diagonal.
struct DistanceMatrix {
  Matrix values;
  Metric metric = Metric::euclidean;

  std::size_t size() const { return values.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return values(i, j); }
};

// Rows are split across up to `threads` workers; the result does not depend
// on the thread count. cosine_distance requires m.normalized().
DistanceMatrix pairwise_distances(const FeatureMatrix& m, Metric metric, int threads = 1);

// Core point: at least min_pts samples (itself included) within eps,
// inclusive. Clusters are numbered in order of their lowest-index core point;
// a border point joins the first cluster whose expansion reaches it.
PseudoLabeling dbscan(const DistanceMatrix& dist, double eps, int min_pts);

}  // namespace mbridge::clustering
