#include "mbridge/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <thread>
#include <vector>

namespace mbridge::clustering {

DistanceMatrix pairwise_distances(const FeatureMatrix& m, Metric metric, int threads) {
  if (metric == Metric::cosine_distance && !m.normalized()) {
    throw Error("cosine_distance requires L2-normalized features");
  }
  const std::size_t n = m.n();
  DistanceMatrix out{Matrix(n, n), metric};

  // Upper triangle only, mirrored below; each row is owned by one worker.
  auto fill_rows = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < n; i += stride) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double v = 0.0;
        if (metric == Metric::euclidean) {
          v = std::sqrt(squared_distance(m.row(i), m.row(j)));
        } else {
          v = std::max(0.0, 1.0 - dot(m.row(i), m.row(j)));
        }
        out.values(i, j) = v;
      }
    }
  };

  const auto workers = static_cast<std::size_t>(std::clamp<int>(threads, 1, 64));
  if (workers == 1 || n < 64) {
    fill_rows(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(fill_rows, w, workers);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) out.values(i, j) = out.values(j, i);
  }
  return out;
}

PseudoLabeling dbscan(const DistanceMatrix& dist, double eps, int min_pts) {
  if (!(eps > 0.0)) throw Error("dbscan: eps must be positive");
  if (min_pts < 1) throw Error("dbscan: min_pts must be >= 1");
  const std::size_t n = dist.size();

  std::vector<std::vector<std::size_t>> neighbors(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (dist(i, j) <= eps) neighbors[i].push_back(j);
    }
  }
  std::vector<char> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    core[i] = neighbors[i].size() >= static_cast<std::size_t>(min_pts);
  }

  PseudoLabeling out{std::vector<int>(n, PseudoLabeling::kOutlier), 0};
  std::deque<std::size_t> frontier;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (!core[seed] || out.labels[seed] != PseudoLabeling::kOutlier) continue;
    const int id = out.y_count++;
    out.labels[seed] = id;
    frontier.push_back(seed);
    while (!frontier.empty()) {
      const std::size_t p = frontier.front();
      frontier.pop_front();
      for (std::size_t q : neighbors[p]) {
        if (out.labels[q] != PseudoLabeling::kOutlier) continue;
        out.labels[q] = id;
        if (core[q]) frontier.push_back(q);
      }
    }
  }
  return out;
}

}  // namespace mbridge::clustering
