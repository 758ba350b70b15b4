#include "mbridge/calibration.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace mbridge::calibration {

NeighborSets k_reciprocal_neighbors(const clustering::DistanceMatrix& dist, int kappa) {
  const std::size_t n = dist.size();
  if (kappa < 1) throw Error("kappa must be >= 1");
  if (static_cast<std::size_t>(kappa) >= n) {
    throw Error("kappa (" + std::to_string(kappa) + ") must be smaller than N (" +
                std::to_string(n) + ")");
  }
  const auto k = static_cast<std::size_t>(kappa);

  // in_knn[i] marks members of N(i, kappa).
  std::vector<std::vector<char>> in_knn(n, std::vector<char>(n, 0));
  std::vector<std::vector<std::size_t>> knn(n);
  std::vector<std::size_t> order(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t pos = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) order[pos++] = j;
    }
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        const double da = dist(i, a);
                        const double db = dist(i, b);
                        return da < db || (da == db && a < b);
                      });
    knn[i].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t j : knn[i]) in_knn[i][j] = 1;
  }

  NeighborSets out{std::vector<std::vector<std::size_t>>(n), kappa};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : knn[i]) {
      if (in_knn[j][i]) out.sets[i].push_back(j);
    }
    std::sort(out.sets[i].begin(), out.sets[i].end());
  }
  return out;
}

AffinityMatrix jaccard_affinity(const NeighborSets& nbrs, std::span<const std::size_t> members) {
  if (members.empty()) throw Error("jaccard_affinity: empty cluster");
  const std::size_t nc = members.size();
  AffinityMatrix out{Matrix(nc, nc)};
  for (std::size_t a = 0; a < nc; ++a) {
    const auto& ra = nbrs[members[a]];
    for (std::size_t b = a; b < nc; ++b) {
      const auto& rb = nbrs[members[b]];
      std::size_t inter = 0;
      auto ia = ra.begin();
      auto ib = rb.begin();
      while (ia != ra.end() && ib != rb.end()) {
        if (*ia < *ib) {
          ++ia;
        } else if (*ib < *ia) {
          ++ib;
        } else {
          ++inter;
          ++ia;
          ++ib;
        }
      }
      const std::size_t uni = ra.size() + rb.size() - inter;
      const double s = uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
      out.values(a, b) = s;
      out.values(b, a) = s;
    }
  }
  return out;
}

SimilarityCounter similarity_counter(const AffinityMatrix& s, double rho) {
  const std::size_t nc = s.values.rows();
  SimilarityCounter g(nc, 0);
  for (std::size_t i = 0; i < nc; ++i) {
    for (double v : s.values.row(i)) {
      if (v > rho) ++g[i];
    }
  }
  return g;
}

std::vector<double> robust_prototype(const FeatureMatrix& features,
                                     std::span<const std::size_t> members,
                                     const SimilarityCounter& counts, int top_k) {
  if (members.empty()) throw Error("robust_prototype: empty cluster");
  if (counts.size() != members.size()) {
    throw Error("robust_prototype: counter size does not match cluster size");
  }
  std::vector<std::size_t> pos(members.size());
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  std::sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) {
    return counts[a] > counts[b] || (counts[a] == counts[b] && members[a] < members[b]);
  });
  const std::size_t take = std::min(pos.size(), static_cast<std::size_t>(std::max(top_k, 1)));

  std::vector<double> proto(features.d(), 0.0);
  for (std::size_t t = 0; t < take; ++t) {
    const auto row = features.row(members[pos[t]]);
    for (std::size_t j = 0; j < proto.size(); ++j) proto[j] += row[j];
  }
  for (double& x : proto) x /= static_cast<double>(take);
  if (!normalize_in_place(proto)) throw Error("robust_prototype: selected samples cancel out");
  return proto;
}

PrototypeSet centroid_prototypes(const FeatureMatrix& features, const PseudoLabeling& labeling) {
  labeling.validate();
  PrototypeSet out{Matrix(static_cast<std::size_t>(labeling.y_count), features.d()),
                   PrototypeKind::centroid};
  const auto groups = labeling.members();
  for (std::size_t c = 0; c < groups.size(); ++c) {
    auto row = out.protos.row(c);
    for (std::size_t i : groups[c]) {
      const auto f = features.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += f[j];
    }
    for (double& x : row) x /= static_cast<double>(groups[c].size());
    if (!normalize_in_place(row)) {
      throw Error("cluster " + std::to_string(c) + " has a zero-norm centroid");
    }
  }
  return out;
}

Calibration calibrate(const FeatureMatrix& features, const PseudoLabeling& labeling,
                      const PipelineConfig& config) {
  if (labeling.y_count < 1) throw Error("no clusters to calibrate");
  if (!features.normalized()) throw Error("calibrate requires L2-normalized features");
  return calibrate(features, labeling, config,
                   clustering::pairwise_distances(features, clustering::Metric::cosine_distance,
                                                  config.threads));
}

Calibration calibrate(const FeatureMatrix& features, const PseudoLabeling& labeling,
                      const PipelineConfig& config, const clustering::DistanceMatrix& dist) {
  if (labeling.y_count < 1) throw Error("no clusters to calibrate");
  if (!features.normalized()) throw Error("calibrate requires L2-normalized features");
  if (labeling.size() != features.n() || dist.size() != features.n()) {
    throw Error("calibrate: labels, features and distances disagree on N");
  }
  labeling.validate();

  const std::size_t n = features.n();
  const auto y = static_cast<std::size_t>(labeling.y_count);
  PrototypeSet protos{Matrix(y, features.d()), PrototypeKind::robust};
  const auto groups = labeling.members();

  if (n >= 2) {
    const int kappa = std::min<int>(config.kappa, static_cast<int>(n) - 1);
    const NeighborSets nbrs = k_reciprocal_neighbors(dist, kappa);
    for (std::size_t c = 0; c < y; ++c) {
      const AffinityMatrix s = jaccard_affinity(nbrs, groups[c]);
      const SimilarityCounter g = similarity_counter(s, config.rho);
      const auto p = robust_prototype(features, groups[c], g, config.top_k);
      std::copy(p.begin(), p.end(), protos.protos.row(c).begin());
    }
  } else {
    const auto p = robust_prototype(features, groups[0], SimilarityCounter{0}, config.top_k);
    std::copy(p.begin(), p.end(), protos.protos.row(0).begin());
  }

  PseudoLabeling out = labeling;
  for (std::size_t i = 0; i < n; ++i) {
    if (out.labels[i] == PseudoLabeling::kOutlier) continue;
    std::size_t best = 0;
    double best_sim = dot(features.row(i), protos.protos.row(0));
    for (std::size_t c = 1; c < y; ++c) {
      const double sim = dot(features.row(i), protos.protos.row(c));
      if (sim > best_sim) {
        best_sim = sim;
        best = c;
      }
    }
    out.labels[i] = static_cast<int>(best);
  }

  const std::vector<int> kept = out.compact();
  if (kept.size() != y) {
    Matrix survivors(kept.size(), features.d());
    for (std::size_t c = 0; c < kept.size(); ++c) {
      const auto src = protos.protos.row(static_cast<std::size_t>(kept[c]));
      std::copy(src.begin(), src.end(), survivors.row(c).begin());
    }
    protos.protos = std::move(survivors);
  }
  return {std::move(out), std::move(protos)};
}

}  // namespace mbridge::calibration
