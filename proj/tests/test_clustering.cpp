#include <doctest.h>

#include <cmath>

#include "mbridge/clustering.hpp"
#include "oracles.hpp"

using namespace mbridge;
using clustering::Metric;

namespace {

clustering::DistanceMatrix on_line(const std::vector<double>& xs) {
  Matrix pts(xs.size(), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) pts(i, 0) = xs[i];
  return clustering::pairwise_distances(FeatureMatrix(pts), Metric::euclidean);
}

}  // namespace

TEST_CASE("pairwise distances") {
  const FeatureMatrix e(Matrix(2, 2, {1.0, 0.0, 0.0, 1.0}), true);
  const auto eu = clustering::pairwise_distances(e, Metric::euclidean);
  CHECK(eu(0, 1) == doctest::Approx(std::sqrt(2.0)));
  CHECK(eu(0, 0) == 0.0);
  const auto co = clustering::pairwise_distances(e, Metric::cosine_distance);
  CHECK(co(0, 1) == 1.0);
  CHECK(co.metric == Metric::cosine_distance);

  CHECK_THROWS_AS(clustering::pairwise_distances(FeatureMatrix(Matrix(2, 2, 1.0)),
                                                 Metric::cosine_distance),
                  Error);
}

TEST_CASE("pairwise distances are symmetric and thread-count independent") {
  const FeatureMatrix f(oracle::random_unit_matrix(150, 9, 4), true);
  for (Metric m : {Metric::euclidean, Metric::cosine_distance}) {
    const auto one = clustering::pairwise_distances(f, m, 1);
    const auto four = clustering::pairwise_distances(f, m, 4);
    CHECK(one.values == four.values);
    for (std::size_t i = 0; i < one.size(); ++i) {
      CHECK(one(i, i) == 0.0);
      for (std::size_t j = 0; j < i; ++j) CHECK(one(i, j) == one(j, i));
    }
  }
}

TEST_CASE("dbscan: two separated groups") {
  const auto d = on_line({0.0, 0.1, 0.2, 0.3, 0.4, 10.0, 10.1, 10.2, 10.3, 10.4});
  const auto l = clustering::dbscan(d, 0.25, 3);
  CHECK(l.y_count == 2);
  CHECK(l.labels == std::vector<int>{0, 0, 0, 0, 0, 1, 1, 1, 1, 1});
  CHECK(l.labels == oracle::dbscan(d.values, 0.25, 3));
}

TEST_CASE("dbscan: isolated point is an outlier") {
  const auto l = clustering::dbscan(on_line({0.0, 0.05, 5.0}), 0.1, 2);
  CHECK(l.labels == std::vector<int>{0, 0, PseudoLabeling::kOutlier});
  CHECK(l.y_count == 1);
  CHECK(clustering::dbscan(on_line({3.0}), 0.1, 2).labels == std::vector<int>{-1});
}

TEST_CASE("dbscan: identical points form one cluster") {
  const auto d = on_line(std::vector<double>(6, 1.5));
  for (int m = 1; m <= 6; ++m) {
    const auto l = clustering::dbscan(d, 0.01, m);
    CHECK(l.y_count == 1);
    CHECK(l.labels == std::vector<int>(6, 0));
  }
}

TEST_CASE("dbscan: eps is inclusive and self counts") {
  const auto d = on_line({0.0, 0.5});
  CHECK(clustering::dbscan(d, 0.5, 2).y_count == 1);
  CHECK(clustering::dbscan(d, 0.49, 2).y_count == 0);
  CHECK(clustering::dbscan(d, 0.49, 1).y_count == 2);
}

TEST_CASE("dbscan: border point joins the first expanded cluster") {
  // Index 0 sits between two groups and reaches one core of each.
  const auto d = on_line({0.65, 1.0, 1.1, 1.2, 1.3, 0.0, 0.1, 0.2, 0.3});
  const auto l = clustering::dbscan(d, 0.36, 4);
  CHECK(l.labels == std::vector<int>{0, 0, 0, 0, 0, 1, 1, 1, 1});
  CHECK(l.labels == oracle::dbscan(d.values, 0.36, 4));
}

TEST_CASE("dbscan: parameter checks") {
  const auto d = on_line({0.0, 1.0});
  CHECK_THROWS_AS(clustering::dbscan(d, 0.0, 2), Error);
  CHECK_THROWS_AS(clustering::dbscan(d, 0.5, 0), Error);
}

TEST_CASE("dbscan matches the union-find oracle on random instances") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 20 + 9 * seed;
    const Matrix pts = oracle::random_matrix(n, 2, seed);
    const auto d = clustering::pairwise_distances(FeatureMatrix(pts), Metric::euclidean);
    for (double eps : {0.2, 0.4, 0.8}) {
      for (int m : {1, 3, 5}) CHECK(clustering::dbscan(d, eps, m).labels == oracle::dbscan(d.values, eps, m));
    }
  }
}
