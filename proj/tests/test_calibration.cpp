#include <doctest.h>

#include <cmath>

#include "mbridge/calibration.hpp"
#include "mbridge/synthgen.hpp"
#include "oracles.hpp"

using namespace mbridge;
using calibration::NeighborSets;

namespace {

clustering::DistanceMatrix line(const std::vector<double>& xs) {
  Matrix pts(xs.size(), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) pts(i, 0) = xs[i];
  return clustering::pairwise_distances(FeatureMatrix(pts), clustering::Metric::euclidean);
}

using Sets = std::vector<std::vector<std::size_t>>;

}  // namespace

TEST_CASE("k-reciprocal: three collinear points") {
  // N(0) = {1}, N(1) = {0} by the tie rule, N(2) = {1}. Only 0 and 1 are
  // mutual, so the far endpoint ends up with an empty set.
  const auto r = calibration::k_reciprocal_neighbors(line({0.0, 1.0, 2.0}), 1);
  CHECK(r.sets == Sets{{1}, {0}, {}});
  CHECK(r.sets == oracle::k_reciprocal(line({0.0, 1.0, 2.0}).values, 1));
}

TEST_CASE("k-reciprocal: kappa = N-1 is the complete graph") {
  const auto d = line({0.0, 0.3, 1.7, 4.0, 4.1});
  const auto r = calibration::k_reciprocal_neighbors(d, 4);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(r[i].size() == 4);
    CHECK(std::find(r[i].begin(), r[i].end(), i) == r[i].end());
  }
}

TEST_CASE("k-reciprocal: a duplicate is always reciprocal") {
  Matrix pts = oracle::random_matrix(12, 3, 9);
  for (std::size_t k = 0; k < 3; ++k) pts(7, k) = pts(2, k);
  const auto d = clustering::pairwise_distances(FeatureMatrix(pts), clustering::Metric::euclidean);
  for (int kappa = 1; kappa < 12; ++kappa) {
    const auto r = calibration::k_reciprocal_neighbors(d, kappa);
    CHECK(std::find(r[2].begin(), r[2].end(), 7) != r[2].end());
    CHECK(std::find(r[7].begin(), r[7].end(), 2) != r[7].end());
  }
}

TEST_CASE("k-reciprocal: kappa range") {
  const auto d = line({0.0, 1.0, 2.0});
  CHECK_THROWS_AS(calibration::k_reciprocal_neighbors(d, 3), Error);
  CHECK_THROWS_AS(calibration::k_reciprocal_neighbors(d, 0), Error);
}

TEST_CASE("k-reciprocal matches the brute-force oracle") {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const std::size_t n = 10 + 12 * seed;
    const auto d = clustering::pairwise_distances(FeatureMatrix(oracle::random_matrix(n, 4, seed)),
                                                  clustering::Metric::euclidean);
    for (int kappa : {1, 3, 7}) {
      const auto r = calibration::k_reciprocal_neighbors(d, kappa);
      CHECK(r.kappa == kappa);
      CHECK(r.sets == oracle::k_reciprocal(d.values, kappa));
    }
  }
}

TEST_CASE("jaccard affinity") {
  const NeighborSets nb{{{0, 1, 2, 3}, {2, 3, 4, 5}, {0, 1, 2, 3}, {7, 8}, {}}, 4};
  const std::vector<std::size_t> members = {0, 1, 2, 3, 4};
  const auto s = calibration::jaccard_affinity(nb, members).values;
  CHECK(s(0, 2) == 1.0);
  CHECK(s(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(s(0, 3) == 0.0);
  CHECK(s(4, 4) == 0.0);
  CHECK(s(3, 3) == 1.0);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) CHECK(s(i, j) == s(j, i));
  }
  const std::vector<std::size_t> sub = {1, 3};
  const auto t = calibration::jaccard_affinity(nb, sub).values;
  CHECK(t.rows() == 2);
  CHECK(t(0, 1) == 0.0);
}

TEST_CASE("similarity counter") {
  calibration::AffinityMatrix full{Matrix(4, 4, 1.0)};
  CHECK(calibration::similarity_counter(full, 0.5) == std::vector<int>{4, 4, 4, 4});
  Matrix eye(3, 3);
  for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1.0;
  CHECK(calibration::similarity_counter({eye}, 0.5) == std::vector<int>{1, 1, 1});
  Matrix row(3, 3, {1.0, 0.6, 0.4, 0.6, 1.0, 0.5, 0.4, 0.5, 1.0});
  const auto g = calibration::similarity_counter({row}, 0.5);
  CHECK(g[0] == 2);
  CHECK(g[1] == 2);  // 0.5 is not above the threshold
}

TEST_CASE("robust prototype") {
  const FeatureMatrix f(Matrix(3, 2, {3.0, 4.0, 1.0, 0.0, 0.0, 1.0}));
  const std::vector<std::size_t> one = {0};
  auto p = calibration::robust_prototype(f, one, {1}, 5);
  CHECK(p[0] == doctest::Approx(0.6));
  CHECK(p[1] == doctest::Approx(0.8));

  const std::vector<std::size_t> all = {0, 1, 2};
  p = calibration::robust_prototype(f, all, {3, 3, 1}, 2);
  // mean of rows 0 and 1 = (2, 2)
  CHECK(p[0] == doctest::Approx(std::sqrt(0.5)));
  CHECK(p[1] == doctest::Approx(std::sqrt(0.5)));

  p = calibration::robust_prototype(f, all, {1, 1, 1}, 10);
  const double n = std::sqrt(16.0 + 25.0);
  CHECK(p[0] == doctest::Approx(4.0 / n));
  CHECK(p[1] == doctest::Approx(5.0 / n));

  p = calibration::robust_prototype(f, all, {1, 2, 2}, 1);
  CHECK(p == std::vector<double>{1.0, 0.0});
}

TEST_CASE("calibrate: fixed point and single cluster") {
  const FeatureMatrix f(Matrix(6, 2, {1.0, 0.0, 0.99, 0.141067, 0.98, -0.198997,
                                       0.0, 1.0, 0.141067, 0.99, -0.198997, 0.98}));
  const auto fn = l2_normalize(f);
  PipelineConfig cfg;
  cfg.kappa = 2;
  cfg.top_k = 3;
  const PseudoLabeling good{{0, 0, 0, 1, 1, -1}, 2};
  const auto c = calibration::calibrate(fn, good, cfg);
  CHECK(c.labeling == good);
  CHECK(c.prototypes.size() == 2);
  CHECK(c.prototypes.kind == calibration::PrototypeKind::robust);

  const PseudoLabeling single{{0, -1, 0, 0, 0, 0}, 1};
  const auto s = calibration::calibrate(fn, single, cfg);
  CHECK(s.labeling.labels == std::vector<int>{0, -1, 0, 0, 0, 0});
}

TEST_CASE("calibrate: errors") {
  const auto f = l2_normalize(FeatureMatrix(oracle::random_matrix(4, 3, 1)));
  PipelineConfig cfg;
  CHECK_THROWS_WITH_AS(calibration::calibrate(f, PseudoLabeling{{-1, -1, -1, -1}, 0}, cfg),
                       doctest::Contains("no clusters to calibrate"), Error);
  CHECK_THROWS_AS(calibration::calibrate(FeatureMatrix(oracle::random_matrix(4, 3, 1)),
                                         PseudoLabeling{{0, 0, 0, 0}, 1}, cfg),
                  Error);
}

TEST_CASE("calibrate repairs corrupted labels on separated clusters") {
  synth::SynthSpec s;
  s.n_identities = 2;
  s.per_identity_per_modality = 20;
  s.d = 16;
  s.intra_sigma = 0.01;
  s.modality_shift_norm = 0.0;
  s.seed = 3;
  const auto data = synth::generate(s);
  const auto& truth = *data.visible.truth;
  const auto noisy = synth::corrupt_labels(truth, 0.2, 2, 4);
  REQUIRE(noisy.corrupted.size() == 8);

  // Oracle: label of the nearest true-identity centroid.
  std::vector<int> expected(truth.size());
  const auto& m = data.visible.features.data();
  Matrix centroid(2, s.d);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (int k = 0; k < s.d; ++k) centroid(static_cast<std::size_t>(truth[i]), static_cast<std::size_t>(k)) += m(i, static_cast<std::size_t>(k));
  }
  for (std::size_t i = 0; i < truth.size(); ++i) {
    expected[i] = dot(m.row(i), centroid.row(0)) >= dot(m.row(i), centroid.row(1)) ? 0 : 1;
  }
  REQUIRE(expected == truth);

  const auto c = calibration::calibrate(data.visible.features, PseudoLabeling{noisy.labels, 2},
                                        PipelineConfig{});
  CHECK(c.labeling.labels == expected);
}
