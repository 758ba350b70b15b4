#include <doctest.h>

#include <random>

#include "mbridge/calibration.hpp"
#include "mbridge/losses.hpp"
#include "mbridge/memory.hpp"
#include "mbridge/metrics.hpp"
#include "mbridge/otmatch.hpp"
#include "mbridge/pipeline.hpp"
#include "mbridge/synthgen.hpp"
#include "oracles.hpp"

using namespace mbridge;

TEST_CASE("affinity is symmetric and within [0, 1]; counters bounded by cluster size") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto f = FeatureMatrix(oracle::random_unit_matrix(40, 5, seed), true);
    const auto d = clustering::pairwise_distances(f, clustering::Metric::cosine_distance);
    const auto nb = calibration::k_reciprocal_neighbors(d, 6);
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < 40; i += 1 + seed % 3) members.push_back(i);
    const auto s = calibration::jaccard_affinity(nb, members).values;
    for (std::size_t i = 0; i < members.size(); ++i) {
      CHECK(nb[members[i]].size() <= 6);
      if (!nb[members[i]].empty()) CHECK(s(i, i) == 1.0);
      for (std::size_t j = 0; j < members.size(); ++j) {
        CHECK(s(i, j) >= 0.0);
        CHECK(s(i, j) <= 1.0);
        CHECK(s(i, j) == s(j, i));
      }
    }
    for (int g : calibration::similarity_counter({s}, 0.3)) {
      CHECK(g >= 0);
      CHECK(g <= static_cast<int>(members.size()));
    }
  }
}

TEST_CASE("reciprocity of neighbor sets") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto f = FeatureMatrix(oracle::random_matrix(30, 3, seed));
    const auto d = clustering::pairwise_distances(f, clustering::Metric::euclidean);
    const auto nb = calibration::k_reciprocal_neighbors(d, 4);
    for (std::size_t i = 0; i < nb.size(); ++i) {
      for (std::size_t j : nb[i]) {
        CHECK(std::find(nb[j].begin(), nb[j].end(), i) != nb[j].end());
      }
    }
  }
}

TEST_CASE("calibrate keeps outliers and labels in range") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto f = FeatureMatrix(oracle::random_unit_matrix(50, 6, seed), true);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> u(-1, 4);
    PseudoLabeling l{std::vector<int>(50), 5};
    for (int& x : l.labels) x = u(rng);
    for (int c = 0; c < 5; ++c) l.labels[static_cast<std::size_t>(c)] = c;
    PipelineConfig cfg;
    cfg.kappa = 8;
    cfg.top_k = 5;
    const auto out = calibration::calibrate(f, l, cfg);
    CHECK_NOTHROW(out.labeling.validate());
    CHECK(out.prototypes.size() == static_cast<std::size_t>(out.labeling.y_count));
    for (std::size_t i = 0; i < 50; ++i) {
      CHECK((l.labels[i] < 0) == (out.labeling.labels[i] < 0));
      CHECK(out.labeling.labels[i] < out.labeling.y_count);
    }
  }
}

TEST_CASE("sinkhorn marginal feasibility on random shapes") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t r = 1 + rng() % 64;
    const std::size_t c = 1 + rng() % 48;
    Matrix cost(r, c);
    std::uniform_real_distribution<double> u(std::exp(-1.0), std::exp(1.0));
    for (double& x : cost.values()) x = u(rng);
    const auto p = otmatch::sinkhorn({cost}, 25.0, 20000, 1e-9);
    CHECK(p.converged);
    CHECK(otmatch::marginal_residual(p.q) < 1e-9);
  }
}

TEST_CASE("pipeline never produces non-finite state") {
  synth::SynthSpec s;
  s.n_identities = 5;
  s.per_identity_per_modality = 6;
  s.d = 8;
  const auto d = synth::generate(s);
  PipelineConfig cfg;
  cfg.dbscan_eps = 0.2;
  cfg.dbscan_min_pts = 2;
  cfg.warmup_epochs = 1;
  cfg.total_epochs = 4;
  cfg.learning_rate = 0.5;
  auto state = pipeline::init_state(d.visible, d.infrared, cfg);
  for (int e = 0; e < cfg.total_epochs; ++e) {
    pipeline::run_epoch(state, cfg);
    CHECK(all_finite(state.visible));
    CHECK(all_finite(state.infrared));
    CHECK(all_finite(state.bank_v.rows));
    for (std::size_t i = 0; i < state.visible.rows(); ++i) {
      CHECK(std::abs(norm(state.visible.row(i)) - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("total loss is linear in its parts") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const losses::LossValue a{0.3 + seed, oracle::random_matrix(3, 2, seed)};
    const losses::LossValue b{1.7, oracle::random_matrix(3, 2, seed + 10)};
    const losses::LossValue c{0.2, oracle::random_matrix(3, 2, seed + 20)};
    const auto t = losses::total_loss(a, b, c, 0.5, 10.0);
    CHECK(t.value == doctest::Approx(a.value + 0.5 * b.value + 10.0 * c.value));
    for (std::size_t k = 0; k < 6; ++k) {
      CHECK(t.grad.values()[k] == doctest::Approx(a.grad.values()[k] + 0.5 * b.grad.values()[k] +
                                                  10.0 * c.grad.values()[k]));
    }
  }
}
