#include <doctest.h>

#include <random>
#include <sstream>

#include <json.hpp>

#include "mbridge/metrics.hpp"
#include "oracles.hpp"

using namespace mbridge;

namespace {

std::vector<int> random_labels(std::size_t n, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, k - 1);
  std::vector<int> out(n);
  for (int& x : out) x = u(rng);
  return out;
}

}  // namespace

TEST_CASE("ari examples") {
  const std::vector<int> t = {0, 0, 1, 1, 2, 2};
  CHECK(metrics::ari(t, t) == 1.0);
  CHECK(metrics::ari({5, 5, 3, 3, 9, 9}, t) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(metrics::ari({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(oracle::ari({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK_THROWS_AS(metrics::ari({0, 1}, {0}), Error);
}

TEST_CASE("outliers count as singletons") {
  const std::vector<int> truth = {0, 1, 2, 3};
  CHECK(metrics::ari({-1, -1, -1, -1}, truth) == 1.0);
  CHECK(metrics::ari({-1, -1, 0, 0}, {7, 8, 9, 9}) == doctest::Approx(1.0));
}

TEST_CASE("ari agrees with the pair-counting oracle") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const std::size_t n = 5 + 3 * seed;
    auto p = random_labels(n, 1 + static_cast<int>(seed % 6), seed);
    const auto t = random_labels(n, 1 + static_cast<int>(seed % 4), seed + 99);
    if (seed % 3 == 0) p[0] = -1;
    CHECK(std::abs(metrics::ari(p, t) - oracle::ari(p, t)) <= 1e-12);
  }
}

TEST_CASE("information measures") {
  const std::vector<int> t = {0, 0, 1, 1, 2, 2};
  CHECK(metrics::nmi(t, t) == doctest::Approx(1.0));
  CHECK(metrics::v_measure(t, t) == doctest::Approx(1.0));
  CHECK(metrics::nmi({0, 0, 0, 0, 0, 0}, t) == 0.0);
  CHECK(metrics::homogeneity({0, 0, 0, 0, 0, 0}, t) == 0.0);
  CHECK(metrics::completeness({0, 0, 0, 0, 0, 0}, t) == 1.0);
  // Splitting every class keeps homogeneity perfect.
  CHECK(metrics::homogeneity({0, 1, 2, 3, 4, 5}, t) == doctest::Approx(1.0));
  CHECK(metrics::completeness({0, 1, 2, 3, 4, 5}, t) < 1.0);

  const auto a = random_labels(1000, 10, 1);
  const auto b = random_labels(1000, 10, 2);
  CHECK(metrics::nmi(a, b) < 0.05);
}

TEST_CASE("relabeling invariance") {
  const auto p = random_labels(60, 5, 3);
  const auto t = random_labels(60, 4, 4);
  std::vector<int> q(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) q[i] = (p[i] * 3 + 2) % 5 + 10;
  CHECK(metrics::ari(q, t) == doctest::Approx(metrics::ari(p, t)).epsilon(1e-14));
  CHECK(metrics::nmi(q, t) == doctest::Approx(metrics::nmi(p, t)).epsilon(1e-14));
  CHECK(metrics::v_measure(t, q) == doctest::Approx(metrics::v_measure(t, p)).epsilon(1e-14));
}

TEST_CASE("majority identity and match accuracy") {
  const PseudoLabeling l{{0, 0, 0, 1, 1, -1, 2, 2}, 4};
  const std::vector<int> truth = {5, 5, 4, 3, 2, 9, 7, 7};
  CHECK(metrics::majority_identity(l, truth) == std::vector<int>{5, 2, 7, -1});

  const std::vector<int> ids = {10, 11, 12};
  CHECK(metrics::match_accuracy({{0, 1, 2}, {0, 1, 2}}, ids, ids).mean() == 1.0);
  CHECK(metrics::match_accuracy({{1, 2, 0}, {2, 0, 1}}, ids, ids).mean() == 0.0);
  const auto m = metrics::match_accuracy({{0, 1, 2}, {0, 2, 1}}, ids, ids);
  CHECK(m.v2r == 1.0);
  CHECK(m.r2v == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("cmc and map on a hand-ranked list") {
  const Matrix q(1, 2, {1.0, 0.0});
  const Matrix g(3, 2, {0.9, 0.1, 0.8, 0.2, 0.1, 0.9});
  const auto r = metrics::cmc_map(q, {1}, g, {0, 1, 2});
  CHECK(r.rank_k(1) == 0.0);
  CHECK(r.rank_k(2) == 1.0);
  CHECK(r.map == doctest::Approx(0.5));
  CHECK(r.evaluated == 1);
}

TEST_CASE("cmc details") {
  SUBCASE("absent identities are excluded and counted") {
    const Matrix q(2, 2, {1.0, 0.0, 0.0, 1.0});
    const auto r = metrics::cmc_map(q, {0, 9}, q, {0, 1});
    CHECK(r.excluded == 1);
    CHECK(r.evaluated == 1);
    CHECK(r.rank_k(1) == 1.0);
  }
  SUBCASE("ties go to the lower gallery index") {
    const Matrix q(1, 2, {1.0, 0.0});
    const Matrix g(2, 2, {1.0, 0.0, 1.0, 0.0});
    CHECK(metrics::cmc_map(q, {1}, g, {0, 1}).rank_k(1) == 0.0);
    CHECK(metrics::cmc_map(q, {0}, g, {0, 1}).rank_k(1) == 1.0);
  }
  SUBCASE("self retrieval with duplicates") {
    const Matrix f(4, 2, {1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0});
    const auto r = metrics::cmc_map(f, {0, 0, 1, 1}, f, {0, 0, 1, 1}, true);
    CHECK(r.rank_k(1) == 1.0);
    CHECK(r.map == 1.0);
  }
}

TEST_CASE("rank-k is monotone and reaches 1") {
  const Matrix q = oracle::random_unit_matrix(30, 6, 1);
  const Matrix g = oracle::random_unit_matrix(40, 6, 2);
  const auto qi = random_labels(30, 10, 3);
  std::vector<int> gi(40);
  for (std::size_t i = 0; i < 40; ++i) gi[i] = static_cast<int>(i % 10);
  const auto r = metrics::cmc_map(q, qi, g, gi);
  for (std::size_t k = 2; k <= 40; ++k) CHECK(r.rank_k(k) >= r.rank_k(k - 1));
  CHECK(r.rank_k(40) == 1.0);
}

TEST_CASE("map equals rank-1 with one correct item per query") {
  const Matrix q(3, 2, {1.0, 0.0, 0.0, 1.0, 0.6, 0.8});
  const Matrix g(3, 2, {0.0, 1.0, 1.0, 0.0, -1.0, 0.0});
  const auto r = metrics::cmc_map(q, {1, 0, 5}, g, {0, 1, 2});
  CHECK(r.excluded == 1);
  CHECK(r.map == r.rank_k(1));
  CHECK(r.rank_k(1) == 1.0);
}

TEST_CASE("random embeddings give chance-level map") {
  double total = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Matrix q = oracle::random_unit_matrix(100, 16, 10 + s);
    const Matrix g = oracle::random_unit_matrix(100, 16, 20 + s);
    std::vector<int> ids(100);
    for (std::size_t i = 0; i < 100; ++i) ids[i] = static_cast<int>(i % 10);
    total += metrics::cmc_map(q, ids, g, ids).map;
  }
  CHECK(std::abs(total / 5.0 - 0.1) <= 0.05);
}

TEST_CASE("report serialization") {
  auto report = metrics::clustering_report({0, 0, 1, 1}, {0, 0, 1, 1});
  report.match_accuracy = 0.5;
  std::ostringstream csv;
  metrics::write_csv_header(csv);
  metrics::write_csv_rows(csv, report, "visible");
  const std::string text = csv.str();
  CHECK(text.rfind("scope,metric,value\n", 0) == 0);
  CHECK(text.find("visible,ari,1\n") != std::string::npos);
  CHECK(text.find("visible,match_accuracy,0.5\n") != std::string::npos);

  std::ostringstream js;
  metrics::write_json_line(js, report, "visible");
  const auto j = nlohmann::json::parse(js.str());
  CHECK(j["scope"] == "visible");
  CHECK(j["ari"].get<double>() == 1.0);
  CHECK(js.str().back() == '\n');
}
