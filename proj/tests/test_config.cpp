#include <doctest.h>

#include <sstream>

#include "mbridge/config.hpp"
#include "mbridge/types.hpp"

using namespace mbridge;

TEST_CASE("defaults") {
  const PipelineConfig c;
  CHECK(c.kappa == 30);
  CHECK(c.top_k == 20);
  CHECK(c.rho == 0.5);
  CHECK(c.lambda_reg == 25.0);
  CHECK(c.tau == 0.5);
  CHECK(c.mu == 0.1);
  CHECK(c.gamma == 1.0);
  CHECK(c.sigma == 1.0);
  CHECK(c.alpha == 0.5);
  CHECK(c.beta1 == 0.5);
  CHECK(c.beta2 == 10.0);
  CHECK(c.total_epochs == 100);
  CHECK(c.warmup_epochs == 50);
  CHECK(c.dbscan_eps == 0.6);
  CHECK(c.dbscan_min_pts == 4);
  CHECK(c.batch_p == 8);
  CHECK(c.batch_k == 4);
  CHECK(c.learning_rate == 0.05);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("parse with comments and overrides") {
  std::istringstream in("# experiment\nkappa = 12\n\nalpha=0.25  # mix\nuse_nrl = false\nseed = 42\n");
  const auto c = parse_config(in);
  CHECK(c.kappa == 12);
  CHECK(c.alpha == 0.25);
  CHECK_FALSE(c.use_nrl);
  CHECK(c.seed == 42);
  CHECK(c.top_k == 20);
}

TEST_CASE("parse errors") {
  std::istringstream unknown("kapa = 3\n");
  CHECK_THROWS_AS(parse_config(unknown), Error);
  std::istringstream no_eq("kappa 3\n");
  CHECK_THROWS_AS(parse_config(no_eq), Error);
  std::istringstream bad_num("tau = fast\n");
  CHECK_THROWS_AS(parse_config(bad_num), Error);
  std::istringstream bad_bool("use_npc = maybe\n");
  CHECK_THROWS_AS(parse_config(bad_bool), Error);
}

TEST_CASE("validation ranges") {
  auto bad = [](auto mutate) {
    PipelineConfig c;
    mutate(c);
    return c;
  };
  CHECK_THROWS_AS(bad([](PipelineConfig& c) { c.tau = 0.0; }).validate(), Error);
  CHECK_THROWS_AS(bad([](PipelineConfig& c) { c.alpha = 1.5; }).validate(), Error);
  CHECK_THROWS_AS(bad([](PipelineConfig& c) { c.mu = -0.1; }).validate(), Error);
  CHECK_THROWS_AS(bad([](PipelineConfig& c) { c.rho = 1.0; }).validate(), Error);
  CHECK_THROWS_AS(bad([](PipelineConfig& c) { c.lambda_reg = 0.0; }).validate(), Error);
  CHECK_THROWS_AS(bad([](PipelineConfig& c) { c.dbscan_min_pts = 0; }).validate(), Error);
  CHECK_THROWS_AS(bad([](PipelineConfig& c) { c.use_otpm = false; }).validate(), Error);
  CHECK_NOTHROW(bad([](PipelineConfig& c) { c.alpha = 0.0; c.mu = 1.0; }).validate());
}

TEST_CASE("write then parse reproduces the config") {
  PipelineConfig c;
  c.tau = 0.1 + 0.2;
  c.learning_rate = 1.0 / 3.0;
  c.seed = 18446744073709551615ULL;
  c.use_mhl = false;
  std::istringstream in(to_string(c));
  CHECK(parse_config(in) == c);
  std::istringstream again(to_string(c));
  CHECK(to_string(parse_config(again)) == to_string(c));
}
