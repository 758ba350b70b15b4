#include <benchmark/benchmark.h>

#include <random>

#include "mbridge/calibration.hpp"
#include "mbridge/clustering.hpp"
#include "mbridge/config.hpp"
#include "mbridge/losses.hpp"
#include "mbridge/otmatch.hpp"
#include "mbridge/synthgen.hpp"

using namespace mbridge;

namespace {

synth::SynthData data(int identities, int per) {
  synth::SynthSpec spec;
  spec.n_identities = identities;
  spec.per_identity_per_modality = per;
  spec.d = 32;
  spec.intra_sigma = 0.05;
  return synth::generate(spec);
}

Matrix unit_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double& x : m.row(i)) {
      x = g(rng);
      s += x * x;
    }
    for (double& x : m.row(i)) x /= std::sqrt(s);
  }
  return m;
}

}  // namespace

static void BM_Sinkhorn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto cost = otmatch::build_cost({unit_rows(n, 32, 1), calibration::PrototypeKind::robust},
                                        {unit_rows(n, 32, 2), calibration::PrototypeKind::robust});
  for (auto _ : state) {
    auto plan = otmatch::sinkhorn(cost, 25.0, 1000, 1e-8);
    benchmark::DoNotOptimize(plan.q.values().data());
  }
}
BENCHMARK(BM_Sinkhorn)->Arg(16)->Arg(64);

static void BM_PairwiseDistances(benchmark::State& state) {
  const auto d = data(20, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto dist = clustering::pairwise_distances(d.visible.features, clustering::Metric::euclidean);
    benchmark::DoNotOptimize(dist.values.values().data());
  }
}
BENCHMARK(BM_PairwiseDistances)->Arg(10)->Arg(40);

static void BM_Dbscan(benchmark::State& state) {
  const auto d = data(20, static_cast<int>(state.range(0)));
  const auto dist = clustering::pairwise_distances(d.visible.features, clustering::Metric::euclidean);
  for (auto _ : state) {
    auto labels = clustering::dbscan(dist, 0.3, 4);
    benchmark::DoNotOptimize(labels.labels.data());
  }
}
BENCHMARK(BM_Dbscan)->Arg(10)->Arg(40);

static void BM_Calibrate(benchmark::State& state) {
  const auto d = data(20, static_cast<int>(state.range(0)));
  const auto dist = clustering::pairwise_distances(d.visible.features, clustering::Metric::euclidean);
  const auto labels = clustering::dbscan(dist, 0.3, 4);
  const PipelineConfig config;
  for (auto _ : state) {
    auto cal = calibration::calibrate(d.visible.features, labels, config, dist);
    benchmark::DoNotOptimize(cal.labeling.labels.data());
  }
}
BENCHMARK(BM_Calibrate)->Arg(10)->Arg(40);

static void BM_NrlLoss(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  losses::Batch batch{unit_rows(n, 32, 3), std::vector<int>(n, 0), Modality::visible};
  for (std::size_t i = 0; i < n; ++i) batch.labels[i] = static_cast<int>(i % 8);
  for (auto _ : state) {
    auto l = losses::nrl_loss(batch, 1.0, 1.0);
    benchmark::DoNotOptimize(l.value);
  }
}
BENCHMARK(BM_NrlLoss)->Arg(32)->Arg(128);

static void BM_ClusterNce(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  losses::Batch batch{unit_rows(n, 32, 4), std::vector<int>(n, 0), Modality::visible};
  for (std::size_t i = 0; i < n; ++i) batch.labels[i] = static_cast<int>(i % 8);
  const Matrix memory = unit_rows(8, 32, 5);
  for (auto _ : state) {
    auto l = losses::cluster_nce(batch, memory, nullptr, 0.05);
    benchmark::DoNotOptimize(l.value);
  }
}
BENCHMARK(BM_ClusterNce)->Arg(32)->Arg(128);
BENCHMARK_MAIN();
