#include "mbridge/pipeline.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <numeric>
#include <ostream>
#include <string>

#include "mbridge/clustering.hpp"
#include "mbridge/losses.hpp"
#include "mbridge/metrics.hpp"

namespace mbridge::pipeline {
namespace {

struct SampledBatch {
  losses::Batch batch;
  std::vector<std::size_t> rows;  // embedding row of each batch entry
};

bool past_warmup(const TrainState& s, const PipelineConfig& c) {
  return s.epoch >= c.warmup_epochs;
}

PseudoLabeling cluster_modality(const Matrix& emb, const PipelineConfig& config) {
  const FeatureMatrix fm(emb, true);
  const auto dist =
      clustering::pairwise_distances(fm, clustering::Metric::cosine_distance, config.threads);
  return clustering::dbscan(dist, config.dbscan_eps, config.dbscan_min_pts);
}

// P clusters drawn without replacement, K members each (with replacement
// only when a cluster has fewer than K members).
SampledBatch sample_batch(const Matrix& emb, const PseudoLabeling& labels, Modality modality,
                          int batch_p, int batch_k, std::mt19937_64& rng) {
  const auto groups = labels.members();
  std::vector<std::size_t> ids(groups.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(std::min<std::size_t>(ids.size(), static_cast<std::size_t>(batch_p)));
  std::sort(ids.begin(), ids.end());

  SampledBatch out;
  out.batch.modality = modality;
  std::vector<std::size_t> pool;
  for (std::size_t c : ids) {
    pool = groups[c];
    const auto k = static_cast<std::size_t>(batch_k);
    if (pool.size() >= k) {
      for (std::size_t t = 0; t < k; ++t) {
        std::uniform_int_distribution<std::size_t> pick(t, pool.size() - 1);
        std::swap(pool[t], pool[pick(rng)]);
        out.rows.push_back(pool[t]);
      }
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      for (std::size_t t = 0; t < k; ++t) out.rows.push_back(pool[pick(rng)]);
    }
    out.batch.labels.insert(out.batch.labels.end(), k, static_cast<int>(c));
  }
  out.batch.features = Matrix(out.rows.size(), emb.cols());
  for (std::size_t r = 0; r < out.rows.size(); ++r) {
    const auto src = emb.row(out.rows[r]);
    std::copy(src.begin(), src.end(), out.batch.features.row(r).begin());
  }
  return out;
}

void apply_step(Matrix& emb, const SampledBatch& b, const Matrix& grad, double lr) {
  if (lr == 0.0) return;
  std::vector<std::size_t> touched = b.rows;
  for (std::size_t r = 0; r < b.rows.size(); ++r) {
    auto row = emb.row(b.rows[r]);
    const auto g = grad.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] -= lr * g[j];
  }
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  for (std::size_t i : touched) {
    if (!normalize_in_place(emb.row(i))) {
      throw Error("embedding row " + std::to_string(i) + " collapsed to zero");
    }
  }
}

void require_finite(const TrainState& s) {
  auto check = [&](const Matrix& m, const char* what) {
    if (!all_finite(m)) {
      throw Error(std::string("non-finite values in ") + what + " after epoch " +
                  std::to_string(s.epoch));
    }
  };
  check(s.visible, "visible embeddings");
  check(s.infrared, "infrared embeddings");
  check(s.bank_v.rows, "visible memory");
  check(s.bank_r.rows, "infrared memory");
  if (s.hybrid) check(s.hybrid->rows, "hybrid memory");
}

std::string format_value(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_value(*v) : std::string();
}

}  // namespace

TrainState init_state(const ModalityDataset& visible, const ModalityDataset& infrared,
                      const PipelineConfig& config) {
  config.validate();
  visible.validate();
  infrared.validate();
  if (visible.features.d() != infrared.features.d()) {
    throw Error("visible and infrared embeddings differ in dimension");
  }
  TrainState s;
  s.visible = l2_normalize(visible.features).data();
  s.infrared = l2_normalize(infrared.features).data();
  s.truth_v = visible.truth;
  s.truth_r = infrared.truth;
  s.rng.seed(config.seed);
  return s;
}

void prepare_epoch(TrainState& s, const PipelineConfig& config, EpochReport& report) {
  report.epoch = s.epoch;
  const bool post = past_warmup(s, config);

  s.labels_v = cluster_modality(s.visible, config);
  s.labels_r = cluster_modality(s.infrared, config);

  const bool calibrate = post && config.use_npc;
  auto refresh = [&](const Matrix& emb, PseudoLabeling& labels, calibration::PrototypeSet& protos,
                     memory::MemoryBank& bank, Modality m) {
    if (labels.y_count == 0) {
      report.warnings.push_back(std::string("no ") + std::string(to_string(m)) +
                                " clusters this epoch");
      protos = {};
      bank = {Matrix(), config.mu, memory::bank_kind(m)};
      return;
    }
    const FeatureMatrix fm(emb, true);
    if (calibrate) {
      auto cal = calibration::calibrate(fm, labels, config);
      labels = std::move(cal.labeling);
      protos = std::move(cal.prototypes);
    } else {
      protos = calibration::centroid_prototypes(fm, labels);
    }
    bank = memory::init_from_centroids(fm, labels, config.mu, memory::bank_kind(m));
  };
  refresh(s.visible, s.labels_v, s.protos_v, s.bank_v, Modality::visible);
  refresh(s.infrared, s.labels_r, s.protos_r, s.bank_r, Modality::infrared);

  s.match.reset();
  s.hybrid.reset();
  const bool both = s.labels_v.y_count > 0 && s.labels_r.y_count > 0;
  if (post && config.use_otpm && both) {
    const auto cost = otmatch::build_cost(s.protos_v, s.protos_r);
    const auto plan =
        otmatch::sinkhorn(cost, config.lambda_reg, config.sinkhorn_max_iters, config.sinkhorn_tol);
    if (!plan.converged) {
      report.warnings.push_back("sinkhorn stopped after " + std::to_string(plan.iterations) +
                                " iterations with residual " + format_value(plan.max_residual));
    }
    s.match = otmatch::extract_match(plan);
    if (config.use_mhl) {
      // The hybrid memory lives on the side with fewer clusters.
      s.hybrid_anchor =
          s.labels_v.y_count < s.labels_r.y_count ? Modality::visible : Modality::infrared;
      const auto& anchor_bank = s.hybrid_anchor == Modality::infrared ? s.bank_r : s.bank_v;
      s.hybrid = memory::build_hybrid(anchor_bank, s.protos_v, s.protos_r, *s.match, config.alpha,
                                      s.hybrid_anchor);
    }
  }
  s.nrl_active = post && config.use_nrl;

  report.y_v = s.labels_v.y_count;
  report.y_r = s.labels_r.y_count;
  if (s.truth_v) report.ari_v = metrics::ari(s.labels_v.labels, *s.truth_v);
  if (s.truth_r) report.ari_r = metrics::ari(s.labels_r.labels, *s.truth_r);
  if (s.match && s.truth_v && s.truth_r) {
    report.match_acc = metrics::match_accuracy(*s.match,
                                               metrics::majority_identity(s.labels_v, *s.truth_v),
                                               metrics::majority_identity(s.labels_r, *s.truth_r))
                           .mean();
  }
}

void train_epoch(TrainState& s, const PipelineConfig& config, EpochReport& report) {
  const bool have_v = s.labels_v.y_count > 0;
  const bool have_r = s.labels_r.y_count > 0;

  int p = config.batch_p;
  const int y_min = std::min(have_v ? s.labels_v.y_count : p, have_r ? s.labels_r.y_count : p);
  if (y_min < p) {
    report.warnings.push_back("batch_p shrunk from " + std::to_string(p) + " to " +
                              std::to_string(y_min));
    p = y_min;
  }

  int iters = config.iters_per_epoch;
  if (iters == 0) {
    const std::size_t per_batch = static_cast<std::size_t>(config.batch_p * config.batch_k);
    const std::size_t n = std::max(s.visible.rows(), s.infrared.rows());
    iters = static_cast<int>((n + per_batch - 1) / per_batch);
  }
  if (!have_v && !have_r) iters = 0;

  const bool even = s.epoch % 2 == 0;
  const Modality mi_side = even ? other(s.hybrid_anchor) : s.hybrid_anchor;
  const std::vector<int>* to_anchor = nullptr;
  if (s.match) to_anchor = s.hybrid_anchor == Modality::infrared ? &s.match->v2r : &s.match->r2v;

  double sum_ms = 0.0;
  double sum_mi = 0.0;
  double sum_nrl = 0.0;
  bool any_mi = false;
  bool any_nrl = false;
  for (int it = 0; it < iters; ++it) {
    std::optional<SampledBatch> bv;
    std::optional<SampledBatch> br;
    if (have_v) bv = sample_batch(s.visible, s.labels_v, Modality::visible, p, config.batch_k, s.rng);
    if (have_r) br = sample_batch(s.infrared, s.labels_r, Modality::infrared, p, config.batch_k, s.rng);

    // Forward pass against read-only memories.
    auto forward = [&](const SampledBatch& b, const memory::MemoryBank& bank) {
      const auto rows = b.batch.size();
      const auto cols = b.batch.features.cols();
      const losses::LossValue ms = losses::cluster_nce(b.batch, bank.rows, nullptr, config.tau);
      losses::LossValue mi = losses::LossValue::zero(rows, cols);
      losses::LossValue nrl = losses::LossValue::zero(rows, cols);
      if (s.hybrid && b.batch.modality == mi_side) {
        mi = losses::modality_invariant_loss(b.batch, *s.hybrid, s.epoch, *to_anchor, config.tau,
                                             s.hybrid_anchor);
        sum_mi += mi.value;
        any_mi = true;
      }
      if (s.nrl_active && rows >= 2) {
        nrl = losses::nrl_loss(b.batch, config.gamma, config.sigma);
        sum_nrl += nrl.value;
        any_nrl = true;
      }
      sum_ms += ms.value;
      return losses::total_loss(ms, mi, nrl, config.beta1, config.beta2);
    };
    std::optional<losses::LossValue> tv;
    std::optional<losses::LossValue> tr;
    if (bv) tv = forward(*bv, s.bank_v);
    if (br) tr = forward(*br, s.bank_r);

    if (bv) apply_step(s.visible, *bv, tv->grad, config.learning_rate);
    if (br) apply_step(s.infrared, *br, tr->grad, config.learning_rate);

    // Memory updates use the forward-pass features.
    auto update = [&](const SampledBatch& b, memory::MemoryBank& bank) {
      for (std::size_t i = 0; i < b.batch.size(); ++i) {
        memory::momentum_update(bank, b.batch.labels[i], b.batch.features.row(i), config.mu);
      }
      if (s.hybrid && b.batch.modality == mi_side) {
        memory::hybrid_update(*s.hybrid, s.epoch, b.batch.features, b.batch.labels,
                              b.batch.modality, *to_anchor, config.mu, s.hybrid_anchor);
      }
    };
    if (bv) update(*bv, s.bank_v);
    if (br) update(*br, s.bank_r);
  }

  if (iters > 0) {
    const double inv = 1.0 / iters;
    report.l_ms = sum_ms * inv;
    double total = *report.l_ms;
    if (any_mi) {
      report.l_mi = sum_mi * inv;
      total += config.beta1 * *report.l_mi;
    }
    if (any_nrl) {
      report.l_nrl = sum_nrl * inv;
      total += config.beta2 * *report.l_nrl;
    }
    report.l_total = total;
  } else {
    report.warnings.push_back("no clusters to train on; epoch skipped");
  }

  if (s.truth_v && s.truth_r) {
    const auto r = metrics::cmc_map(s.infrared, *s.truth_r, s.visible, *s.truth_v);
    if (r.evaluated > 0) {
      report.rank1 = r.rank_k(1);
      report.map = r.map;
    }
  }
  require_finite(s);
  ++s.epoch;
}

EpochReport run_epoch(TrainState& state, const PipelineConfig& config) {
  EpochReport report;
  prepare_epoch(state, config, report);
  train_epoch(state, config, report);
  return report;
}

RunReport run(const PipelineConfig& config, const ModalityDataset& visible,
              const ModalityDataset& infrared) {
  RunReport out{{}, init_state(visible, infrared, config)};
  for (int e = 0; e < config.total_epochs; ++e) out.epochs.push_back(run_epoch(out.state, config));
  return out;
}

void write_metrics_csv(std::ostream& out, const std::vector<EpochReport>& epochs) {
  out << "epoch,L_MS,L_MI,L_NRL,L_total,Y_v,Y_r,ARI_v,ARI_r,match_acc,rank1,mAP\n";
  for (const auto& e : epochs) {
    out << e.epoch << ',' << format_optional(e.l_ms) << ',' << format_optional(e.l_mi) << ','
        << format_optional(e.l_nrl) << ',' << format_optional(e.l_total) << ',' << e.y_v << ','
        << e.y_r << ',' << format_optional(e.ari_v) << ',' << format_optional(e.ari_r) << ','
        << format_optional(e.match_acc) << ',' << format_optional(e.rank1) << ','
        << format_optional(e.map) << '\n';
  }
}

std::vector<AblationToggle> ablation_table() {
  return {
      {false, false, false, false}, {true, false, false, false}, {false, true, false, false},
      {true, true, false, false},   {false, false, true, true},  {true, false, true, true},
      {false, true, true, true},    {true, true, true, true},
  };
}

std::vector<AblationRow> ablate(const PipelineConfig& config, const ModalityDataset& visible,
                                const ModalityDataset& infrared,
                                const std::vector<AblationToggle>& grid) {
  for (const auto& t : grid) {
    if (t.mhl && !t.otpm) throw Error("MHL cannot run without OTPM");
  }
  const auto table = ablation_table();
  std::vector<AblationRow> rows;
  for (const auto& t : grid) {
    PipelineConfig cfg = config;
    cfg.use_npc = t.npc;
    cfg.use_nrl = t.nrl;
    cfg.use_otpm = t.otpm;
    cfg.use_mhl = t.mhl;
    const RunReport r = run(cfg, visible, infrared);
    AblationRow row;
    const auto pos = std::find(table.begin(), table.end(), t);
    row.order = pos == table.end() ? 0 : static_cast<int>(pos - table.begin()) + 1;
    row.toggle = t;
    if (!r.epochs.empty()) {
      const auto& last = r.epochs.back();
      row.rank1 = last.rank1.value_or(0.0);
      row.map = last.map.value_or(0.0);
      row.ari_v = last.ari_v.value_or(0.0);
      row.ari_r = last.ari_r.value_or(0.0);
    }
    rows.push_back(row);
  }
  return rows;
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << "order,npc,nrl,otpm,mhl,rank1,mAP,ARI_v,ARI_r\n";
  for (const auto& r : rows) {
    out << r.order << ',' << r.toggle.npc << ',' << r.toggle.nrl << ',' << r.toggle.otpm << ','
        << r.toggle.mhl << ',' << format_value(r.rank1) << ',' << format_value(r.map) << ','
        << format_value(r.ari_v) << ',' << format_value(r.ari_r) << '\n';
  }
}

}  // namespace mbridge::pipeline
