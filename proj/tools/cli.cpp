#include "cli.hpp"

#include <array>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mbridge/calibration.hpp"
#include "mbridge/config.hpp"
#include "mbridge/io.hpp"
#include "mbridge/metrics.hpp"
#include "mbridge/otmatch.hpp"
#include "mbridge/pipeline.hpp"
#include "mbridge/synthgen.hpp"

namespace mbridge::cli {
namespace fs = std::filesystem;
namespace {

struct DataFiles {
  fs::path visible;
  fs::path infrared;
  fs::path visible_truth;
  fs::path infrared_truth;
  FileFormat format = FileFormat::binary;
};

std::string extension(FileFormat f) { return f == FileFormat::binary ? ".mbrg" : ".csv"; }

DataFiles data_files(const fs::path& dir, FileFormat format) {
  return {dir / ("visible" + extension(format)), dir / ("infrared" + extension(format)),
          dir / "visible_truth.txt", dir / "infrared_truth.txt", format};
}

// Binary files win when both formats are present.
DataFiles locate_data(const fs::path& dir) {
  for (FileFormat f : {FileFormat::binary, FileFormat::csv}) {
    DataFiles files = data_files(dir, f);
    if (fs::exists(files.visible) && fs::exists(files.infrared)) return files;
  }
  throw IoError("no visible/infrared feature files found in " + dir.string());
}

FileFormat format_from_path(const fs::path& p) {
  return p.extension() == ".mbrg" ? FileFormat::binary : FileFormat::csv;
}

ModalityDataset load_dataset(const fs::path& features, const fs::path& truth, FileFormat format,
                             Modality m) {
  ModalityDataset ds{load_features(features, format), m, std::nullopt};
  if (fs::exists(truth)) ds.truth = load_labels(truth);
  ds.validate();
  return ds;
}

std::pair<ModalityDataset, ModalityDataset> load_pair(const fs::path& dir) {
  const DataFiles f = locate_data(dir);
  return {load_dataset(f.visible, f.visible_truth, f.format, Modality::visible),
          load_dataset(f.infrared, f.infrared_truth, f.format, Modality::infrared)};
}

int threads_from_env() {
  const char* env = std::getenv("MB_THREADS");
  if (!env || !*env) return 0;
  int v = 0;
  const std::string_view s(env);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 1) {
    throw Error("MB_THREADS must be a positive integer, got '" + std::string(s) + "'");
  }
  return v;
}

// Shared flags of the subcommands that run the pipeline.
struct ConfigFlags {
  std::string config_path;
  std::vector<std::string> sets;
  int epochs = 0;
  int warmup = 0;
  std::uint64_t seed = 0;
  int threads = 1;
  CLI::Option* epochs_opt = nullptr;
  CLI::Option* warmup_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    app.add_option("--set", sets, "override a config entry, key=value (repeatable)");
    epochs_opt = app.add_option("--epochs", epochs, "total_epochs override");
    warmup_opt = app.add_option("--warmup", warmup, "warmup_epochs override");
    seed_opt = app.add_option("--seed", seed, "seed override");
    threads_opt = app.add_option("--threads", threads, "worker threads (falls back to MB_THREADS)")
                      ->check(CLI::PositiveNumber);
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path, cfg);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error("--set expects key=value, got '" + kv + "'");
      apply_config_entry(cfg, std::string_view(kv).substr(0, eq),
                         std::string_view(kv).substr(eq + 1));
    }
    if (epochs_opt->count()) cfg.total_epochs = epochs;
    if (warmup_opt->count()) cfg.warmup_epochs = warmup;
    if (seed_opt->count()) cfg.seed = seed;
    if (threads_opt->count()) {
      cfg.threads = threads;
    } else if (const int env = threads_from_env(); env > 0) {
      cfg.threads = env;
    }
    cfg.validate();
    return cfg;
  }
};

void echo_config(std::ostream& out, const PipelineConfig& cfg) {
  out << "# resolved config\n";
  write_config(out, cfg);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed for " + path.string());
}

void report_warnings(std::ostream& err, const std::vector<pipeline::EpochReport>& epochs) {
  for (const auto& e : epochs) {
    for (const auto& w : e.warnings) err << "warning: epoch " << e.epoch << ": " << w << '\n';
  }
}

std::string fmt(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s.push_back(' ');
    s += std::to_string(v[i]);
  }
  return s;
}

// "baseline", or '+'-joined module names, e.g. "npc+otpm+mhl".
pipeline::AblationToggle parse_toggle(const std::string& spec) {
  pipeline::AblationToggle t;
  if (spec == "baseline") return t;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, '+')) {
    if (part == "npc") {
      t.npc = true;
    } else if (part == "nrl") {
      t.nrl = true;
    } else if (part == "otpm") {
      t.otpm = true;
    } else if (part == "mhl") {
      t.mhl = true;
    } else if (part != "baseline") {
      throw Error("unknown module '" + part + "' in grid entry '" + spec + "'");
    }
  }
  return t;
}

int cmd_synth(const synth::SynthSpec& spec, const fs::path& out_dir, FileFormat format,
              std::ostream& out) {
  const auto data = synth::generate(spec);
  fs::create_directories(out_dir);
  const DataFiles files = data_files(out_dir, format);
  save_features(data.visible.features, files.visible, format);
  save_features(data.infrared.features, files.infrared, format);
  save_labels(*data.visible.truth, files.visible_truth);
  save_labels(*data.infrared.truth, files.infrared_truth);
  std::vector<fs::path> written = {files.visible, files.infrared, files.visible_truth,
                                   files.infrared_truth};
  if (spec.noise_frac > 0.0) {
    const auto nv = synth::corrupt_labels(*data.visible.truth, spec.noise_frac,
                                          spec.n_identities, spec.seed + 1);
    const auto nr = synth::corrupt_labels(*data.infrared.truth, spec.noise_frac,
                                          spec.n_identities, spec.seed + 2);
    save_labels(nv.labels, out_dir / "visible_noisy_labels.txt");
    save_labels(nr.labels, out_dir / "infrared_noisy_labels.txt");
    written.push_back(out_dir / "visible_noisy_labels.txt");
    written.push_back(out_dir / "infrared_noisy_labels.txt");
  }
  for (const auto& p : written) out << "wrote " << p.string() << '\n';
  return 0;
}

int cmd_run(const PipelineConfig& cfg, const fs::path& data_dir, const fs::path& out_dir,
            std::ostream& out, std::ostream& err) {
  const auto [vis, ir] = load_pair(data_dir);
  echo_config(out, cfg);
  fs::create_directories(out_dir);
  write_text(out_dir / "config.txt", to_string(cfg));

  const auto report = pipeline::run(cfg, vis, ir);
  report_warnings(err, report.epochs);

  std::ostringstream csv;
  pipeline::write_metrics_csv(csv, report.epochs);
  write_text(out_dir / "metrics.csv", csv.str());

  const auto& s = report.state;
  save_matrix(s.visible, out_dir / "visible_embeddings.mbrg", FileFormat::binary);
  save_matrix(s.infrared, out_dir / "infrared_embeddings.mbrg", FileFormat::binary);
  if (!report.epochs.empty()) {
    save_labels(s.labels_v.labels, out_dir / "visible_labels.txt");
    save_labels(s.labels_r.labels, out_dir / "infrared_labels.txt");
    if (s.bank_v.size() > 0) save_matrix(s.bank_v.rows, out_dir / "bank_visible.mbrg", FileFormat::binary);
    if (s.bank_r.size() > 0) save_matrix(s.bank_r.rows, out_dir / "bank_infrared.mbrg", FileFormat::binary);
    if (s.hybrid) save_matrix(s.hybrid->rows, out_dir / "bank_hybrid.mbrg", FileFormat::binary);
    const auto& last = report.epochs.back();
    out << "final epoch " << last.epoch << ": rank1=" << (last.rank1 ? fmt(*last.rank1) : "-")
        << " mAP=" << (last.map ? fmt(*last.map) : "-")
        << " ARI_v=" << (last.ari_v ? fmt(*last.ari_v) : "-")
        << " ARI_r=" << (last.ari_r ? fmt(*last.ari_r) : "-") << '\n';
  }
  out << "wrote " << (out_dir / "metrics.csv").string() << '\n';
  return 0;
}

int cmd_ablate(const PipelineConfig& cfg, const fs::path& data_dir, const fs::path& out_dir,
               const std::vector<int>& orders, const std::vector<std::string>& grid_specs,
               std::ostream& out, std::ostream& err) {
  std::vector<pipeline::AblationToggle> grid;
  const auto table = pipeline::ablation_table();
  for (int o : orders) {
    if (o < 1 || o > static_cast<int>(table.size())) {
      throw Error("ablation order " + std::to_string(o) + " outside 1.." +
                  std::to_string(table.size()));
    }
    grid.push_back(table[static_cast<std::size_t>(o - 1)]);
  }
  for (const auto& spec : grid_specs) grid.push_back(parse_toggle(spec));
  if (grid.empty()) grid = table;
  for (const auto& t : grid) {
    if (t.mhl && !t.otpm) throw Error("MHL cannot run without OTPM");
  }

  const auto [vis, ir] = load_pair(data_dir);
  echo_config(out, cfg);
  const auto rows = pipeline::ablate(cfg, vis, ir, grid);
  (void)err;
  std::ostringstream csv;
  pipeline::write_ablation_csv(csv, rows);
  fs::create_directories(out_dir);
  write_text(out_dir / "config.txt", to_string(cfg));
  write_text(out_dir / "ablation.csv", csv.str());
  out << csv.str();
  return 0;
}

struct EvalArgs {
  std::string data;
  std::string embeddings;
  std::string visible_labels;
  std::string infrared_labels;
  std::string format = "csv";
  double lambda = 25.0;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  auto [vis, ir] = load_pair(a.data);
  Matrix emb_v = vis.features.data();
  Matrix emb_r = ir.features.data();
  if (!a.embeddings.empty()) {
    const fs::path dir = a.embeddings;
    emb_v = load_matrix(dir / "visible_embeddings.mbrg", FileFormat::binary);
    emb_r = load_matrix(dir / "infrared_embeddings.mbrg", FileFormat::binary);
  }
  if (!vis.truth || !ir.truth) throw Error("eval needs visible_truth.txt and infrared_truth.txt");
  if (emb_v.rows() != vis.truth->size() || emb_r.rows() != ir.truth->size()) {
    throw Error("embeddings and truth files disagree on sample counts");
  }
  const bool json = a.format == "json";
  if (!json && a.format != "csv") throw Error("--format must be csv or json");

  auto emit = [&](const metrics::EvalReport& r, std::string_view scope) {
    if (json) {
      metrics::write_json_line(out, r, scope);
    } else {
      metrics::write_csv_rows(out, r, scope);
    }
  };
  if (!json) metrics::write_csv_header(out);

  std::optional<PseudoLabeling> lv;
  std::optional<PseudoLabeling> lr;
  auto clustering = [&](const std::string& path, const std::vector<int>& truth,
                        std::optional<PseudoLabeling>& slot, std::string_view scope) {
    if (path.empty()) return;
    auto labels = load_labels(path);
    if (labels.size() != truth.size()) throw Error(path + ": label count does not match truth");
    PseudoLabeling pl{labels, 0};
    for (int l : labels) pl.y_count = std::max(pl.y_count, l + 1);
    pl.compact();
    slot = pl;
    emit(metrics::clustering_report(labels, truth), scope);
  };
  clustering(a.visible_labels, *vis.truth, lv, "visible");
  clustering(a.infrared_labels, *ir.truth, lr, "infrared");

  metrics::EvalReport cross;
  cross.retrieval = metrics::cmc_map(emb_r, *ir.truth, emb_v, *vis.truth);
  if (lv && lr && lv->y_count > 0 && lr->y_count > 0) {
    const FeatureMatrix fv = l2_normalize(FeatureMatrix(emb_v));
    const FeatureMatrix fr = l2_normalize(FeatureMatrix(emb_r));
    const auto pv = calibration::centroid_prototypes(fv, *lv);
    const auto pr = calibration::centroid_prototypes(fr, *lr);
    const auto plan = otmatch::sinkhorn(otmatch::build_cost(pv, pr), a.lambda);
    const auto match = otmatch::extract_match(plan);
    cross.match_accuracy = metrics::match_accuracy(match, metrics::majority_identity(*lv, *vis.truth),
                                                   metrics::majority_identity(*lr, *ir.truth))
                               .mean();
  }
  emit(cross, "cross_modal");
  return 0;
}

struct SinkhornArgs {
  std::string cost;
  std::string plan_out;
  double lambda = 25.0;
  int max_iters = 1000;
  double tol = 1e-8;
};

int cmd_sinkhorn(const SinkhornArgs& a, std::ostream& out, std::ostream& err) {
  const Matrix c = load_matrix(a.cost, format_from_path(a.cost));
  const auto plan = otmatch::sinkhorn({c}, a.lambda, a.max_iters, a.tol);
  const auto match = otmatch::extract_match(plan);

  std::ostringstream q;
  for (std::size_t i = 0; i < plan.q.rows(); ++i) {
    for (std::size_t j = 0; j < plan.q.cols(); ++j) q << (j ? "," : "") << fmt(plan.q(i, j));
    q << '\n';
  }
  out << "# plan\n" << q.str();
  out << "# summary\n";
  out << "iterations," << plan.iterations << '\n';
  out << "converged," << (plan.converged ? "true" : "false") << '\n';
  out << "marginal_residual," << fmt(otmatch::marginal_residual(plan.q)) << '\n';
  out << "v2r," << join(match.v2r) << '\n';
  out << "r2v," << join(match.r2v) << '\n';
  if (!plan.converged) {
    err << "warning: sinkhorn did not reach tol " << fmt(a.tol) << " within " << a.max_iters
        << " iterations\n";
  }
  if (!a.plan_out.empty()) write_text(a.plan_out, q.str());
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-modality pseudo-label calibration, OT prototype matching and hybrid memory "
               "contrastive learning on embedding files"};
  app.name("mbridge");
  app.require_subcommand(1);

  // synth
  synth::SynthSpec spec;
  std::string synth_out;
  std::string synth_format = "binary";
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic two-modality dataset");
  synth_cmd->add_option("--identities", spec.n_identities, "number of identities");
  synth_cmd->add_option("--per", spec.per_identity_per_modality, "samples per identity per modality");
  synth_cmd->add_option("--dim", spec.d, "embedding dimension");
  synth_cmd->add_option("--sigma", spec.intra_sigma, "within-identity standard deviation");
  synth_cmd->add_option("--shift", spec.modality_shift_norm, "modality offset length");
  synth_cmd->add_option("--noise", spec.noise_frac, "also emit labels with this fraction corrupted");
  synth_cmd->add_option("--seed", spec.seed, "random seed");
  synth_cmd->add_option("--format", synth_format, "binary or csv")
      ->check(CLI::IsMember({"binary", "csv"}));
  synth_cmd->add_option("--out", synth_out, "output directory")->required();

  // run
  ConfigFlags run_flags;
  std::string run_data;
  std::string run_out;
  auto* run_cmd = app.add_subcommand("run", "run the full training pipeline");
  run_flags.attach(*run_cmd);
  run_cmd->add_option("--data", run_data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  run_cmd->add_option("--out", run_out, "output directory")->required();

  // ablate
  ConfigFlags ablate_flags;
  std::string ablate_data;
  std::string ablate_out;
  std::vector<int> ablate_orders;
  std::vector<std::string> ablate_grid;
  auto* ablate_cmd = app.add_subcommand("ablate", "run the module ablation grid");
  ablate_flags.attach(*ablate_cmd);
  ablate_cmd->add_option("--data", ablate_data, "dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  ablate_cmd->add_option("--out", ablate_out, "output directory")->required();
  ablate_cmd->add_option("--rows", ablate_orders, "table rows to run (1-8); default all")
      ->delimiter(',');
  ablate_cmd->add_option("--grid", ablate_grid,
                         "custom rows: 'baseline' or modules joined by '+', e.g. npc+otpm+mhl")
      ->delimiter(',');

  // eval
  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "compute clustering, matching and retrieval metrics");
  eval_cmd->add_option("--data", eval_args.data, "dataset directory with truth files")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--embeddings", eval_args.embeddings, "run output directory")
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--visible-labels", eval_args.visible_labels, "visible pseudo-labels")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--infrared-labels", eval_args.infrared_labels, "infrared pseudo-labels")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--lambda", eval_args.lambda, "OT regularisation for match accuracy");
  eval_cmd->add_option("--format", eval_args.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  // sinkhorn
  SinkhornArgs sk;
  auto* sk_cmd = app.add_subcommand("sinkhorn", "solve entropic OT for a cost matrix file");
  sk_cmd->add_option("--cost", sk.cost, "cost matrix (.csv, or .mbrg binary)")
      ->required()
      ->check(CLI::ExistingFile);
  sk_cmd->add_option("--lambda", sk.lambda, "regularisation strength");
  sk_cmd->add_option("--max-iters", sk.max_iters, "iteration cap");
  sk_cmd->add_option("--tol", sk.tol, "marginal residual tolerance");
  sk_cmd->add_option("--out", sk.plan_out, "write the plan as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return 2;
  }

  try {
    if (synth_cmd->parsed()) {
      return cmd_synth(spec, synth_out, parse_file_format(synth_format), out);
    }
    if (run_cmd->parsed()) return cmd_run(run_flags.resolve(), run_data, run_out, out, err);
    if (ablate_cmd->parsed()) {
      return cmd_ablate(ablate_flags.resolve(), ablate_data, ablate_out, ablate_orders,
                        ablate_grid, out, err);
    }
    if (eval_cmd->parsed()) return cmd_eval(eval_args, out);
    if (sk_cmd->parsed()) return cmd_sinkhorn(sk, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace mbridge::cli
