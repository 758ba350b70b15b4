#include "mbridge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <string>

#include <json.hpp>

namespace mbridge::metrics {
namespace {

// Dense relabeling with each negative label turned into its own cluster.
std::vector<std::size_t> compact_ids(const std::vector<int>& labels, std::size_t& count) {
  std::map<int, std::size_t> ids;
  std::vector<std::size_t> out(labels.size());
  count = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) {
      out[i] = count++;
      continue;
    }
    auto [it, inserted] = ids.try_emplace(labels[i], count);
    if (inserted) ++count;
    out[i] = it->second;
  }
  return out;
}

struct Contingency {
  std::map<std::pair<std::size_t, std::size_t>, double> cells;
  std::vector<double> pred_sizes;
  std::vector<double> truth_sizes;
  double n = 0.0;
};

Contingency contingency(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) {
    throw Error("label vectors differ in length (" + std::to_string(pred.size()) + " vs " +
                std::to_string(truth.size()) + ")");
  }
  std::size_t np = 0;
  std::size_t nt = 0;
  const auto p = compact_ids(pred, np);
  const auto t = compact_ids(truth, nt);
  Contingency c;
  c.pred_sizes.assign(np, 0.0);
  c.truth_sizes.assign(nt, 0.0);
  c.n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    c.cells[{p[i], t[i]}] += 1.0;
    c.pred_sizes[p[i]] += 1.0;
    c.truth_sizes[t[i]] += 1.0;
  }
  return c;
}

double entropy(const std::vector<double>& sizes, double n) {
  double h = 0.0;
  for (double s : sizes) {
    if (s > 0.0) h -= (s / n) * std::log(s / n);
  }
  return h;
}

double mutual_information(const Contingency& c) {
  double mi = 0.0;
  for (const auto& [key, nij] : c.cells) {
    mi += (nij / c.n) *
          std::log(c.n * nij / (c.pred_sizes[key.first] * c.truth_sizes[key.second]));
  }
  return std::max(0.0, mi);
}

double pairs(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace

double ari(const std::vector<int>& pred, const std::vector<int>& truth) {
  const Contingency c = contingency(pred, truth);
  if (c.n < 2.0) return 1.0;
  double index = 0.0;
  for (const auto& [key, nij] : c.cells) index += pairs(nij);
  double a = 0.0;
  for (double s : c.pred_sizes) a += pairs(s);
  double b = 0.0;
  for (double s : c.truth_sizes) b += pairs(s);
  const double expected = a * b / pairs(c.n);
  const double max_index = 0.5 * (a + b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

double nmi(const std::vector<int>& pred, const std::vector<int>& truth) {
  const Contingency c = contingency(pred, truth);
  const double hp = entropy(c.pred_sizes, c.n);
  const double ht = entropy(c.truth_sizes, c.n);
  if (hp + ht == 0.0) return 1.0;
  return std::clamp(2.0 * mutual_information(c) / (hp + ht), 0.0, 1.0);
}

double homogeneity(const std::vector<int>& pred, const std::vector<int>& truth) {
  const Contingency c = contingency(pred, truth);
  const double ht = entropy(c.truth_sizes, c.n);
  if (ht == 0.0) return 1.0;
  return std::clamp(mutual_information(c) / ht, 0.0, 1.0);
}

double completeness(const std::vector<int>& pred, const std::vector<int>& truth) {
  const Contingency c = contingency(pred, truth);
  const double hp = entropy(c.pred_sizes, c.n);
  if (hp == 0.0) return 1.0;
  return std::clamp(mutual_information(c) / hp, 0.0, 1.0);
}

double v_measure(const std::vector<int>& pred, const std::vector<int>& truth) {
  const double h = homogeneity(pred, truth);
  const double c = completeness(pred, truth);
  if (h + c == 0.0) return 0.0;
  return 2.0 * h * c / (h + c);
}

std::vector<int> majority_identity(const PseudoLabeling& labeling, const std::vector<int>& truth) {
  if (truth.size() != labeling.size()) throw Error("majority_identity: length mismatch");
  std::vector<std::map<int, std::size_t>> votes(static_cast<std::size_t>(labeling.y_count));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int l = labeling.labels[i];
    if (l >= 0 && l < labeling.y_count) ++votes[static_cast<std::size_t>(l)][truth[i]];
  }
  std::vector<int> out(votes.size(), -1);
  for (std::size_t c = 0; c < votes.size(); ++c) {
    std::size_t best = 0;
    // std::map iterates identities in ascending order, so strict > keeps the
    // smallest identity on ties.
    for (const auto& [id, count] : votes[c]) {
      if (count > best) {
        best = count;
        out[c] = id;
      }
    }
  }
  return out;
}

MatchAccuracy match_accuracy(const otmatch::CrossModalMatch& match,
                             const std::vector<int>& proto_truth_v,
                             const std::vector<int>& proto_truth_r) {
  if (match.v2r.size() != proto_truth_v.size() || match.r2v.size() != proto_truth_r.size()) {
    throw Error("match_accuracy: match and prototype truth sizes differ");
  }
  auto direction = [](const std::vector<int>& map, const std::vector<int>& from,
                      const std::vector<int>& to) {
    if (map.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < map.size(); ++i) {
      const int target = map[i];
      if (target < 0 || static_cast<std::size_t>(target) >= to.size()) {
        throw Error("match_accuracy: match entry out of range");
      }
      if (from[i] >= 0 && from[i] == to[static_cast<std::size_t>(target)]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(map.size());
  };
  return {direction(match.v2r, proto_truth_v, proto_truth_r),
          direction(match.r2v, proto_truth_r, proto_truth_v)};
}

double RetrievalReport::rank_k(std::size_t k) const {
  if (rank.empty() || k == 0) return 0.0;
  return rank[std::min(k, rank.size()) - 1];
}

RetrievalReport cmc_map(const Matrix& query, const std::vector<int>& query_ids,
                        const Matrix& gallery, const std::vector<int>& gallery_ids,
                        bool exclude_self) {
  if (query.rows() != query_ids.size() || gallery.rows() != gallery_ids.size()) {
    throw Error("cmc_map: identities do not match feature rows");
  }
  if (query.cols() != gallery.cols()) throw Error("cmc_map: query and gallery dimensions differ");
  if (exclude_self && query.rows() != gallery.rows()) {
    throw Error("cmc_map: exclude_self needs query and gallery to be the same set");
  }
  const std::size_t g = gallery.rows();
  const std::size_t depth = exclude_self ? (g > 0 ? g - 1 : 0) : g;

  std::vector<double> gallery_norm(g);
  for (std::size_t j = 0; j < g; ++j) gallery_norm[j] = norm(gallery.row(j));

  RetrievalReport out;
  out.rank.assign(depth, 0.0);
  std::vector<double> sims(g);
  std::vector<std::size_t> order;
  for (std::size_t q = 0; q < query.rows(); ++q) {
    order.clear();
    const double qn = norm(query.row(q));
    bool any_match = false;
    for (std::size_t j = 0; j < g; ++j) {
      if (exclude_self && j == q) continue;
      const double denom = qn * gallery_norm[j];
      sims[j] = denom > 0.0 ? dot(query.row(q), gallery.row(j)) / denom : 0.0;
      order.push_back(j);
      any_match = any_match || gallery_ids[j] == query_ids[q];
    }
    if (!any_match) {
      ++out.excluded;
      continue;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sims[a] > sims[b]; });

    std::size_t first_hit = depth;
    std::size_t hits = 0;
    double precision_sum = 0.0;
    for (std::size_t r = 0; r < order.size(); ++r) {
      if (gallery_ids[order[r]] != query_ids[q]) continue;
      if (hits == 0) first_hit = r;
      ++hits;
      precision_sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
    for (std::size_t k = first_hit; k < depth; ++k) out.rank[k] += 1.0;
    out.map += precision_sum / static_cast<double>(hits);
    ++out.evaluated;
  }
  if (out.evaluated > 0) {
    const double inv = 1.0 / static_cast<double>(out.evaluated);
    for (double& r : out.rank) r *= inv;
    out.map *= inv;
  }
  return out;
}

EvalReport clustering_report(const std::vector<int>& pred, const std::vector<int>& truth) {
  EvalReport r;
  r.ari = ari(pred, truth);
  r.nmi = nmi(pred, truth);
  r.homogeneity = homogeneity(pred, truth);
  r.completeness = completeness(pred, truth);
  r.v_measure = v_measure(pred, truth);
  return r;
}

namespace {

std::vector<std::pair<std::string, double>> flatten(const EvalReport& r) {
  std::vector<std::pair<std::string, double>> rows;
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) rows.emplace_back(key, *v);
  };
  put("ari", r.ari);
  put("nmi", r.nmi);
  put("homogeneity", r.homogeneity);
  put("completeness", r.completeness);
  put("v_measure", r.v_measure);
  put("match_accuracy", r.match_accuracy);
  if (r.retrieval) {
    for (std::size_t k : {1, 5, 10, 20}) {
      if (k <= r.retrieval->rank.size()) {
        rows.emplace_back("rank" + std::to_string(k), r.retrieval->rank_k(k));
      }
    }
    rows.emplace_back("mAP", r.retrieval->map);
    rows.emplace_back("queries_evaluated", static_cast<double>(r.retrieval->evaluated));
    rows.emplace_back("queries_excluded", static_cast<double>(r.retrieval->excluded));
  }
  return rows;
}

}  // namespace

void write_csv_header(std::ostream& out) { out << "scope,metric,value\n"; }

void write_csv_rows(std::ostream& out, const EvalReport& report, std::string_view scope) {
  const auto old = out.precision(10);
  for (const auto& [key, value] : flatten(report)) {
    out << scope << ',' << key << ',' << value << '\n';
  }
  out.precision(old);
}

void write_json_line(std::ostream& out, const EvalReport& report, std::string_view scope) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  if (!scope.empty()) j["scope"] = std::string(scope);
  for (const auto& [key, value] : flatten(report)) j[key] = value;
  out << j.dump() << '\n';
}

}  // namespace mbridge::metrics
