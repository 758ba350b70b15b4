#pragma once

#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "mbridge/otmatch.hpp"
#include "mbridge/types.hpp"

namespace mbridge::metrics {

// Clustering agreement. Negative labels (outliers) count as singleton
// clusters in both arguments.
double ari(const std::vector<int>& pred, const std::vector<int>& truth);
double nmi(const std::vector<int>& pred, const std::vector<int>& truth);
double homogeneity(const std::vector<int>& pred, const std::vector<int>& truth);
double completeness(const std::vector<int>& pred, const std::vector<int>& truth);
double v_measure(const std::vector<int>& pred, const std::vector<int>& truth);

// Most frequent truth identity among each cluster's members; ties go to the
// smaller identity, clusters without members get -1.
std::vector<int> majority_identity(const PseudoLabeling& labeling, const std::vector<int>& truth);

struct MatchAccuracy {
  double v2r = 0.0;
  double r2v = 0.0;
  double mean() const { return 0.5 * (v2r + r2v); }
};

MatchAccuracy match_accuracy(const otmatch::CrossModalMatch& match,
                             const std::vector<int>& proto_truth_v,
                             const std::vector<int>& proto_truth_r);

struct RetrievalReport {
  std::vector<double> rank;  // rank[k - 1] = Rank-k
  double map = 0.0;
  std::size_t evaluated = 0;
  std::size_t excluded = 0;  // queries whose identity is absent from the gallery

  double rank_k(std::size_t k) const;
};

// Gallery ranked by descending cosine similarity, ties by ascending index.
// With exclude_self, query i skips gallery item i (query and gallery must be
// the same set).
RetrievalReport cmc_map(const Matrix& query, const std::vector<int>& query_ids,
                        const Matrix& gallery, const std::vector<int>& gallery_ids,
                        bool exclude_self = false);

struct EvalReport {
  std::optional<double> ari;
  std::optional<double> nmi;
  std::optional<double> homogeneity;
  std::optional<double> completeness;
  std::optional<double> v_measure;
  std::optional<double> match_accuracy;
  std::optional<RetrievalReport> retrieval;
};

EvalReport clustering_report(const std::vector<int>& pred, const std::vector<int>& truth);

// CSV with columns scope,metric,value; one row per populated field.
void write_csv_header(std::ostream& out);
void write_csv_rows(std::ostream& out, const EvalReport& report, std::string_view scope);
// A single JSON object on one line, tagged with "scope" when non-empty.
void write_json_line(std::ostream& out, const EvalReport& report, std::string_view scope = {});

}  // namespace mbridge::metrics
