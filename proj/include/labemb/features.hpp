#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "labemb/corpus.hpp"
#include "labemb/embedding.hpp"
#include "labemb/synthgen.hpp"

namespace labemb {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class FeatureKind { BOW, SVD, Embedding };
enum class Aggregation { Mean, Median, Min, Max };

std::string_view to_string(FeatureKind kind);
std::string_view to_string(Aggregation agg);
std::optional<Aggregation> parse_aggregation(std::string_view text);

/// Rows follow the cohort record order.
struct FeatureMatrix {
  Eigen::MatrixXd values;
  FeatureKind kind = FeatureKind::BOW;
  std::optional<Aggregation> aggregation;
  std::vector<std::string> column_names;
  std::string provenance;
};

struct BowOptions {
  bool binary = false;
};

/// Counts of in-vocabulary window tokens, as (index, count) pairs sorted by
/// index. `oov` is incremented by the number of dropped events.
std::vector<std::pair<std::int32_t, double>> bow_features(const CohortRecord& record,
                                                          const Vocabulary& vocab,
                                                          const BowOptions& options = {},
                                                          std::size_t* oov = nullptr);

SparseMatrix bow_matrix(std::span<const CohortRecord> records, const Vocabulary& vocab,
                        const BowOptions& options = {}, std::size_t* oov = nullptr);

/// Randomized truncated SVD (range finder with oversampling and power
/// iterations, then an exact SVD of the small projected matrix).
struct TruncatedSvd {
  Eigen::MatrixXd row_factors;      // U_k * diag(sigma)
  Eigen::VectorXd singular_values;  // non-increasing
  Eigen::MatrixXd right_vectors;    // V_k, n_cols x k
  bool rank_deficient = false;      // sigma_k / sigma_1 < 1e-12

  /// Rows of `m` expressed in the fitted basis (m * V_k).
  Eigen::MatrixXd project(const SparseMatrix& m) const;
};

TruncatedSvd truncated_svd(const SparseMatrix& matrix, int k, std::uint64_t seed,
                           int oversample = 10, int power_iterations = 2);

struct EmbedOptions {
  bool distinct_tokens = false;
};

/// Elementwise aggregate of window-token embeddings (with multiplicity),
/// followed by one missingness column (1 when no token is in the model).
Eigen::VectorXd embed_features(const CohortRecord& record, const EmbeddingModel& model,
                               TokenMode mode, Aggregation agg, const EmbedOptions& options = {});

FeatureMatrix embedding_feature_matrix(std::span<const CohortRecord> records,
                                       const EmbeddingModel& model, TokenMode mode,
                                       Aggregation agg, const EmbedOptions& options = {},
                                       bool parallel = false);

FeatureMatrix bow_feature_matrix(std::span<const CohortRecord> records, const Vocabulary& vocab,
                                 const BowOptions& options = {});

/// CSV with a header row of column names.
void write_feature_csv(std::ostream& out, const FeatureMatrix& features);

}  // namespace labemb
