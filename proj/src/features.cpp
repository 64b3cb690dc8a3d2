#include "labemb/features.hpp"

#include <algorithm>
#include <map>
#include <ostream>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "labemb/error.hpp"
#include "labemb/kernels.hpp"
#include "labemb/random.hpp"
#include "labemb/util.hpp"

namespace labemb {

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::BOW: return "BOW";
    case FeatureKind::SVD: return "SVD";
    case FeatureKind::Embedding: return "Embedding";
  }
  return "?";
}

std::string_view to_string(Aggregation agg) {
  switch (agg) {
    case Aggregation::Mean: return "Mean";
    case Aggregation::Median: return "Median";
    case Aggregation::Min: return "Min";
    case Aggregation::Max: return "Max";
  }
  return "?";
}

std::optional<Aggregation> parse_aggregation(std::string_view text) {
  for (auto a : {Aggregation::Mean, Aggregation::Median, Aggregation::Min, Aggregation::Max}) {
    if (to_string(a) == text) return a;
  }
  return std::nullopt;
}

std::vector<std::pair<std::int32_t, double>> bow_features(const CohortRecord& record,
                                                          const Vocabulary& vocab,
                                                          const BowOptions& options,
                                                          std::size_t* oov) {
  std::map<std::int32_t, double> counts;
  for (const auto& e : record.observation_events) {
    auto id = vocab.find(make_token(e.loinc, e.abnormality, vocab.mode()));
    if (!id) {
      if (oov) ++*oov;
      continue;
    }
    counts[*id] = options.binary ? 1.0 : counts[*id] + 1.0;
  }
  return {counts.begin(), counts.end()};
}

SparseMatrix bow_matrix(std::span<const CohortRecord> records, const Vocabulary& vocab,
                        const BowOptions& options, std::size_t* oov) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t r = 0; r < records.size(); ++r) {
    for (auto [j, c] : bow_features(records[r], vocab, options, oov)) {
      triplets.emplace_back(static_cast<int>(r), j, c);
    }
  }
  SparseMatrix m(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(vocab.size()));
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

namespace {

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& y) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

}  // namespace

TruncatedSvd truncated_svd(const SparseMatrix& matrix, int k, std::uint64_t seed, int oversample,
                           int power_iterations) {
  const Eigen::Index rows = matrix.rows(), cols = matrix.cols();
  if (k < 1 || k > std::min(rows, cols)) throw InvalidArgument("k must be in [1, min(rows, cols)]");
  const Eigen::Index width = std::min<Eigen::Index>(k + oversample, std::min(rows, cols));
  Rng rng(derive_seed(seed, "truncated-svd"));
  Eigen::MatrixXd omega(cols, width);
  for (Eigen::Index i = 0; i < omega.size(); ++i) omega.data()[i] = rng.normal();

  Eigen::MatrixXd q = orthonormal_basis(matrix * omega);
  for (int it = 0; it < power_iterations; ++it) {
    Eigen::MatrixXd z = orthonormal_basis(matrix.transpose() * q);
    q = orthonormal_basis(matrix * z);
  }
  Eigen::MatrixXd b = (matrix.transpose() * q).transpose();  // width x cols
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);

  TruncatedSvd out;
  out.singular_values = svd.singularValues().head(k);
  Eigen::MatrixXd u = q * svd.matrixU().leftCols(k);
  out.row_factors = u * out.singular_values.asDiagonal();
  out.right_vectors = svd.matrixV().leftCols(k);
  const double top = out.singular_values(0);
  out.rank_deficient = top == 0.0 || out.singular_values(k - 1) / top < 1e-12;
  return out;
}

Eigen::MatrixXd TruncatedSvd::project(const SparseMatrix& m) const {
  if (m.cols() != right_vectors.rows()) throw DimensionMismatch("projection matrix has the wrong width");
  return m * right_vectors;
}

namespace {

std::vector<std::int32_t> window_ids(const CohortRecord& record, const EmbeddingModel& model,
                                     TokenMode mode, bool distinct) {
  std::vector<std::int32_t> ids;
  for (const auto& e : record.observation_events) {
    if (auto id = model.find(make_token(e.loinc, e.abnormality, mode))) ids.push_back(*id);
  }
  if (distinct) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  }
  return ids;
}

}  // namespace

Eigen::VectorXd embed_features(const CohortRecord& record, const EmbeddingModel& model,
                               TokenMode mode, Aggregation agg, const EmbedOptions& options) {
  const auto dim = static_cast<Eigen::Index>(model.dim());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim + 1);
  const auto ids = window_ids(record, model, mode, options.distinct_tokens);
  if (ids.empty()) {
    out(dim) = 1.0;
    return out;
  }
  const auto& v = model.vectors();
  std::vector<double> column(ids.size());
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (std::size_t t = 0; t < ids.size(); ++t) column[t] = v(ids[t], j);
    switch (agg) {
      case Aggregation::Mean: {
        double s = 0.0;
        for (double x : column) s += x;
        out(j) = s / static_cast<double>(column.size());
        break;
      }
      case Aggregation::Min: out(j) = *std::min_element(column.begin(), column.end()); break;
      case Aggregation::Max: out(j) = *std::max_element(column.begin(), column.end()); break;
      case Aggregation::Median: {
        std::sort(column.begin(), column.end());
        const std::size_t m = column.size() / 2;
        out(j) = column.size() % 2 ? column[m] : 0.5 * (column[m - 1] + column[m]);
        break;
      }
    }
  }
  return out;
}

FeatureMatrix embedding_feature_matrix(std::span<const CohortRecord> records,
                                       const EmbeddingModel& model, TokenMode mode,
                                       Aggregation agg, const EmbedOptions& options,
                                       bool parallel) {
  const auto dim = static_cast<Eigen::Index>(model.dim());
  FeatureMatrix fm;
  fm.kind = FeatureKind::Embedding;
  fm.aggregation = agg;
  fm.values.resize(static_cast<Eigen::Index>(records.size()), dim + 1);
  if (agg == Aggregation::Mean) {
    std::vector<std::vector<std::int32_t>> ids(records.size());
    for (std::size_t r = 0; r < records.size(); ++r) ids[r] = window_ids(records[r], model, mode, options.distinct_tokens);
    RowMatrix means = parallel ? kernels::mean_rows_omp(ids, model.vectors())
                               : kernels::mean_rows_serial(ids, model.vectors());
    fm.values.leftCols(dim) = means;
    for (std::size_t r = 0; r < records.size(); ++r) {
      fm.values(static_cast<Eigen::Index>(r), dim) = ids[r].empty() ? 1.0 : 0.0;
    }
  } else {
    for (std::size_t r = 0; r < records.size(); ++r) {
      fm.values.row(static_cast<Eigen::Index>(r)) = embed_features(records[r], model, mode, agg, options).transpose();
    }
  }
  for (Eigen::Index j = 0; j < dim; ++j) fm.column_names.push_back("e" + std::to_string(j));
  fm.column_names.push_back("missing_window");
  auto meta = model.metadata();
  fm.provenance = "model_algorithm=" + meta["algorithm"] + ";model_dim=" + std::to_string(dim) +
                  ";vocab_fingerprint=" + meta["vocab_fingerprint"] + ";aggregation=" +
                  std::string(to_string(agg));
  return fm;
}

FeatureMatrix bow_feature_matrix(std::span<const CohortRecord> records, const Vocabulary& vocab,
                                 const BowOptions& options) {
  FeatureMatrix fm;
  fm.kind = FeatureKind::BOW;
  fm.values = Eigen::MatrixXd(bow_matrix(records, vocab, options));
  for (const auto& e : vocab.entries()) fm.column_names.push_back(e.token);
  fm.provenance = "vocab_fingerprint=" + vocab.fingerprint() + (options.binary ? ";binary=1" : ";binary=0");
  return fm;
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& features) {
  for (std::size_t j = 0; j < features.column_names.size(); ++j) {
    if (j) out << ',';
    out << features.column_names[j];
  }
  out << '\n';
  for (Eigen::Index i = 0; i < features.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < features.values.cols(); ++j) {
      if (j) out << ',';
      out << format_g6(features.values(i, j));
    }
    out << '\n';
  }
}

}  // namespace labemb
