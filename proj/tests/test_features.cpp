#include <doctest.h>

#include <sstream>

#include "labemb/error.hpp"
#include "labemb/features.hpp"
#include "labemb/random.hpp"
#include "oracles.hpp"

using namespace labemb;

namespace {

CohortRecord record(std::vector<std::string> codes) {
  CohortRecord r;
  r.patient_id = "p";
  r.prediction_date = make_date(2017, 5, 1);
  for (auto& c : codes) {
    r.observation_events.push_back(LabEvent{"p", "v", "o", r.prediction_date - 1, std::move(c), Abnormality::N});
  }
  return r;
}

Vocabulary abc_vocab() { return Vocabulary(TokenMode::LoincOnly, 1, {{"a", 3}, {"b", 2}, {"c", 1}}); }

EmbeddingModel abc_model() {
  RowMatrix m(3, 2);
  m << 1, 2, 3, -4, 0.5, 0.25;
  return EmbeddingModel(abc_vocab(), m);
}

SparseMatrix to_sparse(const Eigen::MatrixXd& d) { return d.sparseView(); }

double recon_error(const Eigen::MatrixXd& a, const TruncatedSvd& s) {
  return (a - s.row_factors * s.right_vectors.transpose()).norm();
}

}  // namespace

TEST_CASE("bag of words counts") {
  const auto vocab = abc_vocab();
  const auto f = bow_features(record({"a", "a", "b"}), vocab);
  REQUIRE(f.size() == 2);
  CHECK(f[0] == std::pair<std::int32_t, double>{*vocab.find("a"), 2.0});
  CHECK(f[1] == std::pair<std::int32_t, double>{*vocab.find("b"), 1.0});
  CHECK(bow_features(record({}), vocab).empty());
  std::size_t oov = 0;
  CHECK(bow_features(record({"x", "y"}), vocab, {}, &oov).empty());
  CHECK(oov == 2);
  const auto bin = bow_features(record({"a", "a", "b"}), vocab, BowOptions{true});
  CHECK(bin[0].second == 1.0);
}

TEST_CASE("bag of words mass equals in-vocabulary window events") {
  const auto vocab = abc_vocab();
  Rng rng(5);
  std::vector<CohortRecord> records;
  std::size_t in_vocab = 0;
  for (int i = 0; i < 50; ++i) {
    std::vector<std::string> codes;
    for (std::size_t k = rng.below(8); k > 0; --k) {
      const char* pool[] = {"a", "b", "c", "z"};
      codes.push_back(pool[rng.below(4)]);
      in_vocab += codes.back() != "z";
    }
    records.push_back(record(codes));
  }
  const auto m = bow_matrix(records, vocab);
  CHECK(m.rows() == 50);
  CHECK(m.cols() == 3);
  CHECK(m.sum() == static_cast<double>(in_vocab));
  const auto fm = bow_feature_matrix(records, vocab);
  CHECK(fm.kind == FeatureKind::BOW);
  CHECK((fm.values.array() >= 0).all());
  CHECK((fm.values.array() == fm.values.array().round()).all());
}

TEST_CASE("truncated SVD of a rank-1 matrix") {
  Rng rng(1);
  Eigen::VectorXd u(12), v(7);
  for (auto& x : u) x = rng.normal();
  for (auto& x : v) x = rng.normal();
  const Eigen::MatrixXd a = u * v.transpose();
  const auto s = truncated_svd(to_sparse(a), 1, 3);
  CHECK(recon_error(a, s) / a.norm() <= 1e-8);
}

TEST_CASE("truncated SVD singular values equal a Jacobi oracle") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    Eigen::MatrixXd a(10, 8);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    const auto s = truncated_svd(to_sparse(a), 8, seed);
    const auto want = oracle::jacobi_singular_values(a);
    REQUIRE(s.singular_values.size() == 8);
    for (int i = 0; i < 8; ++i) CHECK(std::abs(s.singular_values(i) - want[static_cast<std::size_t>(i)]) <= 1e-8);
    for (int i = 1; i < 8; ++i) CHECK(s.singular_values(i) <= s.singular_values(i - 1));
  }
}

TEST_CASE("truncated SVD of the identity") {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(5, 5);
  const auto s = truncated_svd(to_sparse(id), 3, 1);
  for (int i = 0; i < 3; ++i) CHECK(s.singular_values(i) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("reconstruction error does not grow with k") {
  Rng rng(2);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(40, 25);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (rng.bernoulli(0.3)) a.data()[i] = static_cast<double>(1 + rng.below(4));
  }
  double prev = a.norm() + 1;
  for (int k = 1; k <= 25; ++k) {
    const double e = recon_error(a, truncated_svd(to_sparse(a), k, 7));
    CHECK(e <= prev + 1e-9);
    prev = e;
  }
  CHECK(prev <= 1e-8 * a.norm());
}

TEST_CASE("projection of training rows reproduces the row factors") {
  Rng rng(3);
  Eigen::MatrixXd a(30, 12);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.below(3);
  const auto s = truncated_svd(to_sparse(a), 5, 1);
  CHECK((s.project(to_sparse(a)) - s.row_factors).norm() <= 1e-8 * s.row_factors.norm());
  CHECK_THROWS_AS(s.project(to_sparse(Eigen::MatrixXd::Zero(2, 3))), DimensionMismatch);
  CHECK_THROWS_AS(truncated_svd(to_sparse(a), 13, 1), InvalidArgument);
}

TEST_CASE("rank deficiency is flagged") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(6, 4);
  a(0, 0) = 1;
  CHECK(truncated_svd(to_sparse(a), 2, 1).rank_deficient);
  CHECK_FALSE(truncated_svd(to_sparse(Eigen::MatrixXd::Identity(4, 4)), 2, 1).rank_deficient);
}

TEST_CASE("embedding aggregation") {
  const auto model = abc_model();
  const auto& v = model.vectors();
  const auto e1 = v.row(*model.find("a")).transpose().eval(), e2 = v.row(*model.find("b")).transpose().eval();
  const auto mean2 = embed_features(record({"a", "b"}), model, TokenMode::LoincOnly, Aggregation::Mean);
  CHECK((mean2.head(2) - (e1 + e2) / 2).norm() < 1e-15);
  CHECK(mean2(2) == 0.0);
  const auto mean3 = embed_features(record({"a", "a", "b"}), model, TokenMode::LoincOnly, Aggregation::Mean);
  // brute-force list expansion
  Eigen::VectorXd expanded = Eigen::VectorXd::Zero(2);
  for (const auto& e : {e1, e1, e2}) expanded += e;
  CHECK((mean3.head(2) - expanded / 3).norm() < 1e-15);
  for (auto agg : {Aggregation::Mean, Aggregation::Median, Aggregation::Min, Aggregation::Max}) {
    const auto single = embed_features(record({"b"}), model, TokenMode::LoincOnly, agg);
    CHECK(single.head(2) == e2);
  }
  const auto empty = embed_features(record({"zz"}), model, TokenMode::LoincOnly, Aggregation::Mean);
  CHECK(empty.head(2).isZero());
  CHECK(empty(2) == 1.0);
  const auto distinct =
      embed_features(record({"a", "a", "b"}), model, TokenMode::LoincOnly, Aggregation::Mean, EmbedOptions{true});
  CHECK((distinct.head(2) - (e1 + e2) / 2).norm() < 1e-15);
  const auto median = embed_features(record({"a", "b", "c"}), model, TokenMode::LoincOnly, Aggregation::Median);
  CHECK(median(0) == 1.0);
  CHECK(median(1) == 0.25);
}

TEST_CASE("min <= mean <= max and matrix kernels agree") {
  const auto model = abc_model();
  Rng rng(8);
  std::vector<CohortRecord> records;
  for (int i = 0; i < 40; ++i) {
    std::vector<std::string> codes;
    for (std::size_t k = rng.below(6); k > 0; --k) codes.push_back(std::string(1, "abcq"[rng.below(4)]));
    records.push_back(record(codes));
  }
  const auto mn = embedding_feature_matrix(records, model, TokenMode::LoincOnly, Aggregation::Min);
  const auto me = embedding_feature_matrix(records, model, TokenMode::LoincOnly, Aggregation::Mean);
  const auto mx = embedding_feature_matrix(records, model, TokenMode::LoincOnly, Aggregation::Max);
  CHECK((mn.values.array() <= me.values.array() + 1e-15).all());
  CHECK((me.values.array() <= mx.values.array() + 1e-15).all());
  const auto par = embedding_feature_matrix(records, model, TokenMode::LoincOnly, Aggregation::Mean, {}, true);
  CHECK(par.values == me.values);
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto one = embed_features(records[r], model, TokenMode::LoincOnly, Aggregation::Mean);
    CHECK((me.values.row(static_cast<Eigen::Index>(r)).transpose() - one).norm() < 1e-14);
  }
  CHECK(me.values.cols() == 3);
  CHECK(me.column_names.back() == "missing_window");
  std::ostringstream csv;
  write_feature_csv(csv, me);
  CHECK(csv.str().rfind("e0,e1,missing_window\n", 0) == 0);
}

TEST_CASE("abnormality-mode tokens") {
  const Vocabulary vocab(TokenMode::LoincPlusAbnormality, 1, {{"a_N", 1}, {"a_H", 1}});
  CohortRecord r = record({"a", "a"});
  r.observation_events[1].abnormality = Abnormality::H;
  const auto f = bow_features(r, vocab);
  CHECK(f.size() == 2);
}
