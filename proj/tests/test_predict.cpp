#include <doctest.h>

#include <cmath>

#include "labemb/error.hpp"
#include "labemb/predict.hpp"
#include "labemb/random.hpp"
#include "oracles.hpp"

using namespace labemb;

namespace {

struct Dataset {
  Eigen::MatrixXd x;
  std::vector<int> y;
};

Dataset noisy_linear(std::size_t n, int d, std::uint64_t seed, double pos_rate = 0.3) {
  Rng rng(seed);
  Dataset ds{Eigen::MatrixXd(static_cast<Eigen::Index>(n), d), {}};
  Eigen::VectorXd beta(d);
  for (int j = 0; j < d; ++j) beta(j) = rng.normal();
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) ds.x(static_cast<Eigen::Index>(i), j) = 3.0 * rng.normal() + j;
    const double z = ds.x.row(static_cast<Eigen::Index>(i)).dot(beta) * 0.3 + std::log(pos_rate / (1 - pos_rate));
    ds.y.push_back(rng.bernoulli(1.0 / (1.0 + std::exp(-z))) ? 1 : 0);
  }
  return ds;
}

}  // namespace

TEST_CASE("roc_auc examples") {
  CHECK(roc_auc(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}) == 1.0);
  CHECK(roc_auc(std::vector<double>{0.1, 0.9}, std::vector<int>{1, 0}) == 0.0);
  CHECK(roc_auc(std::vector<double>{0.5, 0.5}, std::vector<int>{1, 0}) == 0.5);
  CHECK_THROWS_AS(roc_auc(std::vector<double>{0.5, 0.2}, std::vector<int>{1, 1}), SingleClassInput);
}

TEST_CASE("roc_auc equals pair counting") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(499);
    std::vector<double> s(n);
    std::vector<int> y(n);
    const bool coarse = trial % 2 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = coarse ? static_cast<double>(rng.below(7)) : rng.normal();
      y[i] = rng.bernoulli(0.3) ? 1 : 0;
    }
    y[0] = 1;
    y[1] = 0;
    CHECK(roc_auc(s, y) == oracle::pair_count_auc(s, y));
  }
}

TEST_CASE("average_precision examples") {
  CHECK(average_precision(std::vector<double>{0.9, 0.8, 0.1, 0.05}, std::vector<int>{1, 1, 0, 0}) == 1.0);
  CHECK(average_precision(std::vector<double>{0.9, 0.8, 0.1}, std::vector<int>{1, 0, 1}) ==
        doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-15));
  CHECK(average_precision(std::vector<double>{0.9, 0.8, 0.7, 0.1}, std::vector<int>{0, 0, 0, 1}) == 0.25);
  CHECK_THROWS_AS(average_precision(std::vector<double>{0.9, 0.8}, std::vector<int>{0, 0}), NoPositives);
  // ties keep input order
  CHECK(average_precision(std::vector<double>{0.5, 0.5}, std::vector<int>{0, 1}) == 0.5);
  CHECK(average_precision(std::vector<double>{0.5, 0.5}, std::vector<int>{1, 0}) == 1.0);
}

TEST_CASE("curves start and end at the corners") {
  const std::vector<double> s = {0.9, 0.4, 0.4, 0.2, 0.1};
  const std::vector<int> y = {1, 0, 1, 0, 1};
  const auto roc = roc_curve(s, y);
  CHECK(roc.front().x == 0.0);
  CHECK(roc.front().y == 0.0);
  CHECK(roc.back().x == 1.0);
  CHECK(roc.back().y == 1.0);
  CHECK(roc.size() == 5);  // origin plus four distinct scores
  const auto pr = pr_curve(s, y);
  CHECK(pr.size() == 5);
  CHECK(pr.back().x == 1.0);
  CHECK(pr.front().y == 1.0);
}

TEST_CASE("logistic objective gradient matches central differences") {
  const auto ds = noisy_linear(80, 4, 3);
  const auto sw = sample_weights(ds.y, ClassWeight::Balanced);
  Rng rng(4);
  double worst = 0;
  for (int t = 0; t < 60; ++t) {
    Eigen::VectorXd w(5);
    for (int j = 0; j < 5; ++j) w(j) = rng.normal();
    const double lambda = std::exp(rng.uniform(std::log(1e-3), std::log(10.0)));
    auto f = [&](const Eigen::VectorXd& p) { return logreg_objective(ds.x / 3.0, ds.y, sw, p, lambda); };
    Eigen::VectorXd g;
    logreg_objective(ds.x / 3.0, ds.y, sw, w, lambda, &g);
    for (int j = 0; j < 5; ++j) worst = std::max(worst, oracle::relative_error(g(j), oracle::central_difference(f, w, j)));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("separable data at tiny lambda") {
  Eigen::MatrixXd x(20, 1);
  std::vector<int> y;
  for (int i = 0; i < 20; ++i) {
    x(i, 0) = i < 10 ? -1.0 - i * 0.1 : 1.0 + i * 0.1;
    y.push_back(i < 10 ? 0 : 1);
  }
  LogRegOptions opt;
  opt.lambda = 1e-6;
  const auto m = train_logreg(x, y, opt);
  CHECK(m.weights.size() == 2);
  CHECK(m.weights(0) > 0);
  const auto p = m.predict_proba(x);
  for (int i = 0; i < 20; ++i) CHECK((p(i) > 0.5) == (y[static_cast<std::size_t>(i)] == 1));
}

TEST_CASE("huge lambda shrinks the weights") {
  const auto ds = noisy_linear(200, 5, 6);
  LogRegOptions opt;
  opt.lambda = 1e6;
  const auto m = train_logreg(ds.x, ds.y, opt);
  CHECK(m.weights.head(5).norm() <= 1e-3);
  CHECK((m.scale.array() > 0).all());
}

TEST_CASE("converged solutions have small gradients and match across starts") {
  const auto ds = noisy_linear(300, 6, 7);
  LogRegOptions opt;
  opt.lambda = 0.01;
  opt.tol = 1e-8;
  const auto m = train_logreg(ds.x, ds.y, opt);
  const Eigen::MatrixXd xs = (ds.x.rowwise() - m.mean.transpose()).array().rowwise() / m.scale.transpose().array();
  Eigen::VectorXd g;
  logreg_objective(xs, ds.y, sample_weights(ds.y, ClassWeight::None), m.weights, opt.lambda, &g);
  CHECK(g.norm() <= 1e-8);
}

TEST_CASE("logistic regression errors") {
  Eigen::MatrixXd x(3, 1);
  x << 1, 2, 3;
  CHECK_THROWS_AS(train_logreg(x, std::vector<int>{1, 1, 1}, {}), SingleClassInput);
  LogRegOptions opt;
  opt.lambda = 0;
  CHECK_THROWS_AS(train_logreg(x, std::vector<int>{1, 0, 1}, opt), InvalidArgument);
  const auto ds = noisy_linear(100, 3, 8);
  opt = {};
  opt.max_iter = 1;
  opt.tol = 1e-12;
  CHECK_THROWS_AS(train_logreg(ds.x, ds.y, opt), NonConvergence);
}

TEST_CASE("stratified folds spread each class evenly") {
  const auto ds = noisy_linear(203, 2, 9);
  const auto folds = stratified_folds(ds.y, 5, 1);
  for (int cls : {0, 1}) {
    std::vector<int> count(5, 0);
    for (std::size_t i = 0; i < folds.size(); ++i) {
      if (ds.y[i] == cls) ++count[static_cast<std::size_t>(folds[i])];
    }
    CHECK(*std::max_element(count.begin(), count.end()) - *std::min_element(count.begin(), count.end()) <= 1);
  }
  CHECK(folds == stratified_folds(ds.y, 5, 1));
}

TEST_CASE("random search trace and determinism") {
  const auto ds = noisy_linear(250, 4, 10);
  const auto a = random_search_cv(ds.x, ds.y, SearchSpace{}, 6, 3, 11);
  CHECK(a.trace.size() == 6);
  for (const auto& t : a.trace) {
    CHECK(std::isfinite(t.mean_cv_auc));
    CHECK(t.lambda >= 1e-5);
    CHECK(t.lambda <= 1e3);
  }
  const auto b = random_search_cv(ds.x, ds.y, SearchSpace{}, 6, 3, 11, {}, false);
  CHECK(a.model.weights == b.model.weights);
  CHECK(a.best.lambda == b.best.lambda);
}

TEST_CASE("a single draw equals direct training") {
  const auto ds = noisy_linear(150, 3, 12);
  const auto r = random_search_cv(ds.x, ds.y, SearchSpace{}, 1, 3, 5);
  LogRegOptions opt;
  opt.lambda = r.best.lambda;
  opt.class_weight = r.best.class_weight;
  CHECK(train_logreg(ds.x, ds.y, opt).weights == r.model.weights);
}

TEST_CASE("folds lacking a class are rejected") {
  const auto ds = noisy_linear(40, 2, 13, 0.05);
  std::vector<int> y(40, 0);
  y[0] = y[1] = 1;
  CHECK_THROWS_AS(random_search_cv(ds.x, y, SearchSpace{}, 2, 5, 1), FoldTooSmall);
}

TEST_CASE("evaluate fills the report") {
  const auto ds = noisy_linear(300, 3, 14);
  LogRegOptions opt;
  const auto m = train_logreg(ds.x, ds.y, opt);
  const auto rep = evaluate(m, ds.x, ds.y);
  CHECK(rep.n_pos + rep.n_neg == 300);
  CHECK(rep.roc_auc > 0.5);
  CHECK(rep.roc_auc <= 1.0);
  CHECK(rep.average_precision > 0.0);
  CHECK(rep.average_precision <= 1.0);
}
