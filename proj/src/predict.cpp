#include "labemb/predict.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <ostream>

#include "labemb/error.hpp"
#include "labemb/random.hpp"
#include "labemb/util.hpp"

namespace labemb {

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void require_both_classes(std::span<const int> y) {
  bool pos = false, neg = false;
  for (int v : y) {
    if (v == 1) pos = true;
    else if (v == 0) neg = true;
    else throw InvalidArgument("labels must be 0 or 1");
  }
  if (!pos || !neg) throw SingleClassInput("both classes are required");
}

Eigen::MatrixXd standardize(const Eigen::MatrixXd& x, const Eigen::VectorXd& mean, const Eigen::VectorXd& scale) {
  return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

}  // namespace

std::string_view to_string(ClassWeight cw) { return cw == ClassWeight::None ? "none" : "balanced"; }

Eigen::VectorXd LogRegModel::decision_function(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean.size()) throw DimensionMismatch("feature count differs from the trained model");
  const Eigen::Index d = mean.size();
  return standardize(x, mean, scale) * weights.head(d) + Eigen::VectorXd::Constant(x.rows(), weights(d));
}

Eigen::VectorXd LogRegModel::predict_proba(const Eigen::MatrixXd& x) const {
  return decision_function(x).unaryExpr([](double z) { return sigmoid(z); });
}

std::vector<double> sample_weights(std::span<const int> y, ClassWeight cw) {
  std::vector<double> w(y.size(), 1.0);
  if (cw == ClassWeight::None) return w;
  const double n = static_cast<double>(y.size());
  const double n_pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
  const double n_neg = n - n_pos;
  for (std::size_t i = 0; i < y.size(); ++i) w[i] = y[i] == 1 ? n / (2.0 * n_pos) : n / (2.0 * n_neg);
  return w;
}

double logreg_objective(const Eigen::MatrixXd& x_std, std::span<const int> y,
                        std::span<const double> weights_per_sample, const Eigen::VectorXd& w,
                        double lambda, Eigen::VectorXd* grad) {
  const Eigen::Index n = x_std.rows(), d = x_std.cols();
  if (w.size() != d + 1) throw DimensionMismatch("weight vector must have features + 1 entries");
  const Eigen::VectorXd z = x_std * w.head(d) + Eigen::VectorXd::Constant(n, w(d));
  double loss = 0.0;
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = weights_per_sample[static_cast<std::size_t>(i)];
    const int yi = y[static_cast<std::size_t>(i)];
    // log(1 + e^-z) for positives, log(1 + e^z) for negatives.
    loss += s * (yi == 1 ? softplus(-z(i)) : softplus(z(i)));
    r(i) = s * (sigmoid(z(i)) - yi);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  loss = loss * inv_n + 0.5 * lambda * w.head(d).squaredNorm();
  if (grad) {
    grad->resize(d + 1);
    grad->head(d) = x_std.transpose() * r * inv_n + lambda * w.head(d);
    (*grad)(d) = r.sum() * inv_n;
  }
  return loss;
}

LogRegModel train_logreg(const Eigen::MatrixXd& x, std::span<const int> y,
                         const LogRegOptions& options) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw DimensionMismatch("row and label counts differ");
  require_both_classes(y);
  if (!(options.lambda > 0)) throw InvalidArgument("lambda must be positive");
  const Eigen::Index n = x.rows(), d = x.cols();

  LogRegModel model;
  model.lambda = options.lambda;
  model.class_weight = options.class_weight;
  model.mean = x.colwise().mean().transpose();
  model.scale.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double var = (x.col(j).array() - model.mean(j)).square().sum() / static_cast<double>(n);
    model.scale(j) = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  const Eigen::MatrixXd xs = standardize(x, model.mean, model.scale);
  const auto sw = sample_weights(y, options.class_weight);

  // L-BFGS with Armijo backtracking.
  constexpr int kHistory = 10;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd g;
  double f = logreg_objective(xs, y, sw, w, options.lambda, &g);
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  int iter = 0;
  for (; iter < options.max_iter; ++iter) {
    if (g.norm() <= options.tol) break;
    Eigen::VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(q);
      q += (alpha[k] - beta) * s_hist[k];
    }
    Eigen::VectorXd dir = -q;
    double slope = g.dot(dir);
    if (slope >= 0) {
      dir = -g;
      slope = -g.squaredNorm();
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }
    double step = 1.0;
    Eigen::VectorXd w_new, g_new;
    double f_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      w_new = w + step * dir;
      f_new = logreg_objective(xs, y, sw, w_new, options.lambda, &g_new);
      if (f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    Eigen::VectorXd s = w_new - w, yk = g_new - g;
    const double sy = s.dot(yk);
    if (sy > 1e-12 * s.norm() * yk.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yk));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > kHistory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    w = std::move(w_new);
    g = std::move(g_new);
    f = f_new;
  }
  if (g.norm() > options.tol) throw NonConvergence(iter);
  model.weights = std::move(w);
  model.iterations = iter;
  return model;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DimensionMismatch("scores and labels differ in length");
  require_both_classes(labels);
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Midranks: the positive rank sum gives U exactly, with ties counting half.
  double rank_sum_pos = 0.0;
  double n_pos = 0.0, n_neg = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double midrank2 = static_cast<double>(i + 1 + j);  // twice the midrank
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]] == 1) rank_sum_pos += midrank2;
    }
    i = j;
  }
  for (int v : labels) (v == 1 ? n_pos : n_neg) += 1.0;
  // 2U = 2R - n_pos (n_pos + 1); both sides are exact integers in double.
  const double two_u = rank_sum_pos - n_pos * (n_pos + 1.0);
  return two_u / (2.0 * n_pos * n_neg);
}

double average_precision(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DimensionMismatch("scores and labels differ in length");
  const auto n_pos = std::count(labels.begin(), labels.end(), 1);
  if (n_pos == 0) throw NoPositives("average precision needs a positive label");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (labels[idx[r]] == 1) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return sum / static_cast<double>(n_pos);
}

std::vector<CurvePoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
  require_both_classes(labels);
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const double n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double n_neg = static_cast<double>(labels.size()) - n_pos;
  std::vector<CurvePoint> pts{{0.0, 0.0}};
  double tp = 0, fp = 0;
  for (std::size_t r = 0; r < idx.size(); ++r) {
    (labels[idx[r]] == 1 ? tp : fp) += 1;
    if (r + 1 == idx.size() || scores[idx[r + 1]] != scores[idx[r]]) pts.push_back({fp / n_neg, tp / n_pos});
  }
  return pts;
}

std::vector<CurvePoint> pr_curve(std::span<const double> scores, std::span<const int> labels) {
  const auto n_pos = std::count(labels.begin(), labels.end(), 1);
  if (n_pos == 0) throw NoPositives("precision-recall curve needs a positive label");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<CurvePoint> pts;
  double tp = 0;
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (labels[idx[r]] == 1) tp += 1;
    pts.push_back({tp / static_cast<double>(n_pos), tp / static_cast<double>(r + 1)});
  }
  return pts;
}

std::vector<int> stratified_folds(std::span<const int> y, int k_folds, std::uint64_t seed) {
  if (k_folds < 2) throw InvalidArgument("k_folds must be >= 2");
  Rng rng(derive_seed(seed, "folds"));
  std::vector<int> fold(y.size(), 0);
  for (int cls : {0, 1}) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] == cls) rows.push_back(i);
    }
    rng.shuffle(std::span<std::size_t>(rows));
    for (std::size_t r = 0; r < rows.size(); ++r) fold[rows[r]] = static_cast<int>(r % static_cast<std::size_t>(k_folds));
  }
  return fold;
}

SearchResult random_search_cv(const Eigen::MatrixXd& x, std::span<const int> y,
                              const SearchSpace& space, int n_draws, int k_folds,
                              std::uint64_t seed, const LogRegOptions& base, bool parallel) {
  if (n_draws < 1) throw InvalidArgument("n_draws must be >= 1");
  if (!(space.lambda_min > 0 && space.lambda_max >= space.lambda_min) || space.class_weights.empty()) {
    throw InvalidArgument("bad search space");
  }
  require_both_classes(y);
  const auto fold = stratified_folds(y, k_folds, seed);
  for (int f = 0; f < k_folds; ++f) {
    int pos = 0, neg = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (fold[i] == f) (y[i] == 1 ? pos : neg)++;
    }
    if (pos == 0 || neg == 0) throw FoldTooSmall("fold " + std::to_string(f) + " lacks a class");
  }

  std::vector<SearchTrial> trials(static_cast<std::size_t>(n_draws));
  Rng rng(derive_seed(seed, "search"));
  const double log_lo = std::log(space.lambda_min), log_hi = std::log(space.lambda_max);
  for (auto& t : trials) {
    t.lambda = std::exp(rng.uniform(log_lo, log_hi));
    t.class_weight = space.class_weights[rng.below(space.class_weights.size())];
  }

  // Split once; each (draw, fold) job is independent.
  std::vector<Eigen::MatrixXd> x_train(static_cast<std::size_t>(k_folds)), x_val(static_cast<std::size_t>(k_folds));
  std::vector<std::vector<int>> y_train(static_cast<std::size_t>(k_folds)), y_val(static_cast<std::size_t>(k_folds));
  for (int f = 0; f < k_folds; ++f) {
    std::vector<Eigen::Index> tr, va;
    for (std::size_t i = 0; i < y.size(); ++i) (fold[i] == f ? va : tr).push_back(static_cast<Eigen::Index>(i));
    const auto fi = static_cast<std::size_t>(f);
    x_train[fi] = x(tr, Eigen::all);
    x_val[fi] = x(va, Eigen::all);
    for (auto i : tr) y_train[fi].push_back(y[static_cast<std::size_t>(i)]);
    for (auto i : va) y_val[fi].push_back(y[static_cast<std::size_t>(i)]);
  }

  const std::ptrdiff_t jobs = static_cast<std::ptrdiff_t>(n_draws) * k_folds;
  std::vector<double> fold_auc(static_cast<std::size_t>(jobs));
  std::vector<std::string> failure(static_cast<std::size_t>(jobs));
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t job = 0; job < jobs; ++job) {
    const auto draw = static_cast<std::size_t>(job / k_folds);
    const auto f = static_cast<std::size_t>(job % k_folds);
    try {
      LogRegOptions opt = base;
      opt.lambda = trials[draw].lambda;
      opt.class_weight = trials[draw].class_weight;
      LogRegModel m = train_logreg(x_train[f], y_train[f], opt);
      const Eigen::VectorXd s = m.decision_function(x_val[f]);
      fold_auc[static_cast<std::size_t>(job)] = roc_auc(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())), y_val[f]);
    } catch (const std::exception& e) {
      failure[static_cast<std::size_t>(job)] = e.what();
    }
  }
  for (const auto& msg : failure) {
    if (!msg.empty()) throw Error("cross-validation fit failed: " + msg);
  }

  for (std::size_t d = 0; d < trials.size(); ++d) {
    double sum = 0.0;
    for (int f = 0; f < k_folds; ++f) sum += fold_auc[d * static_cast<std::size_t>(k_folds) + static_cast<std::size_t>(f)];
    trials[d].mean_cv_auc = sum / k_folds;
  }
  std::size_t best = 0;
  for (std::size_t d = 1; d < trials.size(); ++d) {
    if (trials[d].mean_cv_auc > trials[best].mean_cv_auc) best = d;
  }
  SearchResult result;
  result.best = trials[best];
  result.trace = trials;
  LogRegOptions opt = base;
  opt.lambda = result.best.lambda;
  opt.class_weight = result.best.class_weight;
  result.model = train_logreg(x, y, opt);
  return result;
}

EvalReport evaluate(const LogRegModel& model, const Eigen::MatrixXd& x_test,
                    std::span<const int> y_test, std::vector<SearchTrial> trace) {
  const Eigen::VectorXd s = model.decision_function(x_test);
  std::span<const double> scores(s.data(), static_cast<std::size_t>(s.size()));
  EvalReport r;
  r.n_pos = static_cast<std::size_t>(std::count(y_test.begin(), y_test.end(), 1));
  r.n_neg = y_test.size() - r.n_pos;
  r.roc_auc = roc_auc(scores, y_test);
  r.average_precision = average_precision(scores, y_test);
  r.roc = roc_curve(scores, y_test);
  r.pr = pr_curve(scores, y_test);
  r.trace = std::move(trace);
  return r;
}

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> points, const char* x_name,
                     const char* y_name) {
  out << x_name << ',' << y_name << '\n';
  for (const auto& p : points) out << format_g6(p.x) << ',' << format_g6(p.y) << '\n';
}

}  // namespace labemb
