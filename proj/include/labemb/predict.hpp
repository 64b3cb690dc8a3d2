#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace labemb {

enum class ClassWeight { None, Balanced };

std::string_view to_string(ClassWeight cw);

struct LogRegOptions {
  double lambda = 1.0;
  double tol = 1e-5;
  int max_iter = 20000;
  ClassWeight class_weight = ClassWeight::None;
};

/// L2-regularized logistic regression on internally standardized features.
/// `weights` holds one coefficient per feature followed by the intercept.
struct LogRegModel {
  Eigen::VectorXd weights;
  double lambda = 0.0;
  ClassWeight class_weight = ClassWeight::None;
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  int iterations = 0;

  Eigen::VectorXd decision_function(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& x) const;
};

/// Per-sample weights: all ones, or n / (2 n_class) for balanced.
std::vector<double> sample_weights(std::span<const int> y, ClassWeight cw);

/// sum_i s_i logloss_i / n + lambda/2 |w|^2 (intercept, the last entry, is
/// not penalized) on an already standardized design. Fills `grad` if given.
double logreg_objective(const Eigen::MatrixXd& x_std, std::span<const int> y,
                        std::span<const double> weights_per_sample, const Eigen::VectorXd& w,
                        double lambda, Eigen::VectorXd* grad = nullptr);

/// L-BFGS to gradient norm <= tol. Throws SingleClassInput, NonConvergence.
LogRegModel train_logreg(const Eigen::MatrixXd& x, std::span<const int> y,
                         const LogRegOptions& options);

/// Mann-Whitney form: P(pos > neg) + 0.5 P(tie). Throws SingleClassInput.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Mean precision at the rank of each positive, scores descending, ties
/// kept in input order. Throws NoPositives.
double average_precision(std::span<const double> scores, std::span<const int> labels);

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
};
/// (false positive rate, true positive rate), one point per distinct score.
std::vector<CurvePoint> roc_curve(std::span<const double> scores, std::span<const int> labels);
/// (recall, precision), one point per rank.
std::vector<CurvePoint> pr_curve(std::span<const double> scores, std::span<const int> labels);

struct SearchSpace {
  double lambda_min = 1e-5;
  double lambda_max = 1e3;
  std::vector<ClassWeight> class_weights = {ClassWeight::None, ClassWeight::Balanced};
};

struct SearchTrial {
  double lambda = 0.0;
  ClassWeight class_weight = ClassWeight::None;
  double mean_cv_auc = 0.0;
};

struct SearchResult {
  SearchTrial best;
  LogRegModel model;
  std::vector<SearchTrial> trace;
};

/// Fold id per row; each class is spread round-robin over a seeded shuffle.
std::vector<int> stratified_folds(std::span<const int> y, int k_folds, std::uint64_t seed);

/// Log-uniform lambda and uniform class weight draws scored by mean
/// validation ROC AUC over stratified folds; the best draw is refit on all
/// rows. Throws FoldTooSmall when a fold lacks a class.
SearchResult random_search_cv(const Eigen::MatrixXd& x, std::span<const int> y,
                              const SearchSpace& space, int n_draws, int k_folds,
                              std::uint64_t seed, const LogRegOptions& base = {},
                              bool parallel = true);

struct EvalReport {
  double roc_auc = 0.0;
  double average_precision = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::vector<SearchTrial> trace;
  std::vector<CurvePoint> roc;
  std::vector<CurvePoint> pr;
};

EvalReport evaluate(const LogRegModel& model, const Eigen::MatrixXd& x_test,
                    std::span<const int> y_test, std::vector<SearchTrial> trace = {});

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> points, const char* x_name,
                     const char* y_name);

}  // namespace labemb
