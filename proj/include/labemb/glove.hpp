#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "labemb/corpus.hpp"
#include "labemb/embedding.hpp"

namespace labemb {

struct CooccurrenceEntry {
  std::int32_t row = 0;
  std::int32_t col = 0;
  double weight = 0.0;

  friend bool operator==(const CooccurrenceEntry&, const CooccurrenceEntry&) = default;
};

/// Symmetric windowed co-occurrence weights, off-diagonal only, with
/// entries sorted by (row, col).
struct CooccurrenceTable {
  std::vector<CooccurrenceEntry> entries;
  std::size_t vocab_size = 0;
  std::string vocab_fingerprint;
  int window = 0;
  bool distance_weighting = true;

  /// Zero when absent.
  double get(std::int32_t row, std::int32_t col) const;
  double total_weight() const;

  /// Binary form: magic, header fields, then (i, j, weight) triples.
  void save(std::ostream& out) const;
  static CooccurrenceTable load(std::istream& in);
};

CooccurrenceTable build_cooccurrence(std::span<const Sentence> sentences, const Vocabulary& vocab,
                                     int window, bool distance_weighting,
                                     bool cross_orders = false);

/// (x / x_max)^alpha below the cap, 1 above it. Throws NonPositiveCount.
double glove_weight(double x, double x_max, double alpha);

struct GloveHyperparams {
  int dim = 100;
  double x_max = 100.0;
  double alpha = 0.75;
  int epochs = 25;
  double initial_lr = 0.05;
  std::uint64_t seed = 1;
  bool deterministic = true;
  double max_norm = 1e3;

  void validate() const;
};

/// f(x) (w.wt + b + bt - log x)^2 for one table entry.
double glove_entry_loss(const Eigen::VectorXd& w, const Eigen::VectorXd& w_ctx, double bias,
                        double bias_ctx, double x, double x_max, double alpha);

struct GloveGradient {
  Eigen::VectorXd w;
  Eigen::VectorXd w_ctx;
  double bias = 0.0;
  double bias_ctx = 0.0;
};
GloveGradient glove_entry_gradient(const Eigen::VectorXd& w, const Eigen::VectorXd& w_ctx,
                                   double bias, double bias_ctx, double x, double x_max,
                                   double alpha);

/// Weighted least squares with per-coordinate AdaGrad over shuffled
/// entries. The returned vectors are w + w_ctx.
EmbeddingModel train_glove(const CooccurrenceTable& cooc, const Vocabulary& vocab,
                           const GloveHyperparams& hp, TrainingTrace* trace = nullptr);

/// Raw factors before the w + w_ctx combination.
struct GloveParameters {
  RowMatrix w, w_ctx;
  Eigen::VectorXd bias, bias_ctx;
};
GloveParameters train_glove_parameters(const CooccurrenceTable& cooc, const GloveHyperparams& hp,
                                       TrainingTrace* trace = nullptr);

}  // namespace labemb
