#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "labemb/embedding.hpp"

namespace labemb {

class Vocabulary;

struct TsneConfig {
  double perplexity = 30.0;
  int iterations = 1000;
  double early_exaggeration = 12.0;
  int exaggeration_iterations = 250;
  double learning_rate = 200.0;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch = 250;
  std::uint64_t seed = 1;
  bool parallel = true;

  void validate(std::size_t n_points) const;
};

struct TsneResult {
  RowMatrix coords;  // n x 2
  double initial_kl = 0.0;
  double final_kl = 0.0;
};

/// Row-conditional affinities p_{j|i} calibrated to the configured perplexity.
RowMatrix tsne_conditional_affinities(const RowMatrix& x, double perplexity, bool parallel = true);

/// (P + P^T) / 2n from conditional affinities.
RowMatrix symmetrize_affinities(const RowMatrix& conditional);

/// Exact t-SNE. Throws PerplexityTooLarge, DegenerateInput, InvalidArgument.
TsneResult tsne(const RowMatrix& x, const TsneConfig& cfg);

struct FrequentSubset {
  RowMatrix vectors;
  std::vector<std::string> tokens;
};

/// Rows of the k highest-count vocabulary tokens present in the model.
FrequentSubset top_k_frequent(const EmbeddingModel& model, const Vocabulary& vocab, std::size_t k);

}  // namespace labemb
