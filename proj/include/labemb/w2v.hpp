#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "labemb/corpus.hpp"
#include "labemb/embedding.hpp"
#include "labemb/random.hpp"

namespace labemb {

enum class W2vAlgorithm { SkipGram, CBOW };

std::string_view to_string(W2vAlgorithm algo);

struct W2vHyperparams {
  int dim = 100;
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  double initial_lr = 0.025;
  double min_lr = 0.0001;
  double noise_exponent = 0.75;
  std::optional<double> subsample_threshold;
  W2vAlgorithm algorithm = W2vAlgorithm::SkipGram;
  std::uint64_t seed = 1;
  /// Shrink each window uniformly in [1, window].
  bool dynamic_window = false;
  /// Let windows span the orders of one visit.
  bool cross_orders = false;
  /// Single-threaded with a fixed pair order; otherwise lock-free OpenMP updates.
  bool deterministic = true;
  /// Any trained vector with a larger norm is reported as divergence.
  double max_norm = 1e3;
  bool keep_output_vectors = false;

  void validate() const;
};

/// Negative-sampling distribution proportional to count^exponent.
class NoiseSampler {
 public:
  NoiseSampler(const Vocabulary& vocab, double exponent);
  std::int32_t sample(Rng& rng) const;
  double probability(std::size_t i) const;
  std::size_t size() const { return cumulative_.size(); }

 private:
  std::vector<double> cumulative_;
};

/// -log s(u.v) - sum log s(-u_neg.v) for center v, context u.
double sgns_pair_loss(const Eigen::VectorXd& center, const Eigen::VectorXd& context,
                      const std::vector<Eigen::VectorXd>& negatives);

struct SgnsGradient {
  Eigen::VectorXd center;
  Eigen::VectorXd context;
  std::vector<Eigen::VectorXd> negatives;
};
SgnsGradient sgns_pair_gradient(const Eigen::VectorXd& center, const Eigen::VectorXd& context,
                                const std::vector<Eigen::VectorXd>& negatives);

/// CBOW example loss: the hidden vector is the mean of the context input
/// vectors, scored against the target's output vector and the negatives.
double cbow_example_loss(const std::vector<Eigen::VectorXd>& context_inputs,
                         const Eigen::VectorXd& target_output,
                         const std::vector<Eigen::VectorXd>& negative_outputs);

struct CbowGradient {
  std::vector<Eigen::VectorXd> context_inputs;
  Eigen::VectorXd target_output;
  std::vector<Eigen::VectorXd> negative_outputs;
};
CbowGradient cbow_example_gradient(const std::vector<Eigen::VectorXd>& context_inputs,
                                   const Eigen::VectorXd& target_output,
                                   const std::vector<Eigen::VectorXd>& negative_outputs);

EmbeddingModel train_sgns(std::span<const Sentence> sentences, const Vocabulary& vocab,
                          const W2vHyperparams& hp, TrainingTrace* trace = nullptr);
EmbeddingModel train_cbow(std::span<const Sentence> sentences, const Vocabulary& vocab,
                          const W2vHyperparams& hp, TrainingTrace* trace = nullptr);

namespace detail {

/// One SGD step on a skip-gram pair, in place. `scratch` holds `dim` doubles.
void sgns_update(double* center_in, double* context_out, std::span<double* const> negative_out,
                 std::size_t dim, double lr, double* scratch);

/// One SGD step on a CBOW example, in place. `scratch` holds 2*dim doubles.
void cbow_update(std::span<double* const> context_in, double* target_out,
                 std::span<double* const> negative_out, std::size_t dim, double lr,
                 double* scratch);

/// (center, context) index pairs the skip-gram trainer visits for one unit
/// with a fixed window.
std::vector<std::pair<std::int32_t, std::int32_t>> window_pairs(std::span<const std::int32_t> unit,
                                                                int window);

}  // namespace detail

}  // namespace labemb
