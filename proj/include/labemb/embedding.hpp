#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace labemb {

class Vocabulary;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Token-indexed dense vectors plus free-form metadata (algorithm,
/// hyperparameters, seed, corpus fingerprint).
class EmbeddingModel {
 public:
  EmbeddingModel() = default;
  EmbeddingModel(std::vector<std::string> tokens, RowMatrix vectors,
                 std::map<std::string, std::string> metadata = {});
  /// Tokens and counts taken from the vocabulary, rows in vocabulary order.
  EmbeddingModel(const Vocabulary& vocab, RowMatrix vectors,
                 std::map<std::string, std::string> metadata = {});

  std::size_t size() const { return tokens_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors_.cols()); }

  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(std::size_t i) const { return tokens_[i]; }
  std::optional<std::int32_t> find(std::string_view token) const;

  const RowMatrix& vectors() const { return vectors_; }
  RowMatrix& mutable_vectors() { return vectors_; }
  std::span<const double> row(std::size_t i) const {
    return {vectors_.data() + i * dim(), dim()};
  }

  /// Trainer-side context vectors; empty unless the trainer kept them.
  const RowMatrix& output_vectors() const { return output_vectors_; }
  void set_output_vectors(RowMatrix m) { output_vectors_ = std::move(m); }

  const std::map<std::string, std::string>& metadata() const { return metadata_; }
  std::map<std::string, std::string>& metadata() { return metadata_; }

 private:
  void rebuild_index();

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
  RowMatrix vectors_;
  RowMatrix output_vectors_;
  std::map<std::string, std::string> metadata_;
};

/// Progress record filled by the trainers when requested.
struct TrainingTrace {
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;  // loss on the frozen sample after each epoch
};

}  // namespace labemb
