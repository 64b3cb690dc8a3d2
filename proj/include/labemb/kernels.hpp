#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an
// OpenMP variant; tests hold the two against each other and the benchmark
// target times them.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "labemb/embedding.hpp"

namespace labemb {

struct CooccurrenceEntry;

namespace kernels {

// -- co-occurrence counting ------------------------------------------------

/// Symmetric (i != j) window counts, sorted by (row, col).
std::vector<CooccurrenceEntry> cooccurrence_serial(const std::vector<std::vector<std::int32_t>>& units,
                                                   int window, bool distance_weighting);
/// Same table; summation order differs, so weights agree to rounding only.
std::vector<CooccurrenceEntry> cooccurrence_omp(const std::vector<std::vector<std::int32_t>>& units,
                                                int window, bool distance_weighting);

// -- GloVe AdaGrad epoch ---------------------------------------------------

struct GloveBuffers {
  double* w;
  double* w_ctx;
  double* bias;
  double* bias_ctx;
  double* grad_sq_w;
  double* grad_sq_ctx;
  double* grad_sq_bias;
  double* grad_sq_bias_ctx;
  std::size_t dim;
};

struct GloveStep {
  double x_max;
  double alpha;
  double lr;
};

/// Visits entries in `order`; returns the summed weighted squared error seen.
double glove_epoch_serial(std::span<const CooccurrenceEntry> entries,
                          std::span<const std::size_t> order, const GloveBuffers& buf,
                          const GloveStep& step);
/// Lock-free variant: concurrent updates to shared rows are not synchronized.
double glove_epoch_omp(std::span<const CooccurrenceEntry> entries,
                       std::span<const std::size_t> order, const GloveBuffers& buf,
                       const GloveStep& step);

// -- t-SNE -----------------------------------------------------------------

Eigen::MatrixXd squared_distances_serial(const RowMatrix& x);
Eigen::MatrixXd squared_distances_omp(const RowMatrix& x);

/// Row-conditional Gaussian affinities, each row calibrated by bisection on
/// the precision so that its entropy (nats) is log(perplexity). `betas`
/// receives the per-row precisions.
RowMatrix conditional_affinities_serial(const Eigen::MatrixXd& sq_dist, double perplexity,
                                        std::vector<double>* betas = nullptr);
RowMatrix conditional_affinities_omp(const Eigen::MatrixXd& sq_dist, double perplexity,
                                     std::vector<double>* betas = nullptr);

/// Exact KL gradient for symmetric P and 2-D map Y. Fills `grad` (n x 2)
/// and returns KL(exaggeration * P || Q) only when `kl` is non-null.
void tsne_gradient_serial(const RowMatrix& p, const RowMatrix& y, double exaggeration,
                          RowMatrix& grad, double* kl = nullptr);
void tsne_gradient_omp(const RowMatrix& p, const RowMatrix& y, double exaggeration,
                       RowMatrix& grad, double* kl = nullptr);

// -- feature aggregation ---------------------------------------------------

/// Row r is the mean of `vectors` rows listed in `ids[r]` (zero if empty).
RowMatrix mean_rows_serial(const std::vector<std::vector<std::int32_t>>& ids, const RowMatrix& vectors);
RowMatrix mean_rows_omp(const std::vector<std::vector<std::int32_t>>& ids, const RowMatrix& vectors);

}  // namespace kernels
}  // namespace labemb
