#include "labemb/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "labemb/corpus.hpp"
#include "labemb/error.hpp"
#include "labemb/kernels.hpp"
#include "labemb/random.hpp"

namespace labemb {

void TsneConfig::validate(std::size_t n_points) const {
  if (n_points < 10) throw InvalidArgument("t-SNE needs at least 10 points");
  if (!(perplexity > 0)) throw InvalidArgument("perplexity must be positive");
  if (3.0 * perplexity >= static_cast<double>(n_points)) {
    throw PerplexityTooLarge("3 * perplexity must be below the number of points");
  }
  if (iterations < 250) throw InvalidArgument("iterations must be >= 250");
  if (!(learning_rate > 0) || !(early_exaggeration >= 1.0)) throw InvalidArgument("bad t-SNE schedule");
}

RowMatrix tsne_conditional_affinities(const RowMatrix& x, double perplexity, bool parallel) {
  const Eigen::MatrixXd d2 = parallel ? kernels::squared_distances_omp(x) : kernels::squared_distances_serial(x);
  return parallel ? kernels::conditional_affinities_omp(d2, perplexity)
                  : kernels::conditional_affinities_serial(d2, perplexity);
}

RowMatrix symmetrize_affinities(const RowMatrix& conditional) {
  const double n = static_cast<double>(conditional.rows());
  RowMatrix p = (conditional + conditional.transpose()) / (2.0 * n);
  return p;
}

TsneResult tsne(const RowMatrix& x, const TsneConfig& cfg) {
  const auto n = static_cast<std::size_t>(x.rows());
  cfg.validate(n);
  bool distinct = false;
  for (Eigen::Index i = 1; i < x.rows() && !distinct; ++i) distinct = x.row(i) != x.row(0);
  if (!distinct) throw DegenerateInput("all input points are identical");

  const RowMatrix p = symmetrize_affinities(tsne_conditional_affinities(x, cfg.perplexity, cfg.parallel));

  Rng rng(derive_seed(cfg.seed, "tsne-init"));
  RowMatrix y(x.rows(), 2);
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    y(i, 0) = 1e-4 * rng.normal();
    y(i, 1) = 1e-4 * rng.normal();
  }
  RowMatrix grad(x.rows(), 2);
  RowMatrix update = RowMatrix::Zero(x.rows(), 2);
  RowMatrix gains = RowMatrix::Ones(x.rows(), 2);
  auto gradient = [&](double exag, double* kl) {
    if (cfg.parallel) kernels::tsne_gradient_omp(p, y, exag, grad, kl);
    else kernels::tsne_gradient_serial(p, y, exag, grad, kl);
  };

  TsneResult result;
  gradient(1.0, &result.initial_kl);
  for (int it = 0; it < cfg.iterations; ++it) {
    const double exag = it < cfg.exaggeration_iterations ? cfg.early_exaggeration : 1.0;
    const double momentum = it < cfg.momentum_switch ? cfg.initial_momentum : cfg.final_momentum;
    gradient(exag, nullptr);
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      for (int c = 0; c < 2; ++c) {
        double& g = gains(i, c);
        g = (grad(i, c) > 0) != (update(i, c) > 0) ? g + 0.2 : g * 0.8;
        g = std::max(g, 0.01);
        update(i, c) = momentum * update(i, c) - cfg.learning_rate * g * grad(i, c);
        y(i, c) += update(i, c);
      }
    }
    const Eigen::RowVector2d centre = y.colwise().mean();
    y.rowwise() -= centre;
  }
  gradient(1.0, &result.final_kl);
  result.coords = std::move(y);
  return result;
}

FrequentSubset top_k_frequent(const EmbeddingModel& model, const Vocabulary& vocab, std::size_t k) {
  if (k > vocab.size()) throw InvalidArgument("k exceeds vocabulary size");
  std::vector<std::size_t> order(vocab.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return vocab.count(a) > vocab.count(b); });
  FrequentSubset out;
  std::vector<std::int32_t> rows;
  for (std::size_t i : order) {
    if (rows.size() == k) break;
    if (auto r = model.find(vocab.token(i))) {
      rows.push_back(*r);
      out.tokens.push_back(vocab.token(i));
    }
  }
  out.vectors.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(model.dim()));
  for (std::size_t r = 0; r < rows.size(); ++r) out.vectors.row(static_cast<Eigen::Index>(r)) = model.vectors().row(rows[r]);
  return out;
}

}  // namespace labemb
