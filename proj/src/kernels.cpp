#include "labemb/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include <omp.h>

#include "labemb/glove.hpp"

namespace labemb::kernels {

namespace {

using PairMap = std::unordered_map<std::uint64_t, double>;

std::uint64_t pair_key(std::int32_t a, std::int32_t b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

void count_unit(const std::vector<std::int32_t>& unit, int window, bool weighting, PairMap& acc) {
  const std::size_t n = unit.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t hi = std::min(n - 1, i + static_cast<std::size_t>(window));
    for (std::size_t j = i + 1; j <= hi; ++j) {
      std::int32_t a = unit[i], b = unit[j];
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      acc[pair_key(a, b)] += weighting ? 1.0 / static_cast<double>(j - i) : 1.0;
    }
  }
}

std::vector<CooccurrenceEntry> to_entries(const PairMap& acc) {
  std::vector<CooccurrenceEntry> entries;
  entries.reserve(2 * acc.size());
  for (const auto& [key, w] : acc) {
    const auto a = static_cast<std::int32_t>(key >> 32);
    const auto b = static_cast<std::int32_t>(key & 0xffffffffu);
    entries.push_back({a, b, w});
    entries.push_back({b, a, w});
  }
  std::sort(entries.begin(), entries.end(), [](const CooccurrenceEntry& x, const CooccurrenceEntry& y) {
    return x.row != y.row ? x.row < y.row : x.col < y.col;
  });
  return entries;
}

inline double glove_f(double x, double x_max, double alpha) {
  return x >= x_max ? 1.0 : std::pow(x / x_max, alpha);
}

// Uses GloVe's half-loss convention: the step direction is f * diff.
inline double glove_update(const CooccurrenceEntry& e, const GloveBuffers& b, const GloveStep& s) {
  const std::size_t d = b.dim;
  double* wi = b.w + static_cast<std::size_t>(e.row) * d;
  double* wj = b.w_ctx + static_cast<std::size_t>(e.col) * d;
  double* gi = b.grad_sq_w + static_cast<std::size_t>(e.row) * d;
  double* gj = b.grad_sq_ctx + static_cast<std::size_t>(e.col) * d;
  double dot = 0.0;
  for (std::size_t k = 0; k < d; ++k) dot += wi[k] * wj[k];
  const double diff = dot + b.bias[e.row] + b.bias_ctx[e.col] - std::log(e.weight);
  const double f = glove_f(e.weight, s.x_max, s.alpha);
  const double fdiff = f * diff;
  for (std::size_t k = 0; k < d; ++k) {
    const double g_i = fdiff * wj[k];
    const double g_j = fdiff * wi[k];
    wi[k] -= s.lr * g_i / std::sqrt(gi[k]);
    wj[k] -= s.lr * g_j / std::sqrt(gj[k]);
    gi[k] += g_i * g_i;
    gj[k] += g_j * g_j;
  }
  b.bias[e.row] -= s.lr * fdiff / std::sqrt(b.grad_sq_bias[e.row]);
  b.bias_ctx[e.col] -= s.lr * fdiff / std::sqrt(b.grad_sq_bias_ctx[e.col]);
  b.grad_sq_bias[e.row] += fdiff * fdiff;
  b.grad_sq_bias_ctx[e.col] += fdiff * fdiff;
  return f * diff * diff;
}

void affinity_row(const Eigen::MatrixXd& d, Eigen::Index i, double perplexity, double* out,
                  double& beta_out) {
  const Eigen::Index n = d.rows();
  const double target = std::log(perplexity);
  double dmin = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j != i) dmin = std::min(dmin, d(i, j));
  }
  double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
  // Scale the starting precision to the data so bisection starts nearby.
  double mean_d = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j != i) mean_d += d(i, j) - dmin;
  }
  mean_d /= static_cast<double>(n - 1);
  if (mean_d > 0) beta = 1.0 / mean_d;
  for (int iter = 0; iter < 500; ++iter) {
    double sum = 0.0, weighted = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) {
        out[j] = 0.0;
        continue;
      }
      const double shifted = d(i, j) - dmin;
      const double p = std::exp(-beta * shifted);
      out[j] = p;
      sum += p;
      weighted += p * shifted;
    }
    const double entropy = std::log(sum) + beta * weighted / sum;
    for (Eigen::Index j = 0; j < n; ++j) out[j] /= sum;
    const double gap = entropy - target;
    if (std::abs(gap) < 1e-12) break;
    if (gap > 0) {
      lo = beta;
      beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
    } else {
      hi = beta;
      beta = 0.5 * (beta + lo);
    }
    if (!std::isinf(hi) && hi - lo <= 1e-15 * std::max(1.0, hi)) break;
  }
  beta_out = beta;
}

// Student-t numerators and per-row sums for one row.
void q_row(const RowMatrix& y, Eigen::Index i, double* num, double& row_sum) {
  const Eigen::Index n = y.rows();
  row_sum = 0.0;
  const double yi0 = y(i, 0), yi1 = y(i, 1);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == i) {
      num[j] = 0.0;
      continue;
    }
    const double dx = yi0 - y(j, 0), dy = yi1 - y(j, 1);
    num[j] = 1.0 / (1.0 + dx * dx + dy * dy);
    row_sum += num[j];
  }
}

void grad_row(const RowMatrix& p, const RowMatrix& y, const Eigen::MatrixXd& num, Eigen::Index i,
              double z, double exaggeration, RowMatrix& grad, double& kl_row) {
  const Eigen::Index n = y.rows();
  double g0 = 0.0, g1 = 0.0, kl = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == i) continue;
    const double q = num(i, j) / z;
    const double pij = exaggeration * p(i, j);
    const double mult = (pij - q) * num(i, j);
    g0 += mult * (y(i, 0) - y(j, 0));
    g1 += mult * (y(i, 1) - y(j, 1));
    if (pij > 0) kl += pij * std::log(pij / std::max(q, std::numeric_limits<double>::min()));
  }
  grad(i, 0) = 4.0 * g0;
  grad(i, 1) = 4.0 * g1;
  kl_row = kl;
}

}  // namespace

std::vector<CooccurrenceEntry> cooccurrence_serial(const std::vector<std::vector<std::int32_t>>& units,
                                                   int window, bool distance_weighting) {
  PairMap acc;
  for (const auto& u : units) count_unit(u, window, distance_weighting, acc);
  return to_entries(acc);
}

std::vector<CooccurrenceEntry> cooccurrence_omp(const std::vector<std::vector<std::int32_t>>& units,
                                                int window, bool distance_weighting) {
  const int threads = omp_get_max_threads();
  std::vector<PairMap> partial(static_cast<std::size_t>(threads));
  const auto n = static_cast<std::ptrdiff_t>(units.size());
#pragma omp parallel num_threads(threads)
  {
    PairMap& mine = partial[static_cast<std::size_t>(omp_get_thread_num())];
#pragma omp for schedule(static)
    for (std::ptrdiff_t u = 0; u < n; ++u) count_unit(units[static_cast<std::size_t>(u)], window, distance_weighting, mine);
  }
  PairMap merged = std::move(partial[0]);
  for (std::size_t t = 1; t < partial.size(); ++t) {
    for (const auto& [k, w] : partial[t]) merged[k] += w;
  }
  return to_entries(merged);
}

double glove_epoch_serial(std::span<const CooccurrenceEntry> entries,
                          std::span<const std::size_t> order, const GloveBuffers& buf,
                          const GloveStep& step) {
  double cost = 0.0;
  for (std::size_t idx : order) cost += glove_update(entries[idx], buf, step);
  return cost;
}

double glove_epoch_omp(std::span<const CooccurrenceEntry> entries,
                       std::span<const std::size_t> order, const GloveBuffers& buf,
                       const GloveStep& step) {
  double cost = 0.0;
  const auto n = static_cast<std::ptrdiff_t>(order.size());
#pragma omp parallel for schedule(static) reduction(+ : cost)
  for (std::ptrdiff_t t = 0; t < n; ++t) cost += glove_update(entries[order[static_cast<std::size_t>(t)]], buf, step);
  return cost;
}

Eigen::MatrixXd squared_distances_serial(const RowMatrix& x) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (x.row(i) - x.row(j)).squaredNorm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

Eigen::MatrixXd squared_distances_omp(const RowMatrix& x) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
#pragma omp parallel for schedule(dynamic, 8)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      // Same operand order as the serial kernel so results are bitwise equal.
      const Eigen::Index a = std::min(i, j), b = std::max(i, j);
      d(i, j) = (x.row(a) - x.row(b)).squaredNorm();
    }
  }
  return d;
}

RowMatrix conditional_affinities_serial(const Eigen::MatrixXd& sq_dist, double perplexity,
                                        std::vector<double>* betas) {
  const Eigen::Index n = sq_dist.rows();
  RowMatrix p(n, n);
  std::vector<double> b(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) affinity_row(sq_dist, i, perplexity, p.row(i).data(), b[static_cast<std::size_t>(i)]);
  if (betas) *betas = std::move(b);
  return p;
}

RowMatrix conditional_affinities_omp(const Eigen::MatrixXd& sq_dist, double perplexity,
                                     std::vector<double>* betas) {
  const Eigen::Index n = sq_dist.rows();
  RowMatrix p(n, n);
  std::vector<double> b(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 4)
  for (Eigen::Index i = 0; i < n; ++i) affinity_row(sq_dist, i, perplexity, p.row(i).data(), b[static_cast<std::size_t>(i)]);
  if (betas) *betas = std::move(b);
  return p;
}

void tsne_gradient_serial(const RowMatrix& p, const RowMatrix& y, double exaggeration,
                          RowMatrix& grad, double* kl) {
  const Eigen::Index n = y.rows();
  Eigen::MatrixXd num(n, n);
  std::vector<double> row_sums(static_cast<std::size_t>(n));
  Eigen::VectorXd tmp(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    q_row(y, i, tmp.data(), row_sums[static_cast<std::size_t>(i)]);
    num.row(i) = tmp.transpose();
  }
  double z = 0.0;
  for (double s : row_sums) z += s;
  grad.resize(n, 2);
  std::vector<double> kl_rows(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) grad_row(p, y, num, i, z, exaggeration, grad, kl_rows[static_cast<std::size_t>(i)]);
  if (kl) {
    *kl = 0.0;
    for (double v : kl_rows) *kl += v;
  }
}

void tsne_gradient_omp(const RowMatrix& p, const RowMatrix& y, double exaggeration,
                       RowMatrix& grad, double* kl) {
  const Eigen::Index n = y.rows();
  Eigen::MatrixXd num(n, n);
  std::vector<double> row_sums(static_cast<std::size_t>(n));
#pragma omp parallel
  {
    Eigen::VectorXd tmp(n);
#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
      q_row(y, i, tmp.data(), row_sums[static_cast<std::size_t>(i)]);
      num.row(i) = tmp.transpose();
    }
  }
  // Serial reduction keeps Z bitwise identical to the reference kernel.
  double z = 0.0;
  for (double s : row_sums) z += s;
  grad.resize(n, 2);
  std::vector<double> kl_rows(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) grad_row(p, y, num, i, z, exaggeration, grad, kl_rows[static_cast<std::size_t>(i)]);
  if (kl) {
    *kl = 0.0;
    for (double v : kl_rows) *kl += v;
  }
}

RowMatrix mean_rows_serial(const std::vector<std::vector<std::int32_t>>& ids, const RowMatrix& vectors) {
  RowMatrix out = RowMatrix::Zero(static_cast<Eigen::Index>(ids.size()), vectors.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r].empty()) continue;
    for (auto id : ids[r]) out.row(static_cast<Eigen::Index>(r)) += vectors.row(id);
    out.row(static_cast<Eigen::Index>(r)) /= static_cast<double>(ids[r].size());
  }
  return out;
}

RowMatrix mean_rows_omp(const std::vector<std::vector<std::int32_t>>& ids, const RowMatrix& vectors) {
  RowMatrix out = RowMatrix::Zero(static_cast<Eigen::Index>(ids.size()), vectors.cols());
  const auto n = static_cast<std::ptrdiff_t>(ids.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const auto& row_ids = ids[static_cast<std::size_t>(r)];
    if (row_ids.empty()) continue;
    for (auto id : row_ids) out.row(r) += vectors.row(id);
    out.row(r) /= static_cast<double>(row_ids.size());
  }
  return out;
}

}  // namespace labemb::kernels
