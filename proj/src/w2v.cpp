#include "labemb/w2v.hpp"

#include <algorithm>
#include <cmath>
#include <omp.h>

#include "labemb/error.hpp"
#include "labemb/random.hpp"
#include "labemb/util.hpp"

namespace labemb {

namespace {

/// log(1 + exp(z)) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void check_same_dim(const Eigen::VectorXd& ref, const Eigen::VectorXd& v) {
  if (ref.size() != v.size()) throw DimensionMismatch("vectors differ in dimension");
}

struct TrainingUnits {
  std::vector<std::vector<std::int32_t>> units;
  std::size_t total_tokens = 0;
};

TrainingUnits prepare_units(std::span<const Sentence> sentences, const Vocabulary& vocab,
                            const W2vHyperparams& hp) {
  hp.validate();
  if (vocab.size() < 2) throw DegenerateVocab("vocabulary needs at least 2 tokens");
  if (sentences.empty()) throw EmptyCorpus("no sentences to train on");
  TrainingUnits tu{context_units(sentences, hp.cross_orders), 0};
  for (const auto& u : tu.units) {
    for (auto id : u) {
      if (id < 0 || static_cast<std::size_t>(id) >= vocab.size()) {
        throw InvalidArgument("sentence token id outside the vocabulary");
      }
    }
    tu.total_tokens += u.size();
  }
  return tu;
}

/// Frequent-token downsampling as in the reference word2vec trainer.
std::vector<double> keep_probabilities(const Vocabulary& vocab, std::optional<double> threshold) {
  std::vector<double> keep(vocab.size(), 1.0);
  if (!threshold) return keep;
  const double total = static_cast<double>(vocab.total_count());
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const double f = static_cast<double>(vocab.count(i)) / total;
    const double t = *threshold;
    keep[i] = std::min(1.0, (std::sqrt(f / t) + 1.0) * t / f);
  }
  return keep;
}

struct Example {
  std::vector<std::int32_t> context;  // one element for skip-gram
  std::int32_t target = 0;            // context token (skip-gram) or center (CBOW)
  std::int32_t center = 0;            // center token (skip-gram only)
  std::vector<std::int32_t> negatives;
};

class W2vTrainer {
 public:
  W2vTrainer(std::span<const Sentence> sentences, const Vocabulary& vocab, const W2vHyperparams& hp)
      : vocab_(vocab),
        hp_(hp),
        tu_(prepare_units(sentences, vocab, hp)),
        noise_(vocab, hp.noise_exponent),
        keep_(keep_probabilities(vocab, hp.subsample_threshold)),
        dim_(static_cast<std::size_t>(hp.dim)),
        in_(static_cast<Eigen::Index>(vocab.size()), hp.dim),
        out_(RowMatrix::Zero(static_cast<Eigen::Index>(vocab.size()), hp.dim)) {
    Rng init(derive_seed(hp.seed, "w2v-init"));
    for (Eigen::Index i = 0; i < in_.size(); ++i) {
      in_.data()[i] = (init.uniform() - 0.5) / static_cast<double>(hp.dim);
    }
    build_frozen_sample(sentences);
  }

  EmbeddingModel train(TrainingTrace* trace) {
    if (trace) {
      trace->initial_loss = frozen_loss();
      trace->epoch_loss.clear();
    }
    const double total_work = static_cast<double>(hp_.epochs) * static_cast<double>(tu_.total_tokens);
    std::size_t processed = 0;
    for (int epoch = 0; epoch < hp_.epochs; ++epoch) {
      if (hp_.deterministic) {
        Rng rng(derive_seed(hp_.seed, static_cast<std::uint64_t>(epoch)));
        std::vector<double> scratch(3 * dim_);
        for (const auto& unit : tu_.units) {
          train_unit(unit, rng, processed, total_work, scratch);
          processed += unit.size();
        }
      } else {
        train_epoch_parallel(epoch, processed, total_work);
        processed += tu_.total_tokens;
      }
      if (trace) trace->epoch_loss.push_back(frozen_loss());
    }
    check_trained();
    std::map<std::string, std::string> meta{
        {"algorithm", std::string(to_string(hp_.algorithm))},
        {"dim", std::to_string(hp_.dim)},
        {"window", std::to_string(hp_.window)},
        {"negatives", std::to_string(hp_.negatives)},
        {"epochs", std::to_string(hp_.epochs)},
        {"initial_lr", format_double(hp_.initial_lr)},
        {"min_lr", format_double(hp_.min_lr)},
        {"noise_exponent", format_double(hp_.noise_exponent)},
        {"subsample_threshold", hp_.subsample_threshold ? format_double(*hp_.subsample_threshold) : "off"},
        {"dynamic_window", hp_.dynamic_window ? "1" : "0"},
        {"cross_orders", hp_.cross_orders ? "1" : "0"},
        {"deterministic", hp_.deterministic ? "1" : "0"},
        {"seed", std::to_string(hp_.seed)},
        {"corpus_fingerprint", corpus_fp_},
    };
    EmbeddingModel model(vocab_, std::move(in_), std::move(meta));
    if (hp_.keep_output_vectors) model.set_output_vectors(std::move(out_));
    return model;
  }

 private:
  double current_lr(double processed, double total_work) const {
    const double progress = total_work > 0 ? processed / total_work : 0.0;
    return std::max(hp_.min_lr, hp_.initial_lr - (hp_.initial_lr - hp_.min_lr) * progress);
  }

  std::int32_t draw_negative(Rng& rng, std::int32_t avoid) const {
    std::int32_t neg = noise_.sample(rng);
    // Redraw collisions with the positive target a bounded number of times.
    for (int tries = 0; neg == avoid && tries < 8; ++tries) neg = noise_.sample(rng);
    return neg;
  }

  void train_unit(const std::vector<std::int32_t>& raw, Rng& rng, std::size_t processed,
                  double total_work, std::vector<double>& scratch) {
    const std::vector<std::int32_t>* unit = &raw;
    std::vector<std::int32_t> kept;
    if (hp_.subsample_threshold) {
      for (auto id : raw) {
        if (rng.uniform() < keep_[static_cast<std::size_t>(id)]) kept.push_back(id);
      }
      unit = &kept;
    }
    const auto n = static_cast<std::ptrdiff_t>(unit->size());
    std::vector<double*> negs(static_cast<std::size_t>(hp_.negatives));
    std::vector<double*> ctx_rows;
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const double lr = current_lr(static_cast<double>(processed + static_cast<std::size_t>(i)), total_work);
      const int b = hp_.dynamic_window ? static_cast<int>(rng.between(1, hp_.window)) : hp_.window;
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - b);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + b);
      const std::int32_t center = (*unit)[static_cast<std::size_t>(i)];
      if (hp_.algorithm == W2vAlgorithm::SkipGram) {
        for (std::ptrdiff_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const std::int32_t ctx = (*unit)[static_cast<std::size_t>(j)];
          for (auto& p : negs) p = out_row(draw_negative(rng, ctx));
          detail::sgns_update(in_row(center), out_row(ctx), negs, dim_, lr, scratch.data());
        }
      } else {
        ctx_rows.clear();
        for (std::ptrdiff_t j = lo; j <= hi; ++j) {
          if (j != i) ctx_rows.push_back(in_row((*unit)[static_cast<std::size_t>(j)]));
        }
        if (ctx_rows.empty()) continue;
        for (auto& p : negs) p = out_row(draw_negative(rng, center));
        detail::cbow_update(ctx_rows, out_row(center), negs, dim_, lr, scratch.data());
      }
    }
  }

  void train_epoch_parallel(int epoch, std::size_t processed_before, double total_work) {
    const auto n_units = static_cast<std::ptrdiff_t>(tu_.units.size());
#pragma omp parallel
    {
      Rng rng(derive_seed(derive_seed(hp_.seed, static_cast<std::uint64_t>(epoch)),
                          static_cast<std::uint64_t>(omp_get_thread_num()) + 1000));
      std::vector<double> scratch(3 * dim_);
      const double share = static_cast<double>(tu_.total_tokens) / static_cast<double>(std::max<std::ptrdiff_t>(1, n_units));
#pragma omp for schedule(static)
      for (std::ptrdiff_t u = 0; u < n_units; ++u) {
        // Approximate progress: units are roughly equal in length.
        const auto approx = processed_before + static_cast<std::size_t>(share * static_cast<double>(u));
        train_unit(tu_.units[static_cast<std::size_t>(u)], rng, approx, total_work, scratch);
      }
    }
  }

  double* in_row(std::int32_t id) { return in_.data() + static_cast<std::size_t>(id) * dim_; }
  double* out_row(std::int32_t id) { return out_.data() + static_cast<std::size_t>(id) * dim_; }

  void build_frozen_sample(std::span<const Sentence> sentences) {
    corpus_fp_ = corpus_fingerprint(sentences);
    Rng rng(derive_seed(hp_.seed, "w2v-frozen-sample"));
    constexpr std::size_t kSampleSize = 2000;
    std::vector<Example> candidates;
    for (const auto& unit : tu_.units) {
      const auto n = static_cast<std::ptrdiff_t>(unit.size());
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - hp_.window);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + hp_.window);
        if (hi == lo) continue;
        if (!rng.bernoulli(0.05) && candidates.size() >= kSampleSize) continue;
        Example ex;
        if (hp_.algorithm == W2vAlgorithm::SkipGram) {
          std::ptrdiff_t j = lo + static_cast<std::ptrdiff_t>(rng.below(static_cast<std::uint64_t>(hi - lo)));
          if (j >= i) ++j;
          ex.center = unit[static_cast<std::size_t>(i)];
          ex.target = unit[static_cast<std::size_t>(j)];
          ex.context = {ex.center};
        } else {
          ex.target = unit[static_cast<std::size_t>(i)];
          for (std::ptrdiff_t j = lo; j <= hi; ++j) {
            if (j != i) ex.context.push_back(unit[static_cast<std::size_t>(j)]);
          }
        }
        for (int k = 0; k < hp_.negatives; ++k) ex.negatives.push_back(draw_negative(rng, ex.target));
        if (candidates.size() < kSampleSize) {
          candidates.push_back(std::move(ex));
        } else {
          candidates[rng.below(kSampleSize)] = std::move(ex);
        }
      }
    }
    frozen_ = std::move(candidates);
  }

  double frozen_loss() const {
    if (frozen_.empty()) return 0.0;
    auto in_vec = [&](std::int32_t id) -> Eigen::VectorXd { return in_.row(id).transpose(); };
    auto out_vec = [&](std::int32_t id) -> Eigen::VectorXd { return out_.row(id).transpose(); };
    double total = 0.0;
    for (const auto& ex : frozen_) {
      std::vector<Eigen::VectorXd> negs;
      for (auto id : ex.negatives) negs.push_back(out_vec(id));
      if (hp_.algorithm == W2vAlgorithm::SkipGram) {
        total += sgns_pair_loss(in_vec(ex.center), out_vec(ex.target), negs);
      } else {
        std::vector<Eigen::VectorXd> ctx;
        for (auto id : ex.context) ctx.push_back(in_vec(id));
        total += cbow_example_loss(ctx, out_vec(ex.target), negs);
      }
    }
    return total / static_cast<double>(frozen_.size());
  }

  void check_trained() const {
    if (!in_.allFinite() || !out_.allFinite()) throw TrainingDiverged("non-finite entries after training");
    const double max_norm = in_.rowwise().norm().maxCoeff();
    if (max_norm > hp_.max_norm) {
      throw TrainingDiverged("vector norm " + std::to_string(max_norm) + " exceeds bound");
    }
  }

  const Vocabulary& vocab_;
  W2vHyperparams hp_;
  TrainingUnits tu_;
  NoiseSampler noise_;
  std::vector<double> keep_;
  std::size_t dim_;
  RowMatrix in_;
  RowMatrix out_;
  std::vector<Example> frozen_;
  std::string corpus_fp_;
};

}  // namespace

std::string_view to_string(W2vAlgorithm algo) {
  return algo == W2vAlgorithm::SkipGram ? "SkipGram" : "CBOW";
}

void W2vHyperparams::validate() const {
  if (dim < 1) throw InvalidArgument("dim must be >= 1");
  if (window < 1) throw InvalidArgument("window must be >= 1");
  if (negatives < 1) throw InvalidArgument("negatives must be >= 1");
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (!(initial_lr > min_lr) || min_lr < 0) throw InvalidArgument("need initial_lr > min_lr >= 0");
  if (subsample_threshold && !(*subsample_threshold > 0)) {
    throw InvalidArgument("subsample threshold must be positive");
  }
}

NoiseSampler::NoiseSampler(const Vocabulary& vocab, double exponent) {
  cumulative_.reserve(vocab.size());
  double total = 0.0;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    total += std::pow(static_cast<double>(vocab.count(i)), exponent);
    cumulative_.push_back(total);
  }
  for (auto& c : cumulative_) c /= total;
  if (!cumulative_.empty()) cumulative_.back() = 1.0;
}

std::int32_t NoiseSampler::sample(Rng& rng) const {
  const double u = rng.uniform();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return static_cast<std::int32_t>(it - cumulative_.begin());
}

double NoiseSampler::probability(std::size_t i) const {
  return i == 0 ? cumulative_[0] : cumulative_[i] - cumulative_[i - 1];
}

double sgns_pair_loss(const Eigen::VectorXd& center, const Eigen::VectorXd& context,
                      const std::vector<Eigen::VectorXd>& negatives) {
  check_same_dim(center, context);
  double loss = softplus(-context.dot(center));
  for (const auto& u : negatives) {
    check_same_dim(center, u);
    loss += softplus(u.dot(center));
  }
  return loss;
}

SgnsGradient sgns_pair_gradient(const Eigen::VectorXd& center, const Eigen::VectorXd& context,
                                const std::vector<Eigen::VectorXd>& negatives) {
  check_same_dim(center, context);
  SgnsGradient g;
  const double gpos = sigmoid(context.dot(center)) - 1.0;
  g.center = gpos * context;
  g.context = gpos * center;
  for (const auto& u : negatives) {
    check_same_dim(center, u);
    const double gneg = sigmoid(u.dot(center));
    g.center += gneg * u;
    g.negatives.push_back(gneg * center);
  }
  return g;
}

double cbow_example_loss(const std::vector<Eigen::VectorXd>& context_inputs,
                         const Eigen::VectorXd& target_output,
                         const std::vector<Eigen::VectorXd>& negative_outputs) {
  if (context_inputs.empty()) throw InvalidArgument("CBOW example needs a context");
  Eigen::VectorXd h = Eigen::VectorXd::Zero(target_output.size());
  for (const auto& c : context_inputs) {
    check_same_dim(target_output, c);
    h += c;
  }
  h /= static_cast<double>(context_inputs.size());
  return sgns_pair_loss(h, target_output, negative_outputs);
}

CbowGradient cbow_example_gradient(const std::vector<Eigen::VectorXd>& context_inputs,
                                   const Eigen::VectorXd& target_output,
                                   const std::vector<Eigen::VectorXd>& negative_outputs) {
  if (context_inputs.empty()) throw InvalidArgument("CBOW example needs a context");
  Eigen::VectorXd h = Eigen::VectorXd::Zero(target_output.size());
  for (const auto& c : context_inputs) {
    check_same_dim(target_output, c);
    h += c;
  }
  const double inv = 1.0 / static_cast<double>(context_inputs.size());
  h *= inv;
  SgnsGradient inner = sgns_pair_gradient(h, target_output, negative_outputs);
  CbowGradient g;
  g.context_inputs.assign(context_inputs.size(), inner.center * inv);
  g.target_output = std::move(inner.context);
  g.negative_outputs = std::move(inner.negatives);
  return g;
}

namespace detail {

void sgns_update(double* center_in, double* context_out, std::span<double* const> negative_out,
                 std::size_t dim, double lr, double* scratch) {
  double* grad_center = scratch;
  std::fill(grad_center, grad_center + dim, 0.0);
  const double gpos = sigmoid(dot(context_out, center_in, dim)) - 1.0;
  for (std::size_t k = 0; k < dim; ++k) {
    grad_center[k] += gpos * context_out[k];
    context_out[k] -= lr * gpos * center_in[k];
  }
  for (double* u : negative_out) {
    const double gneg = sigmoid(dot(u, center_in, dim));
    for (std::size_t k = 0; k < dim; ++k) {
      grad_center[k] += gneg * u[k];
      u[k] -= lr * gneg * center_in[k];
    }
  }
  for (std::size_t k = 0; k < dim; ++k) center_in[k] -= lr * grad_center[k];
}

void cbow_update(std::span<double* const> context_in, double* target_out,
                 std::span<double* const> negative_out, std::size_t dim, double lr,
                 double* scratch) {
  double* h = scratch;
  double* grad_h = scratch + dim;
  std::fill(h, h + dim, 0.0);
  std::fill(grad_h, grad_h + dim, 0.0);
  const double inv = 1.0 / static_cast<double>(context_in.size());
  for (const double* c : context_in) {
    for (std::size_t k = 0; k < dim; ++k) h[k] += c[k];
  }
  for (std::size_t k = 0; k < dim; ++k) h[k] *= inv;
  const double gpos = sigmoid(dot(target_out, h, dim)) - 1.0;
  for (std::size_t k = 0; k < dim; ++k) {
    grad_h[k] += gpos * target_out[k];
    target_out[k] -= lr * gpos * h[k];
  }
  for (double* u : negative_out) {
    const double gneg = sigmoid(dot(u, h, dim));
    for (std::size_t k = 0; k < dim; ++k) {
      grad_h[k] += gneg * u[k];
      u[k] -= lr * gneg * h[k];
    }
  }
  for (double* c : context_in) {
    for (std::size_t k = 0; k < dim; ++k) c[k] -= lr * inv * grad_h[k];
  }
}

std::vector<std::pair<std::int32_t, std::int32_t>> window_pairs(std::span<const std::int32_t> unit,
                                                                int window) {
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
  const auto n = static_cast<std::ptrdiff_t>(unit.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - window);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + window);
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      if (j != i) pairs.emplace_back(unit[static_cast<std::size_t>(i)], unit[static_cast<std::size_t>(j)]);
    }
  }
  return pairs;
}

}  // namespace detail

EmbeddingModel train_sgns(std::span<const Sentence> sentences, const Vocabulary& vocab,
                          const W2vHyperparams& hp, TrainingTrace* trace) {
  if (hp.algorithm != W2vAlgorithm::SkipGram) throw InvalidArgument("train_sgns needs algorithm=SkipGram");
  W2vTrainer trainer(sentences, vocab, hp);
  return trainer.train(trace);
}

EmbeddingModel train_cbow(std::span<const Sentence> sentences, const Vocabulary& vocab,
                          const W2vHyperparams& hp, TrainingTrace* trace) {
  if (hp.algorithm != W2vAlgorithm::CBOW) throw InvalidArgument("train_cbow needs algorithm=CBOW");
  W2vTrainer trainer(sentences, vocab, hp);
  return trainer.train(trace);
}

}  // namespace labemb
