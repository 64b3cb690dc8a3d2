#include "labemb/glove.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>

#include "labemb/error.hpp"
#include "labemb/kernels.hpp"
#include "labemb/random.hpp"
#include "labemb/util.hpp"

namespace labemb {

double CooccurrenceTable::get(std::int32_t row, std::int32_t col) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), std::make_pair(row, col),
                             [](const CooccurrenceEntry& e, const std::pair<std::int32_t, std::int32_t>& key) {
                               return std::make_pair(e.row, e.col) < key;
                             });
  if (it == entries.end() || it->row != row || it->col != col) return 0.0;
  return it->weight;
}

double CooccurrenceTable::total_weight() const {
  double total = 0.0;
  for (const auto& e : entries) total += e.weight;
  return total;
}

namespace {

constexpr char kCoocMagic[8] = {'L', 'E', 'C', 'O', 'O', 'C', '1', '\0'};

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get_value(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw FormatError(static_cast<std::size_t>(in.gcount()), "truncated co-occurrence file");
  return v;
}

}  // namespace

void CooccurrenceTable::save(std::ostream& out) const {
  out.write(kCoocMagic, sizeof kCoocMagic);
  put<std::uint64_t>(out, vocab_size);
  put<std::int32_t>(out, window);
  put<std::uint8_t>(out, distance_weighting ? 1 : 0);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(vocab_fingerprint.size()));
  out.write(vocab_fingerprint.data(), static_cast<std::streamsize>(vocab_fingerprint.size()));
  put<std::uint64_t>(out, entries.size());
  for (const auto& e : entries) {
    put(out, e.row);
    put(out, e.col);
    put(out, e.weight);
  }
}

CooccurrenceTable CooccurrenceTable::load(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kCoocMagic, sizeof magic) != 0) {
    throw FormatError(0, "not a co-occurrence table");
  }
  CooccurrenceTable t;
  t.vocab_size = get_value<std::uint64_t>(in);
  t.window = get_value<std::int32_t>(in);
  t.distance_weighting = get_value<std::uint8_t>(in) != 0;
  auto fp_len = get_value<std::uint32_t>(in);
  t.vocab_fingerprint.resize(fp_len);
  in.read(t.vocab_fingerprint.data(), fp_len);
  auto n = get_value<std::uint64_t>(in);
  t.entries.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    CooccurrenceEntry e;
    e.row = get_value<std::int32_t>(in);
    e.col = get_value<std::int32_t>(in);
    e.weight = get_value<double>(in);
    t.entries.push_back(e);
  }
  return t;
}

CooccurrenceTable build_cooccurrence(std::span<const Sentence> sentences, const Vocabulary& vocab,
                                     int window, bool distance_weighting, bool cross_orders) {
  if (window < 1) throw InvalidArgument("window must be >= 1");
  if (sentences.empty()) throw EmptyCorpus("no sentences for co-occurrence counting");
  auto units = context_units(sentences, cross_orders);
  CooccurrenceTable table;
  table.entries = kernels::cooccurrence_serial(units, window, distance_weighting);
  table.vocab_size = vocab.size();
  table.vocab_fingerprint = vocab.fingerprint();
  table.window = window;
  table.distance_weighting = distance_weighting;
  return table;
}

double glove_weight(double x, double x_max, double alpha) {
  if (!(x > 0)) throw NonPositiveCount("co-occurrence weight must be positive");
  if (x >= x_max) return 1.0;
  return std::pow(x / x_max, alpha);
}

void GloveHyperparams::validate() const {
  if (dim < 1) throw InvalidArgument("dim must be >= 1");
  if (!(x_max > 0)) throw InvalidArgument("x_max must be positive");
  if (!(alpha > 0 && alpha <= 1)) throw InvalidArgument("alpha must be in (0, 1]");
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (!(initial_lr > 0)) throw InvalidArgument("initial_lr must be positive");
}

double glove_entry_loss(const Eigen::VectorXd& w, const Eigen::VectorXd& w_ctx, double bias,
                        double bias_ctx, double x, double x_max, double alpha) {
  if (w.size() != w_ctx.size()) throw DimensionMismatch("word and context vectors differ in dimension");
  const double diff = w.dot(w_ctx) + bias + bias_ctx - std::log(x);
  return glove_weight(x, x_max, alpha) * diff * diff;
}

GloveGradient glove_entry_gradient(const Eigen::VectorXd& w, const Eigen::VectorXd& w_ctx,
                                   double bias, double bias_ctx, double x, double x_max,
                                   double alpha) {
  if (w.size() != w_ctx.size()) throw DimensionMismatch("word and context vectors differ in dimension");
  const double diff = w.dot(w_ctx) + bias + bias_ctx - std::log(x);
  const double g = 2.0 * glove_weight(x, x_max, alpha) * diff;
  return GloveGradient{g * w_ctx, g * w, g, g};
}

namespace {

struct GloveState {
  GloveParameters p;
  RowMatrix grad_sq_w, grad_sq_ctx;
  Eigen::VectorXd grad_sq_b, grad_sq_bctx;
};

double table_loss(const GloveParameters& p, const CooccurrenceTable& cooc,
                  std::span<const std::size_t> sample, const GloveHyperparams& hp) {
  if (sample.empty()) return 0.0;
  double total = 0.0;
  for (auto idx : sample) {
    const auto& e = cooc.entries[idx];
    const double diff = p.w.row(e.row).dot(p.w_ctx.row(e.col)) + p.bias(e.row) + p.bias_ctx(e.col) -
                        std::log(e.weight);
    total += glove_weight(e.weight, hp.x_max, hp.alpha) * diff * diff;
  }
  return total / static_cast<double>(sample.size());
}

}  // namespace

GloveParameters train_glove_parameters(const CooccurrenceTable& cooc, const GloveHyperparams& hp,
                                       TrainingTrace* trace) {
  hp.validate();
  if (cooc.entries.empty()) throw EmptyCorpus("co-occurrence table is empty");
  if (cooc.vocab_size < 2) throw DegenerateVocab("vocabulary needs at least 2 tokens");
  const auto n = static_cast<Eigen::Index>(cooc.vocab_size);
  const auto dim = static_cast<std::size_t>(hp.dim);
  GloveState s;
  s.p.w.resize(n, hp.dim);
  s.p.w_ctx.resize(n, hp.dim);
  Rng init(derive_seed(hp.seed, "glove-init"));
  const double scale = 1.0 / static_cast<double>(hp.dim);
  for (Eigen::Index i = 0; i < s.p.w.size(); ++i) s.p.w.data()[i] = (init.uniform() - 0.5) * scale;
  for (Eigen::Index i = 0; i < s.p.w_ctx.size(); ++i) s.p.w_ctx.data()[i] = (init.uniform() - 0.5) * scale;
  s.p.bias = Eigen::VectorXd::NullaryExpr(n, [&](Eigen::Index) { return (init.uniform() - 0.5) * scale; });
  s.p.bias_ctx = Eigen::VectorXd::NullaryExpr(n, [&](Eigen::Index) { return (init.uniform() - 0.5) * scale; });
  s.grad_sq_w = RowMatrix::Ones(n, hp.dim);
  s.grad_sq_ctx = RowMatrix::Ones(n, hp.dim);
  s.grad_sq_b = Eigen::VectorXd::Ones(n);
  s.grad_sq_bctx = Eigen::VectorXd::Ones(n);

  std::vector<std::size_t> order(cooc.entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  Rng sample_rng(derive_seed(hp.seed, "glove-frozen-sample"));
  std::vector<std::size_t> frozen;
  if (order.size() <= 2000) {
    frozen = order;
  } else {
    for (int i = 0; i < 2000; ++i) frozen.push_back(sample_rng.below(order.size()));
  }
  if (trace) {
    trace->epoch_loss.clear();
    trace->initial_loss = table_loss(s.p, cooc, frozen, hp);
  }

  kernels::GloveBuffers buf{s.p.w.data(), s.p.w_ctx.data(), s.p.bias.data(), s.p.bias_ctx.data(),
                            s.grad_sq_w.data(), s.grad_sq_ctx.data(), s.grad_sq_b.data(),
                            s.grad_sq_bctx.data(), dim};
  kernels::GloveStep step{hp.x_max, hp.alpha, hp.initial_lr};
  Rng shuffle_rng(derive_seed(hp.seed, "glove-shuffle"));
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    if (hp.deterministic) {
      kernels::glove_epoch_serial(cooc.entries, order, buf, step);
    } else {
      kernels::glove_epoch_omp(cooc.entries, order, buf, step);
    }
    if (trace) trace->epoch_loss.push_back(table_loss(s.p, cooc, frozen, hp));
  }
  if (!s.p.w.allFinite() || !s.p.w_ctx.allFinite() || !s.p.bias.allFinite() ||
      !s.p.bias_ctx.allFinite()) {
    throw TrainingDiverged("non-finite GloVe parameters");
  }
  return std::move(s.p);
}

EmbeddingModel train_glove(const CooccurrenceTable& cooc, const Vocabulary& vocab,
                           const GloveHyperparams& hp, TrainingTrace* trace) {
  if (cooc.vocab_size != vocab.size()) {
    throw DimensionMismatch("co-occurrence table and vocabulary differ in size");
  }
  GloveParameters p = train_glove_parameters(cooc, hp, trace);
  RowMatrix combined = p.w + p.w_ctx;
  const double max_norm = combined.rowwise().norm().maxCoeff();
  if (max_norm > hp.max_norm) throw TrainingDiverged("GloVe vector norm exceeds bound");
  std::map<std::string, std::string> meta{
      {"algorithm", "GloVe"},
      {"dim", std::to_string(hp.dim)},
      {"window", std::to_string(cooc.window)},
      {"distance_weighting", cooc.distance_weighting ? "1" : "0"},
      {"x_max", format_double(hp.x_max)},
      {"alpha", format_double(hp.alpha)},
      {"epochs", std::to_string(hp.epochs)},
      {"initial_lr", format_double(hp.initial_lr)},
      {"deterministic", hp.deterministic ? "1" : "0"},
      {"seed", std::to_string(hp.seed)},
      {"combine", "w+w_ctx"},
      {"cooccurrence_entries", std::to_string(cooc.entries.size())},
  };
  return EmbeddingModel(vocab, std::move(combined), std::move(meta));
}

}  // namespace labemb
