#include "labemb/embedstore.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "labemb/corpus.hpp"
#include "labemb/error.hpp"
#include "labemb/util.hpp"

namespace labemb {

EmbeddingModel::EmbeddingModel(std::vector<std::string> tokens, RowMatrix vectors,
                               std::map<std::string, std::string> metadata)
    : tokens_(std::move(tokens)), vectors_(std::move(vectors)), metadata_(std::move(metadata)) {
  if (static_cast<std::size_t>(vectors_.rows()) != tokens_.size()) {
    throw DimensionMismatch("row count " + std::to_string(vectors_.rows()) +
                            " differs from token count " + std::to_string(tokens_.size()));
  }
  rebuild_index();
}

EmbeddingModel::EmbeddingModel(const Vocabulary& vocab, RowMatrix vectors,
                               std::map<std::string, std::string> metadata)
    : vectors_(std::move(vectors)), metadata_(std::move(metadata)) {
  tokens_.reserve(vocab.size());
  for (const auto& e : vocab.entries()) tokens_.push_back(e.token);
  if (static_cast<std::size_t>(vectors_.rows()) != tokens_.size()) {
    throw DimensionMismatch("row count differs from vocabulary size");
  }
  metadata_.emplace("vocab_fingerprint", vocab.fingerprint());
  metadata_.emplace("token_mode", std::string(to_string(vocab.mode())));
  rebuild_index();
}

void EmbeddingModel::rebuild_index() {
  index_.clear();
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<std::int32_t>(i)).second) {
      throw InvalidArgument("duplicate token '" + tokens_[i] + "'");
    }
  }
}

std::optional<std::int32_t> EmbeddingModel::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DimensionMismatch("cosine of vectors with different dimension");
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw ZeroVector("cosine similarity of a zero vector");
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

std::vector<Neighbor> nearest_neighbors(const EmbeddingModel& model, std::string_view token,
                                        std::size_t k) {
  auto query = model.find(token);
  if (!query) throw UnknownToken("token '" + std::string(token) + "' not in model");
  if (k < 1 || k >= model.size()) {
    throw InvalidArgument("k must satisfy 1 <= k < vocabulary size");
  }
  auto q = model.row(static_cast<std::size_t>(*query));
  std::vector<Neighbor> all;
  all.reserve(model.size() - 1);
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (i == static_cast<std::size_t>(*query)) continue;
    all.push_back({model.token(i), cosine_similarity(q, model.row(i))});
  }
  auto better = [](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.token < b.token;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), better);
  all.resize(k);
  return all;
}

void write_model_text(std::ostream& out, const EmbeddingModel& model) {
  out << model.size() << ' ' << model.dim() << '\n';
  for (std::size_t i = 0; i < model.size(); ++i) {
    const auto& tok = model.token(i);
    if (tok.empty() || tok.find_first_of(" \t\r\n") != std::string::npos) {
      throw InvalidArgument("token '" + tok + "' contains whitespace and cannot be saved");
    }
    out << tok;
    for (double x : model.row(i)) out << ' ' << format_g6(x);
    out << '\n';
  }
}

namespace {

class TextCursor {
 public:
  explicit TextCursor(std::string_view text) : text_(text) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ >= text_.size(); }

  void skip_blanks() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r')) ++pos_;
  }

  std::string_view word() {
    skip_blanks();
    std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ' ' && text_[pos_] != '\t' &&
           text_[pos_] != '\n' && text_[pos_] != '\r') {
      ++pos_;
    }
    return text_.substr(start, pos_ - start);
  }

  bool end_of_line() {
    skip_blanks();
    if (pos_ >= text_.size()) return true;
    if (text_[pos_] == '\n') {
      ++pos_;
      return true;
    }
    return false;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

template <class T>
bool parse_number(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

EmbeddingModel read_model_text(std::string_view text) {
  TextCursor cur(text);
  std::size_t n = 0, dim = 0;
  std::size_t at = cur.offset();
  if (!parse_number(cur.word(), n)) throw FormatError(at, "expected vocabulary size");
  at = cur.offset();
  if (!parse_number(cur.word(), dim) || dim == 0) throw FormatError(at, "expected positive dimension");
  if (!cur.end_of_line()) throw FormatError(cur.offset(), "trailing data after header");

  std::vector<std::string> tokens;
  tokens.reserve(n);
  RowMatrix vectors(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    at = cur.offset();
    auto tok = cur.word();
    if (tok.empty()) {
      throw FormatError(at, "expected " + std::to_string(n) + " token lines, found " + std::to_string(i));
    }
    tokens.emplace_back(tok);
    for (std::size_t j = 0; j < dim; ++j) {
      at = cur.offset();
      auto w = cur.word();
      double x = 0.0;
      if (w.empty() || !parse_number(w, x)) throw FormatError(at, "expected a number for '" + tokens.back() + "'");
      vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x;
    }
    if (!cur.end_of_line()) throw FormatError(cur.offset(), "too many values for '" + tokens.back() + "'");
  }
  while (!cur.at_end()) {
    at = cur.offset();
    if (!cur.word().empty()) {
      throw FormatError(at, "more token lines than the header count " + std::to_string(n));
    }
    cur.end_of_line();
  }
  return EmbeddingModel(std::move(tokens), std::move(vectors));
}

void save_model(const EmbeddingModel& model, const std::filesystem::path& path) {
  std::ostringstream body;
  write_model_text(body, model);
  write_file(path, body.str());
  std::ostringstream meta;
  for (const auto& [k, v] : model.metadata()) meta << k << '=' << v << '\n';
  write_file(path.string() + ".meta", meta.str());
}

EmbeddingModel load_model(const std::filesystem::path& path) {
  EmbeddingModel model = read_model_text(read_file(path));
  std::filesystem::path meta_path = path.string() + ".meta";
  if (std::filesystem::exists(meta_path)) {
    std::istringstream meta(read_file(meta_path));
    std::string line;
    while (std::getline(meta, line)) {
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      model.metadata()[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  return model;
}

}  // namespace labemb
