#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "labemb/corpus.hpp"
#include "labemb/date.hpp"
#include "labemb/features.hpp"
#include "labemb/glove.hpp"
#include "labemb/predict.hpp"
#include "labemb/synthgen.hpp"
#include "labemb/tsne.hpp"
#include "labemb/w2v.hpp"

namespace labemb {

enum class Trainer { SGNS, CBOW, GloVe };
std::string_view to_string(Trainer t);
std::optional<Trainer> parse_trainer(std::string_view text);

/// Everything a subcommand needs; filled from defaults, then the config
/// file, then command-line flags.
struct RunConfig {
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 1;

  GeneratorConfig generator;

  TokenMode mode = TokenMode::LoincPlusAbnormality;
  std::int64_t min_count = 1;
  bool dedup_within_order = false;
  /// build-corpus keeps only events before the split date.
  bool corpus_before_split = false;

  Trainer trainer = Trainer::SGNS;
  W2vHyperparams w2v;
  GloveHyperparams glove;
  bool distance_weighting = true;

  Date split_date = make_date(2017, 3, 22);
  int window_days = 30;
  int horizon_days = 90;

  std::vector<int> dims = {50, 100, 200, 300};
  std::vector<Trainer> trainers = {Trainer::SGNS, Trainer::CBOW, Trainer::GloVe};
  std::vector<TokenMode> modes = {TokenMode::LoincOnly, TokenMode::LoincPlusAbnormality};
  Aggregation aggregation = Aggregation::Mean;
  bool bow_binary = false;
  int svd_k = 50;
  int search_draws = 30;
  int folds = 5;
  LogRegOptions logreg;

  std::string model;  // explicit model path for eval/tsne/neighbors
  std::string token;
  int neighbors_k = 10;
  std::size_t tsne_top_k = 500;
  TsneConfig tsne;

  /// Throws ConfigError for unknown keys or unparsable values.
  void set(std::string_view key, std::string_view value);
  /// `key = value` lines; `#` starts a comment.
  void load_file(const std::filesystem::path& path);
  /// Resolved values as strings, excluding the output directory.
  std::map<std::string, std::string> resolved() const;
};

/// Paths of the artifacts produced inside the output directory.
namespace artifacts {
inline constexpr const char* kEvents = "events.csv";
inline constexpr const char* kCohort = "cohort.csv";
inline constexpr const char* kClasses = "classes.csv";
inline constexpr const char* kSurvival = "survival.csv";
inline constexpr const char* kManifest = "manifest";
std::string mode_slug(TokenMode mode);
std::string vocab_file(TokenMode mode);
std::string sentences_file(TokenMode mode);
std::string model_file(Trainer t, TokenMode mode, int dim);
}  // namespace artifacts

struct PredictionRow {
  std::string feature_set;
  std::optional<Trainer> trainer;
  int dim = 0;
  TokenMode mode = TokenMode::LoincPlusAbnormality;
  EvalReport report;
  SearchTrial best;
};

struct PredictionExperiment {
  std::vector<PredictionRow> rows;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

/// Temporal-split benchmark: embeddings and vocabularies come from events
/// before the split date; records whose observation window starts on or
/// after it form the test set.
PredictionExperiment run_prediction_experiment(std::span<const LabEvent> events,
                                               std::span<const CohortRecord> records,
                                               const RunConfig& cfg, std::ostream* log = nullptr);

void write_comparison_csv(std::ostream& out, std::span<const PredictionRow> rows);

/// Entry point of the command-line tool. Returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace labemb
