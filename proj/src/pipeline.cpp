#include "labemb/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "labemb/embedstore.hpp"
#include "labemb/error.hpp"
#include "labemb/ordeval.hpp"
#include "labemb/plot.hpp"
#include "labemb/random.hpp"
#include "labemb/util.hpp"

namespace labemb {

namespace fs = std::filesystem;

std::string_view to_string(Trainer t) {
  switch (t) {
    case Trainer::SGNS: return "sgns";
    case Trainer::CBOW: return "cbow";
    case Trainer::GloVe: return "glove";
  }
  return "?";
}

std::optional<Trainer> parse_trainer(std::string_view text) {
  if (text == "sgns" || text == "SGNS" || text == "skipgram") return Trainer::SGNS;
  if (text == "cbow" || text == "CBOW") return Trainer::CBOW;
  if (text == "glove" || text == "GloVe") return Trainer::GloVe;
  return std::nullopt;
}

namespace {

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto v = trim(value);
  if constexpr (std::is_floating_point_v<T>) {
    try {
      std::size_t used = 0;
      out = static_cast<T>(std::stod(std::string(v), &used));
      if (used != v.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError("bad value for " + std::string(key) + ": '" + std::string(value) + "'");
    }
  } else {
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw ConfigError("bad value for " + std::string(key) + ": '" + std::string(value) + "'");
    }
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  const auto v = trim(value);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("bad boolean for " + std::string(key) + ": '" + std::string(value) + "'");
}

Date parse_date_value(std::string_view key, std::string_view value) {
  auto d = parse_date(trim(value));
  if (!d) throw ConfigError("bad date for " + std::string(key) + ": '" + std::string(value) + "'");
  return *d;
}

TokenMode parse_mode_value(std::string_view key, std::string_view value) {
  auto m = parse_token_mode(trim(value));
  if (!m) throw ConfigError("bad token mode for " + std::string(key) + ": '" + std::string(value) + "'");
  return *m;
}

Trainer parse_trainer_value(std::string_view key, std::string_view value) {
  auto t = parse_trainer(trim(value));
  if (!t) throw ConfigError("bad trainer for " + std::string(key) + ": '" + std::string(value) + "'");
  return *t;
}

template <class T, class F>
std::vector<T> parse_list(std::string_view value, F&& item) {
  std::vector<T> out;
  for (auto part : split(value, ',')) {
    if (!trim(part).empty()) out.push_back(item(part));
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += fmt(xs[i]);
  }
  return out;
}

}  // namespace

void RunConfig::set(std::string_view key_in, std::string_view value) {
  const std::string key(trim(key_in));
  auto& g = generator;
  if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "n_patients") g.n_patients = parse_number<int>(key, value);
  else if (key == "n_panels") g.n_panels = parse_number<int>(key, value);
  else if (key == "n_classes") g.n_classes = parse_number<int>(key, value);
  else if (key == "min_codes_per_panel") g.min_codes_per_panel = parse_number<int>(key, value);
  else if (key == "max_codes_per_panel") g.max_codes_per_panel = parse_number<int>(key, value);
  else if (key == "numeric_panel_fraction") g.numeric_panel_fraction = parse_number<double>(key, value);
  else if (key == "min_order_rate") g.min_order_rate = parse_number<double>(key, value);
  else if (key == "max_order_rate") g.max_order_rate = parse_number<double>(key, value);
  else if (key == "order_severity_boost") g.order_severity_boost = parse_number<double>(key, value);
  else if (key == "min_followup_days") g.min_followup_days = parse_number<int>(key, value);
  else if (key == "max_followup_days") g.max_followup_days = parse_number<int>(key, value);
  else if (key == "severity_step_sd") g.severity_step_sd = parse_number<double>(key, value);
  else if (key == "mean_visit_gap_days") g.mean_visit_gap_days = parse_number<double>(key, value);
  else if (key == "latent_shift") g.latent_shift = parse_number<double>(key, value);
  else if (key == "latent_spread") g.latent_spread = parse_number<double>(key, value);
  else if (key == "unknown_prob") g.unknown_prob = parse_number<double>(key, value);
  else if (key == "mortality_coef") g.mortality_coef = parse_number<double>(key, value);
  else if (key == "death_ramp") g.death_ramp = parse_number<double>(key, value);
  else if (key == "target_positive_rate") g.target_positive_rate = parse_number<double>(key, value);
  else if (key == "timeline_start") g.timeline_start = parse_date_value(key, value);
  else if (key == "timeline_end") g.timeline_end = parse_date_value(key, value);
  else if (key == "max_interval_days") g.max_interval_days = parse_number<int>(key, value);
  else if (key == "alive_followup_days") g.alive_followup_days = parse_number<int>(key, value);
  else if (key == "mode") mode = parse_mode_value(key, value);
  else if (key == "min_count") min_count = parse_number<std::int64_t>(key, value);
  else if (key == "dedup_within_order") dedup_within_order = parse_bool(key, value);
  else if (key == "corpus_before_split") corpus_before_split = parse_bool(key, value);
  else if (key == "algo") trainer = parse_trainer_value(key, value);
  else if (key == "dim") w2v.dim = glove.dim = parse_number<int>(key, value);
  else if (key == "window") w2v.window = parse_number<int>(key, value);
  else if (key == "negatives") w2v.negatives = parse_number<int>(key, value);
  else if (key == "epochs") w2v.epochs = parse_number<int>(key, value);
  else if (key == "lr") w2v.initial_lr = parse_number<double>(key, value);
  else if (key == "min_lr") w2v.min_lr = parse_number<double>(key, value);
  else if (key == "noise_exponent") w2v.noise_exponent = parse_number<double>(key, value);
  else if (key == "subsample") {
    if (trim(value) == "none") w2v.subsample_threshold.reset();
    else w2v.subsample_threshold = parse_number<double>(key, value);
  } else if (key == "dynamic_window") w2v.dynamic_window = parse_bool(key, value);
  else if (key == "cross_orders") w2v.cross_orders = parse_bool(key, value);
  else if (key == "deterministic") w2v.deterministic = glove.deterministic = parse_bool(key, value);
  else if (key == "glove_epochs") glove.epochs = parse_number<int>(key, value);
  else if (key == "glove_lr") glove.initial_lr = parse_number<double>(key, value);
  else if (key == "glove_x_max") glove.x_max = parse_number<double>(key, value);
  else if (key == "glove_alpha") glove.alpha = parse_number<double>(key, value);
  else if (key == "distance_weighting") distance_weighting = parse_bool(key, value);
  else if (key == "split_date") split_date = parse_date_value(key, value);
  else if (key == "window_days") window_days = parse_number<int>(key, value);
  else if (key == "horizon_days") horizon_days = g.horizon_days = parse_number<int>(key, value);
  else if (key == "dims") dims = parse_list<int>(value, [&](std::string_view v) { return parse_number<int>(key, v); });
  else if (key == "algos") trainers = parse_list<Trainer>(value, [&](std::string_view v) { return parse_trainer_value(key, v); });
  else if (key == "modes") modes = parse_list<TokenMode>(value, [&](std::string_view v) { return parse_mode_value(key, v); });
  else if (key == "aggregation") {
    auto a = parse_aggregation(trim(value));
    if (!a) throw ConfigError("bad aggregation '" + std::string(value) + "'");
    aggregation = *a;
  } else if (key == "bow_binary") bow_binary = parse_bool(key, value);
  else if (key == "svd_k") svd_k = parse_number<int>(key, value);
  else if (key == "search_draws") search_draws = parse_number<int>(key, value);
  else if (key == "folds") folds = parse_number<int>(key, value);
  else if (key == "logreg_tol") logreg.tol = parse_number<double>(key, value);
  else if (key == "model") model = std::string(trim(value));
  else if (key == "token") token = std::string(trim(value));
  else if (key == "neighbors_k") neighbors_k = parse_number<int>(key, value);
  else if (key == "tsne_top_k") tsne_top_k = parse_number<std::size_t>(key, value);
  else if (key == "perplexity") tsne.perplexity = parse_number<double>(key, value);
  else if (key == "tsne_iterations") tsne.iterations = parse_number<int>(key, value);
  else if (key == "tsne_learning_rate") tsne.learning_rate = parse_number<double>(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::load_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    set(std::string_view(line).substr(0, eq), std::string_view(line).substr(eq + 1));
  }
}

std::map<std::string, std::string> RunConfig::resolved() const {
  const auto& g = generator;
  std::map<std::string, std::string> m;
  m["seed"] = std::to_string(seed);
  m["n_patients"] = std::to_string(g.n_patients);
  m["n_panels"] = std::to_string(g.n_panels);
  m["n_classes"] = std::to_string(g.n_classes);
  m["min_codes_per_panel"] = std::to_string(g.min_codes_per_panel);
  m["max_codes_per_panel"] = std::to_string(g.max_codes_per_panel);
  m["numeric_panel_fraction"] = format_double(g.numeric_panel_fraction);
  m["min_order_rate"] = format_double(g.min_order_rate);
  m["max_order_rate"] = format_double(g.max_order_rate);
  m["order_severity_boost"] = format_double(g.order_severity_boost);
  m["min_followup_days"] = std::to_string(g.min_followup_days);
  m["max_followup_days"] = std::to_string(g.max_followup_days);
  m["severity_step_sd"] = format_double(g.severity_step_sd);
  m["mean_visit_gap_days"] = format_double(g.mean_visit_gap_days);
  m["latent_shift"] = format_double(g.latent_shift);
  m["latent_spread"] = format_double(g.latent_spread);
  m["unknown_prob"] = format_double(g.unknown_prob);
  m["mortality_coef"] = format_double(g.mortality_coef);
  m["death_ramp"] = format_double(g.death_ramp);
  m["target_positive_rate"] = format_double(g.target_positive_rate);
  m["timeline_start"] = format_date(g.timeline_start);
  m["timeline_end"] = format_date(g.timeline_end);
  m["max_interval_days"] = std::to_string(g.max_interval_days);
  m["alive_followup_days"] = std::to_string(g.alive_followup_days);
  m["mode"] = std::string(to_string(mode));
  m["min_count"] = std::to_string(min_count);
  m["dedup_within_order"] = dedup_within_order ? "true" : "false";
  m["corpus_before_split"] = corpus_before_split ? "true" : "false";
  m["algo"] = std::string(to_string(trainer));
  m["dim"] = std::to_string(w2v.dim);
  m["window"] = std::to_string(w2v.window);
  m["negatives"] = std::to_string(w2v.negatives);
  m["epochs"] = std::to_string(w2v.epochs);
  m["lr"] = format_double(w2v.initial_lr);
  m["min_lr"] = format_double(w2v.min_lr);
  m["noise_exponent"] = format_double(w2v.noise_exponent);
  m["subsample"] = w2v.subsample_threshold ? format_double(*w2v.subsample_threshold) : "none";
  m["dynamic_window"] = w2v.dynamic_window ? "true" : "false";
  m["cross_orders"] = w2v.cross_orders ? "true" : "false";
  m["deterministic"] = w2v.deterministic ? "true" : "false";
  m["glove_epochs"] = std::to_string(glove.epochs);
  m["glove_lr"] = format_double(glove.initial_lr);
  m["glove_x_max"] = format_double(glove.x_max);
  m["glove_alpha"] = format_double(glove.alpha);
  m["distance_weighting"] = distance_weighting ? "true" : "false";
  m["split_date"] = format_date(split_date);
  m["window_days"] = std::to_string(window_days);
  m["horizon_days"] = std::to_string(horizon_days);
  m["dims"] = join(dims, [](int d) { return std::to_string(d); });
  m["algos"] = join(trainers, [](Trainer t) { return std::string(to_string(t)); });
  m["modes"] = join(modes, [](TokenMode t) { return std::string(to_string(t)); });
  m["aggregation"] = std::string(to_string(aggregation));
  m["bow_binary"] = bow_binary ? "true" : "false";
  m["svd_k"] = std::to_string(svd_k);
  m["search_draws"] = std::to_string(search_draws);
  m["folds"] = std::to_string(folds);
  m["logreg_tol"] = format_double(logreg.tol);
  m["model"] = model;
  m["token"] = token;
  m["neighbors_k"] = std::to_string(neighbors_k);
  m["tsne_top_k"] = std::to_string(tsne_top_k);
  m["perplexity"] = format_double(tsne.perplexity);
  m["tsne_iterations"] = std::to_string(tsne.iterations);
  m["tsne_learning_rate"] = format_double(tsne.learning_rate);
  return m;
}

namespace artifacts {
std::string mode_slug(TokenMode mode) { return mode == TokenMode::LoincOnly ? "loinc" : "loincabn"; }
std::string vocab_file(TokenMode mode) { return "vocab-" + mode_slug(mode) + ".txt"; }
std::string sentences_file(TokenMode mode) { return "sentences-" + mode_slug(mode) + ".txt"; }
std::string model_file(Trainer t, TokenMode mode, int dim) {
  return "models/" + std::string(to_string(t)) + "-" + mode_slug(mode) + "-d" + std::to_string(dim) + ".txt";
}
}  // namespace artifacts

namespace {

EmbeddingModel train_embedding(Trainer trainer, std::span<const Sentence> sentences, const Vocabulary& vocab,
                               const CooccurrenceTable* cooc, const RunConfig& cfg, int dim, std::uint64_t seed) {
  if (trainer == Trainer::GloVe) {
    GloveHyperparams hp = cfg.glove;
    hp.dim = dim;
    hp.seed = seed;
    if (cooc) return train_glove(*cooc, vocab, hp);
    const auto table = build_cooccurrence(sentences, vocab, cfg.w2v.window, cfg.distance_weighting, cfg.w2v.cross_orders);
    return train_glove(table, vocab, hp);
  }
  W2vHyperparams hp = cfg.w2v;
  hp.dim = dim;
  hp.seed = seed;
  if (trainer == Trainer::SGNS) {
    hp.algorithm = W2vAlgorithm::SkipGram;
    return train_sgns(sentences, vocab, hp);
  }
  hp.algorithm = W2vAlgorithm::CBOW;
  return train_cbow(sentences, vocab, hp);
}

std::vector<int> labels_of(std::span<const CohortRecord> records) {
  std::vector<int> y;
  y.reserve(records.size());
  for (const auto& r : records) y.push_back(r.label_dead_90d ? 1 : 0);
  return y;
}

PredictionRow fit_and_score(std::string name, const Eigen::MatrixXd& x_train, std::span<const int> y_train,
                            const Eigen::MatrixXd& x_test, std::span<const int> y_test, const RunConfig& cfg) {
  const auto search = random_search_cv(x_train, y_train, SearchSpace{}, cfg.search_draws, cfg.folds,
                                       derive_seed(cfg.seed, "search-" + name), cfg.logreg);
  PredictionRow row;
  row.feature_set = std::move(name);
  row.best = search.best;
  row.report = evaluate(search.model, x_test, y_test, search.trace);
  return row;
}

}  // namespace

PredictionExperiment run_prediction_experiment(std::span<const LabEvent> events,
                                               std::span<const CohortRecord> records,
                                               const RunConfig& cfg, std::ostream* log) {
  std::vector<LabEvent> pre;
  for (const auto& e : events) {
    if (e.timestamp < cfg.split_date) pre.push_back(e);
  }
  if (pre.empty()) throw EmptyCorpus("no events before the split date " + format_date(cfg.split_date));

  std::vector<CohortRecord> train, test;
  for (const auto& r : records) {
    (r.prediction_date - cfg.window_days < cfg.split_date ? train : test).push_back(r);
  }
  const auto y_train = labels_of(train), y_test = labels_of(test);
  if (test.empty() || std::count(y_test.begin(), y_test.end(), 1) == 0 ||
      std::count(y_test.begin(), y_test.end(), 0) == 0) {
    throw EmptyTestSet("test split lacks a class");
  }

  PredictionExperiment exp;
  exp.n_train = train.size();
  exp.n_test = test.size();
  auto note = [&](const PredictionRow& row) {
    if (log) *log << row.feature_set << " auc=" << format_g6(row.report.roc_auc) << '\n';
  };

  for (TokenMode mode : cfg.modes) {
    const std::string slug = artifacts::mode_slug(mode);
    const Vocabulary vocab = build_vocabulary(pre, mode, cfg.min_count);
    const BowOptions bow_opts{cfg.bow_binary};
    const SparseMatrix bow_train = bow_matrix(train, vocab, bow_opts);
    const SparseMatrix bow_test = bow_matrix(test, vocab, bow_opts);

    {
      auto row = fit_and_score("BOW/" + slug, Eigen::MatrixXd(bow_train), y_train, Eigen::MatrixXd(bow_test), y_test, cfg);
      row.mode = mode;
      row.dim = static_cast<int>(vocab.size());
      note(row);
      exp.rows.push_back(std::move(row));
    }
    {
      const int k = std::min<int>(cfg.svd_k, static_cast<int>(std::min<Eigen::Index>(bow_train.rows(), bow_train.cols())));
      const auto svd = truncated_svd(bow_train, k, derive_seed(cfg.seed, "svd-" + slug));
      auto row = fit_and_score("SVD-" + std::to_string(k) + "/" + slug, svd.row_factors, y_train, svd.project(bow_test),
                               y_test, cfg);
      row.mode = mode;
      row.dim = k;
      note(row);
      exp.rows.push_back(std::move(row));
    }

    const auto sentences = build_sentences(pre, vocab, derive_seed(cfg.seed, "sentences-" + slug),
                                           SentenceOptions{cfg.dedup_within_order});
    std::optional<CooccurrenceTable> cooc;
    if (std::find(cfg.trainers.begin(), cfg.trainers.end(), Trainer::GloVe) != cfg.trainers.end()) {
      cooc = build_cooccurrence(sentences, vocab, cfg.w2v.window, cfg.distance_weighting, cfg.w2v.cross_orders);
    }
    for (Trainer trainer : cfg.trainers) {
      for (int dim : cfg.dims) {
        const std::string name = std::string(to_string(trainer)) + "-" + std::to_string(dim) + "/" + slug;
        const auto model = train_embedding(trainer, sentences, vocab, cooc ? &*cooc : nullptr, cfg, dim,
                                           derive_seed(cfg.seed, "train-" + name));
        const auto f_train = embedding_feature_matrix(train, model, mode, cfg.aggregation, {}, true);
        const auto f_test = embedding_feature_matrix(test, model, mode, cfg.aggregation, {}, true);
        auto row = fit_and_score(name, f_train.values, y_train, f_test.values, y_test, cfg);
        row.trainer = trainer;
        row.mode = mode;
        row.dim = dim;
        note(row);
        exp.rows.push_back(std::move(row));
      }
    }
  }
  return exp;
}

void write_comparison_csv(std::ostream& out, std::span<const PredictionRow> rows) {
  out << "feature_set,algorithm,dim,mode,roc_auc,average_precision,n_pos,n_neg,lambda,class_weight,cv_auc\n";
  for (const auto& r : rows) {
    out << r.feature_set << ',' << (r.trainer ? std::string(to_string(*r.trainer)) : r.feature_set.substr(0, 3)) << ','
        << r.dim << ',' << to_string(r.mode) << ',' << format_g6(r.report.roc_auc) << ','
        << format_g6(r.report.average_precision) << ',' << r.report.n_pos << ',' << r.report.n_neg << ','
        << format_g6(r.best.lambda) << ',' << to_string(r.best.class_weight) << ',' << format_g6(r.best.mean_cv_auc)
        << '\n';
  }
}

namespace {

class Manifest {
 public:
  explicit Manifest(fs::path out_dir) : out_dir_(std::move(out_dir)) {
    const auto path = out_dir_ / artifacts::kManifest;
    if (!fs::exists(path)) return;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
      const auto tab = line.find('\t');
      if (tab != std::string::npos) entries_[line.substr(0, tab)] = line.substr(tab + 1);
    }
  }

  void record_artifact(const std::string& rel) {
    entries_["artifact:" + rel] = file_fingerprint(out_dir_ / rel);
  }

  void record_config(std::string_view subcommand, const RunConfig& cfg) {
    for (const auto& [k, v] : cfg.resolved()) entries_["config:" + std::string(subcommand) + ":" + k] = v;
  }

  void save() const {
    std::string text;
    for (const auto& [k, v] : entries_) text += k + '\t' + v + '\n';
    write_file(out_dir_ / artifacts::kManifest, text);
  }

 private:
  fs::path out_dir_;
  std::map<std::string, std::string> entries_;
};

fs::path require(const fs::path& out_dir, const std::string& rel, const char* producer) {
  const auto path = out_dir / rel;
  if (!fs::exists(path)) {
    throw MissingArtifact(rel + " not found in " + out_dir.string() + "; run `" + producer + "` first");
  }
  return path;
}

std::vector<LabEvent> load_events(const fs::path& out_dir) {
  std::ifstream in(require(out_dir, artifacts::kEvents, "gen-cohort"));
  return parse_events(in, EventFormat::CSV);
}

Vocabulary load_vocab(const fs::path& out_dir, TokenMode mode) {
  std::ifstream in(require(out_dir, artifacts::vocab_file(mode), "build-corpus"));
  return Vocabulary::load(in);
}

std::string model_rel(const RunConfig& cfg) {
  return cfg.model.empty() ? artifacts::model_file(cfg.trainer, cfg.mode, cfg.w2v.dim) : cfg.model;
}

EmbeddingModel load_configured_model(const RunConfig& cfg) {
  const std::string rel = model_rel(cfg);
  const fs::path path = fs::path(rel).is_absolute() ? fs::path(rel) : cfg.out_dir / rel;
  if (!fs::exists(path)) throw MissingArtifact(rel + " not found; run `train` first");
  return load_model(path);
}

std::string report_stem(const std::string& model_path) { return fs::path(model_path).stem().string(); }

void cmd_gen_cohort(const RunConfig& cfg, Manifest& manifest) {
  GeneratorConfig g = cfg.generator;
  g.horizon_days = cfg.horizon_days;
  const auto cohort = generate_cohort(g, derive_seed(cfg.seed, "gen-cohort"));
  CohortOptions opts;
  opts.window_days = cfg.window_days;
  opts.horizon_days = cfg.horizon_days;
  opts.max_interval_days = g.max_interval_days;
  opts.alive_followup_days = g.alive_followup_days;
  const auto build = assign_prediction_dates(cohort.patients, cohort.events, opts, derive_seed(cfg.seed, "cohort"));

  std::ostringstream events, records, classes, survival;
  write_events(events, cohort.events, EventFormat::CSV);
  write_cohort_csv(records, build.records);
  write_class_table_csv(classes, cohort.panels);
  write_survival_csv(survival, survival_by_group(build.records, cohort.patients));
  write_file(cfg.out_dir / artifacts::kEvents, events.str());
  write_file(cfg.out_dir / artifacts::kCohort, records.str());
  write_file(cfg.out_dir / artifacts::kClasses, classes.str());
  write_file(cfg.out_dir / artifacts::kSurvival, survival.str());
  for (const char* a : {artifacts::kEvents, artifacts::kCohort, artifacts::kClasses, artifacts::kSurvival}) {
    manifest.record_artifact(a);
  }
  std::size_t positives = 0;
  for (const auto& r : build.records) positives += r.label_dead_90d ? 1 : 0;
  std::cout << "patients " << cohort.patients.size() << ", events " << cohort.events.size() << ", records "
            << build.records.size() << ", positives " << positives << " (rate "
            << format_g6(build.records.empty() ? 0.0 : static_cast<double>(positives) / build.records.size())
            << "), excluded alive " << build.excluded_alive_no_followup << ", excluded deceased "
            << build.excluded_deceased_no_encounter << '\n';
}

void cmd_build_corpus(const RunConfig& cfg, Manifest& manifest) {
  auto events = load_events(cfg.out_dir);
  if (cfg.corpus_before_split) {
    std::erase_if(events, [&](const LabEvent& e) { return !(e.timestamp < cfg.split_date); });
  }
  const auto vocab = build_vocabulary(events, cfg.mode, cfg.min_count);
  SentenceStats stats;
  const auto sentences = build_sentences(events, vocab, derive_seed(cfg.seed, "build-corpus"),
                                         SentenceOptions{cfg.dedup_within_order}, &stats);
  std::ostringstream v, s;
  vocab.save(v);
  write_sentences(s, sentences, vocab);
  write_file(cfg.out_dir / artifacts::vocab_file(cfg.mode), v.str());
  write_file(cfg.out_dir / artifacts::sentences_file(cfg.mode), s.str());
  manifest.record_artifact(artifacts::vocab_file(cfg.mode));
  manifest.record_artifact(artifacts::sentences_file(cfg.mode));
  std::cout << "vocabulary " << vocab.size() << ", sentences " << sentences.size() << ", oov dropped "
            << stats.oov_dropped << '\n';
}

void cmd_train(const RunConfig& cfg, Manifest& manifest) {
  const auto vocab = load_vocab(cfg.out_dir, cfg.mode);
  std::ifstream in(require(cfg.out_dir, artifacts::sentences_file(cfg.mode), "build-corpus"));
  const auto sentences = read_sentences(in, vocab);
  const auto model = train_embedding(cfg.trainer, sentences, vocab, nullptr, cfg, cfg.w2v.dim,
                                     derive_seed(cfg.seed, "train"));
  const std::string rel = model_rel(cfg);
  fs::create_directories((cfg.out_dir / rel).parent_path());
  save_model(model, cfg.out_dir / rel);
  manifest.record_artifact(rel);
  manifest.record_artifact(rel + ".meta");
  std::cout << "wrote " << rel << " (" << model.size() << " x " << model.dim() << ")\n";
}

void cmd_eval_ordinality(const RunConfig& cfg, Manifest& manifest) {
  const auto model = load_configured_model(cfg);
  const auto vocab = load_vocab(cfg.out_dir, cfg.mode);
  const auto tests = generate_ordinality_tests(vocab);
  const auto report = evaluate_ordinality(model, tests);
  std::ostringstream out;
  write_ordinality_report(out, report);
  const std::string rel = "reports/ordinality-" + report_stem(model_rel(cfg)) + ".csv";
  fs::create_directories(cfg.out_dir / "reports");
  write_file(cfg.out_dir / rel, out.str());
  manifest.record_artifact(rel);
  std::cout << "ordinality tests " << report.results.size() << ", failures " << report.failures << ", error rate "
            << format_g6(report.error_rate) << '\n';
}

void cmd_eval_predict(const RunConfig& cfg, Manifest& manifest) {
  const auto events = load_events(cfg.out_dir);
  std::ifstream in(require(cfg.out_dir, artifacts::kCohort, "gen-cohort"));
  const auto rows = read_cohort_csv(in);
  const auto records = attach_observation_events(rows, events, cfg.window_days);
  const auto exp = run_prediction_experiment(events, records, cfg, &std::cout);

  fs::create_directories(cfg.out_dir / "reports" / "curves");
  std::ostringstream table;
  write_comparison_csv(table, exp.rows);
  write_file(cfg.out_dir / "reports/predict-comparison.csv", table.str());
  manifest.record_artifact("reports/predict-comparison.csv");

  std::ostringstream trace;
  trace << "feature_set,draw,lambda,class_weight,mean_cv_auc\n";
  for (const auto& row : exp.rows) {
    for (std::size_t i = 0; i < row.report.trace.size(); ++i) {
      const auto& t = row.report.trace[i];
      trace << row.feature_set << ',' << i << ',' << format_g6(t.lambda) << ',' << to_string(t.class_weight) << ','
            << format_g6(t.mean_cv_auc) << '\n';
    }
    std::string stem = row.feature_set;
    std::replace(stem.begin(), stem.end(), '/', '-');
    std::ostringstream roc, pr;
    write_curve_csv(roc, row.report.roc, "fpr", "tpr");
    write_curve_csv(pr, row.report.pr, "recall", "precision");
    const std::string roc_rel = "reports/curves/" + stem + "-roc.csv", pr_rel = "reports/curves/" + stem + "-pr.csv";
    write_file(cfg.out_dir / roc_rel, roc.str());
    write_file(cfg.out_dir / pr_rel, pr.str());
    manifest.record_artifact(roc_rel);
    manifest.record_artifact(pr_rel);
  }
  write_file(cfg.out_dir / "reports/predict-search.csv", trace.str());
  manifest.record_artifact("reports/predict-search.csv");

  std::cout << "\ntrain " << exp.n_train << ", test " << exp.n_test << "\n";
  std::cout << "feature set                    ROC AUC    AP\n";
  for (const auto& row : exp.rows) {
    std::string name = row.feature_set;
    name.resize(std::max<std::size_t>(name.size(), 30), ' ');
    std::cout << name << ' ' << format_g6(row.report.roc_auc) << "   " << format_g6(row.report.average_precision)
              << '\n';
  }
}

void cmd_tsne(const RunConfig& cfg, Manifest& manifest) {
  const auto model = load_configured_model(cfg);
  const auto vocab = load_vocab(cfg.out_dir, cfg.mode);
  const auto subset = top_k_frequent(model, vocab, std::min(cfg.tsne_top_k, vocab.size()));
  TsneConfig tc = cfg.tsne;
  tc.seed = derive_seed(cfg.seed, "tsne");
  const auto result = tsne(subset.vectors, tc);
  ClassTable classes;
  if (fs::exists(cfg.out_dir / artifacts::kClasses)) {
    std::ifstream in(cfg.out_dir / artifacts::kClasses);
    classes = ClassTable::load_csv(in);
  }
  const std::string stem = "reports/tsne-" + report_stem(model_rel(cfg));
  fs::create_directories(cfg.out_dir / "reports");
  const std::map<std::string, std::string> meta = {
      {"perplexity", format_double(tc.perplexity)},  {"iterations", std::to_string(tc.iterations)},
      {"learning_rate", format_double(tc.learning_rate)}, {"early_exaggeration", format_double(tc.early_exaggeration)},
      {"initial_kl", format_g6(result.initial_kl)},  {"final_kl", format_g6(result.final_kl)},
      {"points", std::to_string(subset.tokens.size())}};
  emit_plot(result.coords, subset.tokens, classes, cfg.out_dir / (stem + ".csv"), cfg.out_dir / (stem + ".svg"), meta);
  manifest.record_artifact(stem + ".csv");
  manifest.record_artifact(stem + ".svg");
  std::cout << "t-SNE on " << subset.tokens.size() << " points, KL " << format_g6(result.initial_kl) << " -> "
            << format_g6(result.final_kl) << '\n';
}

void cmd_neighbors(const RunConfig& cfg, Manifest& manifest) {
  if (cfg.token.empty()) throw ConfigError("neighbors needs --token");
  const auto model = load_configured_model(cfg);
  const auto nn = nearest_neighbors(model, cfg.token, static_cast<std::size_t>(cfg.neighbors_k));
  std::ostringstream out;
  out << "rank,token,similarity\n";
  for (std::size_t i = 0; i < nn.size(); ++i) {
    out << i + 1 << ',' << nn[i].token << ',' << format_g6(nn[i].similarity) << '\n';
    std::cout << i + 1 << '\t' << nn[i].token << '\t' << format_g6(nn[i].similarity) << '\n';
  }
  std::string safe = cfg.token;
  std::replace(safe.begin(), safe.end(), '/', '-');
  const std::string rel = "reports/neighbors-" + report_stem(model_rel(cfg)) + "-" + safe + ".csv";
  fs::create_directories(cfg.out_dir / "reports");
  write_file(cfg.out_dir / rel, out.str());
  manifest.record_artifact(rel);
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Lab-test code embeddings: synthetic cohorts, training and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--out-dir", out_dir, "artifact directory")->capture_default_str();
  app.add_option("--seed", seed, "global seed");
  app.add_option("--set", overrides, "extra key=value setting (repeatable)");

  struct Flag {
    const char* name;
    const char* key;
    const char* help;
  };
  const std::map<std::string, std::vector<Flag>> commands = {
      {"gen-cohort",
       {{"--n-patients", "n_patients", "patients to simulate"},
        {"--n-panels", "n_panels", "lab panels"},
        {"--target-rate", "target_positive_rate", "90-day positive rate"}}},
      {"build-corpus",
       {{"--mode", "mode", "LoincOnly or LoincPlusAbnormality"},
        {"--min-count", "min_count", "vocabulary count threshold"},
        {"--before-split", "corpus_before_split", "keep only events before the split date"}}},
      {"train",
       {{"--mode", "mode", "token mode"},
        {"--algo", "algo", "sgns, cbow or glove"},
        {"--dim", "dim", "embedding dimension"},
        {"--window", "window", "context window"},
        {"--epochs", "epochs", "word2vec epochs"},
        {"--negatives", "negatives", "negative samples"},
        {"--model", "model", "output path inside the out dir"}}},
      {"eval-ordinality",
       {{"--mode", "mode", "token mode"}, {"--algo", "algo", "trainer"}, {"--dim", "dim", "dimension"},
        {"--model", "model", "model path"}}},
      {"eval-predict",
       {{"--dims", "dims", "comma-separated dimensions"},
        {"--algos", "algos", "comma-separated trainers"},
        {"--modes", "modes", "comma-separated token modes"},
        {"--search-draws", "search_draws", "random search draws"},
        {"--folds", "folds", "cross-validation folds"},
        {"--svd-k", "svd_k", "SVD rank"},
        {"--split-date", "split_date", "temporal split date"}}},
      {"tsne",
       {{"--mode", "mode", "token mode"}, {"--algo", "algo", "trainer"}, {"--dim", "dim", "dimension"},
        {"--model", "model", "model path"}, {"--perplexity", "perplexity", "perplexity"},
        {"--iterations", "tsne_iterations", "iterations"}, {"--top-k", "tsne_top_k", "most frequent tokens"}}},
      {"neighbors",
       {{"--mode", "mode", "token mode"}, {"--algo", "algo", "trainer"}, {"--dim", "dim", "dimension"},
        {"--model", "model", "model path"}, {"--token", "token", "query token"}, {"--k", "neighbors_k", "neighbors"}}},
  };
  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, flags] : commands) {
    auto* sub = app.add_subcommand(name);
    subs[name] = sub;
    for (const auto& f : flags) sub->add_option(f.name, values[name][f.key], f.help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    if (seed) cfg.seed = *seed;
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      cfg.set(std::string_view(kv).substr(0, eq), std::string_view(kv).substr(eq + 1));
    }
    std::string command;
    for (const auto& [name, sub] : subs) {
      if (sub->parsed()) command = name;
    }
    for (const auto& f : commands.at(command)) {
      if (subs[command]->count(f.name) > 0) cfg.set(f.key, values[command][f.key]);
    }
    cfg.out_dir = out_dir;
    cfg.generator.validate();
    fs::create_directories(cfg.out_dir);

    Manifest manifest(cfg.out_dir);
    if (command == "gen-cohort") cmd_gen_cohort(cfg, manifest);
    else if (command == "build-corpus") cmd_build_corpus(cfg, manifest);
    else if (command == "train") cmd_train(cfg, manifest);
    else if (command == "eval-ordinality") cmd_eval_ordinality(cfg, manifest);
    else if (command == "eval-predict") cmd_eval_predict(cfg, manifest);
    else if (command == "tsne") cmd_tsne(cfg, manifest);
    else if (command == "neighbors") cmd_neighbors(cfg, manifest);
    manifest.record_config(command, cfg);
    manifest.save();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "labemb: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace labemb
