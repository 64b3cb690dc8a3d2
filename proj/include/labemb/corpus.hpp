#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "labemb/date.hpp"

namespace labemb {

/// Result-abnormality flag attached to a lab result.
enum class Abnormality : std::uint8_t { N, A, AA, L, LL, H, HH, U };

inline constexpr Abnormality kAllAbnormalities[] = {
    Abnormality::N, Abnormality::A, Abnormality::AA, Abnormality::L,
    Abnormality::LL, Abnormality::H, Abnormality::HH, Abnormality::U};

std::string_view to_string(Abnormality a);
std::optional<Abnormality> parse_abnormality(std::string_view text);

struct LabEvent {
  std::string patient_id;
  std::string visit_id;
  std::string order_id;
  Date timestamp;
  std::string loinc;
  Abnormality abnormality = Abnormality::N;

  friend bool operator==(const LabEvent&, const LabEvent&) = default;
};

enum class EventFormat { CSV, JSONL };

/// Reads events in input order. Throws MalformedRecord or UnknownAbnormality
/// carrying the 1-based line number of the offending record.
std::vector<LabEvent> parse_events(std::istream& in, EventFormat format);
void write_events(std::ostream& out, std::span<const LabEvent> events, EventFormat format);

enum class TokenMode { LoincOnly, LoincPlusAbnormality };

std::string_view to_string(TokenMode mode);
std::optional<TokenMode> parse_token_mode(std::string_view text);

std::string make_token(std::string_view loinc, Abnormality abnormality, TokenMode mode);

/// LOINC stem of a token (text before the abnormality separator).
std::string_view token_stem(std::string_view token);

/// Token index with occurrence counts. Entries are ordered by descending
/// count, ties lexicographic; indices are dense and follow that order.
class Vocabulary {
 public:
  struct Entry {
    std::string token;
    std::int64_t count = 0;
  };

  Vocabulary() = default;
  /// Entries may arrive in any order; they are sorted here. Throws
  /// InvalidArgument on duplicates or counts below `min_count`.
  Vocabulary(TokenMode mode, std::int64_t min_count, std::vector<Entry> entries);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  TokenMode mode() const { return mode_; }
  std::int64_t min_count() const { return min_count_; }

  const std::string& token(std::size_t i) const { return entries_[i].token; }
  std::int64_t count(std::size_t i) const { return entries_[i].count; }
  const std::vector<Entry>& entries() const { return entries_; }

  std::optional<std::int32_t> find(std::string_view token) const;
  std::int64_t total_count() const;

  /// Hash of mode, min_count and all entries.
  std::string fingerprint() const;

  void save(std::ostream& out) const;
  static Vocabulary load(std::istream& in);

 private:
  TokenMode mode_ = TokenMode::LoincPlusAbnormality;
  std::int64_t min_count_ = 1;
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::int32_t> index_;
};

/// Throws EmptyVocabulary when nothing reaches `min_count`.
Vocabulary build_vocabulary(std::span<const LabEvent> events, TokenMode mode,
                            std::int64_t min_count);

/// One lab order after shuffling. `visit_index` is a dense ordinal of the
/// (patient, visit) pair so visit boundaries survive opaque visit ids.
struct Sentence {
  std::vector<std::int32_t> token_ids;
  std::string visit_id;
  std::int64_t visit_index = 0;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct SentenceOptions {
  bool dedup_within_order = false;
};

struct SentenceStats {
  std::size_t orders = 0;
  std::size_t oov_dropped = 0;
  std::size_t empty_orders = 0;
};

std::vector<Sentence> build_sentences(std::span<const LabEvent> events, const Vocabulary& vocab,
                                      std::uint64_t seed, const SentenceOptions& options = {},
                                      SentenceStats* stats = nullptr);

/// Token sequences over which context windows are taken: one per sentence,
/// or one per visit when windows may cross orders.
std::vector<std::vector<std::int32_t>> context_units(std::span<const Sentence> sentences,
                                                     bool cross_orders);

/// Hash of the sentence list, recorded in model metadata.
std::string corpus_fingerprint(std::span<const Sentence> sentences);

void write_sentences(std::ostream& out, std::span<const Sentence> sentences,
                     const Vocabulary& vocab);
std::vector<Sentence> read_sentences(std::istream& in, const Vocabulary& vocab);

}  // namespace labemb
