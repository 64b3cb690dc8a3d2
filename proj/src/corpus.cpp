#include "labemb/corpus.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "labemb/error.hpp"
#include "labemb/random.hpp"
#include "labemb/util.hpp"

namespace labemb {

namespace {

constexpr std::string_view kAbnormalityLabels[] = {"N", "A", "AA", "L", "LL", "H", "HH", "U"};
constexpr std::string_view kCsvHeader = "patient_id,visit_id,order_id,timestamp,loinc,abnormality";

LabEvent make_event(std::size_t line, std::string_view patient, std::string_view visit,
                    std::string_view order, std::string_view timestamp, std::string_view loinc,
                    std::string_view abnormality) {
  if (patient.empty() || visit.empty() || order.empty()) {
    throw MalformedRecord(line, "empty identifier field");
  }
  if (loinc.empty()) throw MalformedRecord(line, "empty loinc code");
  if (loinc.find('_') != std::string_view::npos || loinc.find(' ') != std::string_view::npos) {
    throw MalformedRecord(line, "loinc code contains '_' or a space");
  }
  auto date = parse_date(timestamp);
  if (!date) throw MalformedRecord(line, "bad timestamp '" + std::string(timestamp) + "'");
  auto abn = parse_abnormality(abnormality);
  if (!abn) throw UnknownAbnormality(line, std::string(abnormality));
  return LabEvent{std::string(patient), std::string(visit), std::string(order), *date,
                  std::string(loinc), *abn};
}

}  // namespace

std::string_view to_string(Abnormality a) { return kAbnormalityLabels[static_cast<int>(a)]; }

std::optional<Abnormality> parse_abnormality(std::string_view text) {
  for (Abnormality a : kAllAbnormalities) {
    if (to_string(a) == text) return a;
  }
  return std::nullopt;
}

std::string_view to_string(TokenMode mode) {
  return mode == TokenMode::LoincOnly ? "LoincOnly" : "LoincPlusAbnormality";
}

std::optional<TokenMode> parse_token_mode(std::string_view text) {
  if (text == "LoincOnly" || text == "loinc") return TokenMode::LoincOnly;
  if (text == "LoincPlusAbnormality" || text == "loinc+abn") return TokenMode::LoincPlusAbnormality;
  return std::nullopt;
}

std::vector<LabEvent> parse_events(std::istream& in, EventFormat format) {
  std::vector<LabEvent> events;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view text = line;
    if (!text.empty() && text.back() == '\r') text.remove_suffix(1);
    if (trim(text).empty()) continue;
    if (format == EventFormat::CSV) {
      if (!header_seen) {
        if (text != kCsvHeader) throw MalformedRecord(lineno, "expected header '" + std::string(kCsvHeader) + "'");
        header_seen = true;
        continue;
      }
      auto fields = split(text, ',');
      if (fields.size() != 6) {
        throw MalformedRecord(lineno, "expected 6 fields, got " + std::to_string(fields.size()));
      }
      events.push_back(make_event(lineno, fields[0], fields[1], fields[2], fields[3], fields[4],
                                  fields[5]));
    } else {
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(text);
      } catch (const nlohmann::json::parse_error& e) {
        throw MalformedRecord(lineno, std::string("invalid JSON: ") + e.what());
      }
      if (!obj.is_object()) throw MalformedRecord(lineno, "expected a JSON object");
      auto field = [&](const char* name) -> std::string {
        auto it = obj.find(name);
        if (it == obj.end() || !it->is_string()) {
          throw MalformedRecord(lineno, std::string("missing string field '") + name + "'");
        }
        return it->get<std::string>();
      };
      events.push_back(make_event(lineno, field("patient_id"), field("visit_id"),
                                  field("order_id"), field("timestamp"), field("loinc"),
                                  field("abnormality")));
    }
  }
  return events;
}

void write_events(std::ostream& out, std::span<const LabEvent> events, EventFormat format) {
  if (format == EventFormat::CSV) {
    out << kCsvHeader << '\n';
    for (const auto& e : events) {
      out << e.patient_id << ',' << e.visit_id << ',' << e.order_id << ','
          << format_date(e.timestamp) << ',' << e.loinc << ',' << to_string(e.abnormality) << '\n';
    }
    return;
  }
  for (const auto& e : events) {
    nlohmann::ordered_json obj;
    obj["patient_id"] = e.patient_id;
    obj["visit_id"] = e.visit_id;
    obj["order_id"] = e.order_id;
    obj["timestamp"] = format_date(e.timestamp);
    obj["loinc"] = e.loinc;
    obj["abnormality"] = std::string(to_string(e.abnormality));
    out << obj.dump() << '\n';
  }
}

std::string make_token(std::string_view loinc, Abnormality abnormality, TokenMode mode) {
  std::string token(loinc);
  if (mode == TokenMode::LoincPlusAbnormality) {
    token += '_';
    token += to_string(abnormality);
  }
  return token;
}

std::string_view token_stem(std::string_view token) {
  return token.substr(0, token.find('_'));
}

Vocabulary::Vocabulary(TokenMode mode, std::int64_t min_count, std::vector<Entry> entries)
    : mode_(mode), min_count_(min_count), entries_(std::move(entries)) {
  if (min_count_ < 1) throw InvalidArgument("min_count must be >= 1");
  std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.token < b.token;
  });
  index_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.count < min_count_) {
      throw InvalidArgument("token '" + e.token + "' has count below min_count");
    }
    if (e.token.empty() || e.token.find_first_of(" \t\n") != std::string::npos) {
      throw InvalidArgument("token '" + e.token + "' is empty or contains whitespace");
    }
    if (!index_.emplace(e.token, static_cast<std::int32_t>(i)).second) {
      throw InvalidArgument("duplicate token '" + e.token + "'");
    }
  }
}

std::optional<std::int32_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::int64_t Vocabulary::total_count() const {
  std::int64_t total = 0;
  for (const auto& e : entries_) total += e.count;
  return total;
}

std::string Vocabulary::fingerprint() const {
  std::ostringstream ss;
  save(ss);
  return hex64(fnv1a64(ss.str()));
}

void Vocabulary::save(std::ostream& out) const {
  out << "#mode=" << to_string(mode_) << " min_count=" << min_count_ << '\n';
  for (const auto& e : entries_) out << e.token << ' ' << e.count << '\n';
}

Vocabulary Vocabulary::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(0, "empty vocabulary file");
  std::istringstream header(line);
  std::string mode_field, count_field;
  header >> mode_field >> count_field;
  if (mode_field.rfind("#mode=", 0) != 0 || count_field.rfind("min_count=", 0) != 0) {
    throw FormatError(0, "bad vocabulary header '" + line + "'");
  }
  auto mode = parse_token_mode(mode_field.substr(6));
  if (!mode) throw FormatError(0, "unknown token mode '" + mode_field.substr(6) + "'");
  std::int64_t min_count = 0;
  try {
    min_count = std::stoll(count_field.substr(10));
  } catch (const std::exception&) {
    throw FormatError(0, "bad min_count");
  }
  std::vector<Entry> entries;
  std::size_t offset = line.size() + 1;
  while (std::getline(in, line)) {
    if (!line.empty()) {
      std::istringstream ls(line);
      Entry e;
      if (!(ls >> e.token >> e.count)) throw FormatError(offset, "bad vocabulary line '" + line + "'");
      entries.push_back(std::move(e));
    }
    offset += line.size() + 1;
  }
  return Vocabulary(*mode, min_count, std::move(entries));
}

Vocabulary build_vocabulary(std::span<const LabEvent> events, TokenMode mode,
                            std::int64_t min_count) {
  if (min_count < 1) throw InvalidArgument("min_count must be >= 1");
  std::unordered_map<std::string, std::int64_t> counts;
  for (const auto& e : events) ++counts[make_token(e.loinc, e.abnormality, mode)];
  std::vector<Vocabulary::Entry> kept;
  for (auto& [token, count] : counts) {
    if (count >= min_count) kept.push_back({token, count});
  }
  if (kept.empty()) throw EmptyVocabulary("no token occurs at least " + std::to_string(min_count) + " times");
  return Vocabulary(mode, min_count, std::move(kept));
}

std::vector<Sentence> build_sentences(std::span<const LabEvent> events, const Vocabulary& vocab,
                                      std::uint64_t seed, const SentenceOptions& options,
                                      SentenceStats* stats) {
  struct Order {
    Date first;
    std::string order_id;
    std::vector<std::int32_t> ids;
  };
  struct Visit {
    std::string visit_id;
    std::map<std::string, std::size_t> order_slots;
    std::vector<Order> orders;
  };

  SentenceStats local;
  std::map<std::pair<std::string, std::string>, std::size_t> visit_slot;
  std::vector<Visit> visits;
  for (const auto& e : events) {
    auto key = std::make_pair(e.patient_id, e.visit_id);
    auto [vit, inserted] = visit_slot.try_emplace(key, visits.size());
    if (inserted) visits.push_back(Visit{e.visit_id, {}, {}});
    Visit& visit = visits[vit->second];
    auto [oit, new_order] = visit.order_slots.try_emplace(e.order_id, visit.orders.size());
    if (new_order) visit.orders.push_back(Order{e.timestamp, e.order_id, {}});
    Order& order = visit.orders[oit->second];
    order.first = std::min(order.first, e.timestamp);
    auto id = vocab.find(make_token(e.loinc, e.abnormality, vocab.mode()));
    if (!id) {
      ++local.oov_dropped;
      continue;
    }
    if (options.dedup_within_order &&
        std::find(order.ids.begin(), order.ids.end(), *id) != order.ids.end()) {
      continue;
    }
    order.ids.push_back(*id);
  }

  Rng rng(derive_seed(seed, "sentences"));
  std::vector<Sentence> sentences;
  std::int64_t visit_index = 0;
  for (auto& visit : visits) {
    std::stable_sort(visit.orders.begin(), visit.orders.end(), [](const Order& a, const Order& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.order_id < b.order_id;
    });
    bool any = false;
    for (auto& order : visit.orders) {
      ++local.orders;
      if (order.ids.empty()) {
        ++local.empty_orders;
        continue;
      }
      rng.shuffle(std::span<std::int32_t>(order.ids));
      sentences.push_back(Sentence{std::move(order.ids), visit.visit_id, visit_index});
      any = true;
    }
    if (any) ++visit_index;
  }
  if (stats) *stats = local;
  return sentences;
}

std::vector<std::vector<std::int32_t>> context_units(std::span<const Sentence> sentences,
                                                     bool cross_orders) {
  std::vector<std::vector<std::int32_t>> units;
  units.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto& s = sentences[i];
    if (cross_orders && i > 0 && sentences[i - 1].visit_index == s.visit_index) {
      units.back().insert(units.back().end(), s.token_ids.begin(), s.token_ids.end());
    } else {
      units.push_back(s.token_ids);
    }
  }
  return units;
}

std::string corpus_fingerprint(std::span<const Sentence> sentences) {
  std::uint64_t h = fnv1a64("");
  for (const auto& s : sentences) {
    h = fnv1a64(std::to_string(s.visit_index), h);
    for (auto id : s.token_ids) h = fnv1a64(std::to_string(id) + ",", h);
    h = fnv1a64(";", h);
  }
  return hex64(h);
}

void write_sentences(std::ostream& out, std::span<const Sentence> sentences,
                     const Vocabulary& vocab) {
  for (const auto& s : sentences) {
    out << s.visit_index << '\t' << s.visit_id << '\t';
    for (std::size_t i = 0; i < s.token_ids.size(); ++i) {
      if (i) out << ' ';
      out << vocab.token(static_cast<std::size_t>(s.token_ids[i]));
    }
    out << '\n';
  }
}

std::vector<Sentence> read_sentences(std::istream& in, const Vocabulary& vocab) {
  std::vector<Sentence> sentences;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 3) throw MalformedRecord(lineno, "expected 3 tab-separated fields");
    Sentence s;
    try {
      s.visit_index = std::stoll(std::string(fields[0]));
    } catch (const std::exception&) {
      throw MalformedRecord(lineno, "bad visit index");
    }
    s.visit_id = std::string(fields[1]);
    for (auto tok : split(fields[2], ' ')) {
      if (tok.empty()) continue;
      auto id = vocab.find(tok);
      if (!id) throw MalformedRecord(lineno, "token '" + std::string(tok) + "' not in vocabulary");
      s.token_ids.push_back(*id);
    }
    if (s.token_ids.empty()) throw MalformedRecord(lineno, "empty sentence");
    sentences.push_back(std::move(s));
  }
  return sentences;
}

}  // namespace labemb
