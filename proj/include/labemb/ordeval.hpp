#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "labemb/corpus.hpp"
#include "labemb/embedding.hpp"

namespace labemb {

enum class OrdinalFamily { AbnormalFamily, LowFamily, HighFamily };

std::string_view to_string(OrdinalFamily family);

/// Expects S(anchor, near) > S(anchor, far) for tokens sharing one stem.
struct OrdinalityTest {
  std::string anchor;  // stem_N
  std::string near;    // stem_A / stem_L / stem_H
  std::string far;     // stem_AA / stem_LL / stem_HH
  OrdinalFamily family = OrdinalFamily::AbnormalFamily;

  std::string stem() const { return std::string(token_stem(anchor)); }
  friend bool operator==(const OrdinalityTest&, const OrdinalityTest&) = default;
};

/// One test per (stem, family) whose three tokens are all in the
/// vocabulary, ordered by stem then family. Throws WrongMode for LoincOnly.
std::vector<OrdinalityTest> generate_ordinality_tests(const Vocabulary& vocab);

struct OrdinalityResult {
  OrdinalityTest test;
  double sim_near = 0.0;
  double sim_far = 0.0;
  bool pass = false;
};

struct OrdinalityReport {
  std::vector<OrdinalityResult> results;
  double error_rate = 0.0;
  std::size_t failures = 0;
};

/// Cosine comparison per test; exact ties count as failures.
OrdinalityReport evaluate_ordinality(const EmbeddingModel& model,
                                     std::span<const OrdinalityTest> tests);

/// CSV `stem,family,sim_near,sim_far,pass` preceded by a comment header
/// describing the generation rule and followed by a summary comment line.
void write_ordinality_report(std::ostream& out, const OrdinalityReport& report);

}  // namespace labemb
