#include "labemb/ordeval.hpp"

#include <map>
#include <ostream>
#include <set>

#include "labemb/embedstore.hpp"
#include "labemb/error.hpp"
#include "labemb/util.hpp"

namespace labemb {

std::string_view to_string(OrdinalFamily family) {
  switch (family) {
    case OrdinalFamily::AbnormalFamily: return "AbnormalFamily";
    case OrdinalFamily::LowFamily: return "LowFamily";
    case OrdinalFamily::HighFamily: return "HighFamily";
  }
  return "?";
}

std::vector<OrdinalityTest> generate_ordinality_tests(const Vocabulary& vocab) {
  if (vocab.mode() != TokenMode::LoincPlusAbnormality) {
    throw WrongMode("ordinality tests need a LoincPlusAbnormality vocabulary");
  }
  struct Grades {
    Abnormality near, far;
    OrdinalFamily family;
  };
  constexpr Grades kFamilies[] = {
      {Abnormality::A, Abnormality::AA, OrdinalFamily::AbnormalFamily},
      {Abnormality::L, Abnormality::LL, OrdinalFamily::LowFamily},
      {Abnormality::H, Abnormality::HH, OrdinalFamily::HighFamily},
  };
  std::set<std::string> stems;
  for (const auto& e : vocab.entries()) stems.emplace(token_stem(e.token));
  std::vector<OrdinalityTest> tests;
  for (const auto& stem : stems) {
    const std::string anchor = make_token(stem, Abnormality::N, vocab.mode());
    if (!vocab.find(anchor)) continue;
    for (const auto& g : kFamilies) {
      std::string near = make_token(stem, g.near, vocab.mode());
      std::string far = make_token(stem, g.far, vocab.mode());
      if (vocab.find(near) && vocab.find(far)) {
        tests.push_back({anchor, std::move(near), std::move(far), g.family});
      }
    }
  }
  return tests;
}

OrdinalityReport evaluate_ordinality(const EmbeddingModel& model,
                                     std::span<const OrdinalityTest> tests) {
  if (tests.empty()) throw EmptyTestSet("no ordinality tests to evaluate");
  auto row = [&](const std::string& token) {
    auto id = model.find(token);
    if (!id) throw UnknownToken("token '" + token + "' not in model");
    return model.row(static_cast<std::size_t>(*id));
  };
  OrdinalityReport report;
  for (const auto& t : tests) {
    OrdinalityResult r{t, 0.0, 0.0, false};
    auto anchor = row(t.anchor);
    r.sim_near = cosine_similarity(anchor, row(t.near));
    r.sim_far = cosine_similarity(anchor, row(t.far));
    r.pass = r.sim_near > r.sim_far;
    if (!r.pass) ++report.failures;
    report.results.push_back(std::move(r));
  }
  report.error_rate = static_cast<double>(report.failures) / static_cast<double>(tests.size());
  return report;
}

void write_ordinality_report(std::ostream& out, const OrdinalityReport& report) {
  out << "# one test per (stem, family) with N, single and double grade present; "
         "pass iff cos(N, single) > cos(N, double), ties fail\n";
  out << "stem,family,sim_near,sim_far,pass\n";
  for (const auto& r : report.results) {
    out << r.test.stem() << ',' << to_string(r.test.family) << ',' << format_g6(r.sim_near) << ','
        << format_g6(r.sim_far) << ',' << (r.pass ? 1 : 0) << '\n';
  }
  out << "# tests=" << report.results.size() << " failures=" << report.failures
      << " error_rate=" << format_g6(report.error_rate) << '\n';
}

}  // namespace labemb
