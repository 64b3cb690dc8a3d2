#include <doctest.h>

#include <sstream>

#include "labemb/error.hpp"
#include "labemb/ordeval.hpp"

using namespace labemb;

namespace {

Vocabulary vocab_of(std::vector<std::string> tokens, TokenMode mode = TokenMode::LoincPlusAbnormality) {
  std::vector<Vocabulary::Entry> e;
  for (auto& t : tokens) e.push_back({t, 1});
  return Vocabulary(mode, 1, e);
}

/// anchor at (1, 0); near and far at the given angles' cosines.
EmbeddingModel model_with(double sim_near, double sim_far) {
  RowMatrix m(3, 2);
  m << 1, 0, sim_near, std::sqrt(1 - sim_near * sim_near), sim_far, std::sqrt(1 - sim_far * sim_far);
  return EmbeddingModel({"777-3_N", "777-3_A", "777-3_AA"}, m);
}

}  // namespace

TEST_CASE("tests are generated from complete families") {
  const auto tests = generate_ordinality_tests(vocab_of({"777-3_N", "777-3_L", "777-3_LL"}));
  REQUIRE(tests.size() == 1);
  CHECK(tests[0] == OrdinalityTest{"777-3_N", "777-3_L", "777-3_LL", OrdinalFamily::LowFamily});
  CHECK(tests[0].stem() == "777-3");
}

TEST_CASE("incomplete families produce no test") {
  CHECK(generate_ordinality_tests(vocab_of({"777-3_N", "777-3_L", "777-3_H"})).empty());
}

TEST_CASE("a stem with both numeric families gets two tests in family order") {
  const auto tests = generate_ordinality_tests(
      vocab_of({"1-1_N", "1-1_L", "1-1_LL", "1-1_H", "1-1_HH", "0-5_N", "0-5_A", "0-5_AA"}));
  REQUIRE(tests.size() == 3);
  CHECK(tests[0].stem() == "0-5");
  CHECK(tests[0].family == OrdinalFamily::AbnormalFamily);
  CHECK(tests[1].family == OrdinalFamily::LowFamily);
  CHECK(tests[2].family == OrdinalFamily::HighFamily);
}

TEST_CASE("generation needs abnormality tokens") {
  CHECK_THROWS_AS(generate_ordinality_tests(vocab_of({"777-3"}, TokenMode::LoincOnly)), WrongMode);
}

TEST_CASE("pass and fail by cosine ordering") {
  const std::vector<OrdinalityTest> t = {{"777-3_N", "777-3_A", "777-3_AA", OrdinalFamily::AbnormalFamily}};
  CHECK(evaluate_ordinality(model_with(0.9, 0.2), t).results[0].pass);
  CHECK_FALSE(evaluate_ordinality(model_with(0.2, 0.9), t).results[0].pass);
  const auto tie = evaluate_ordinality(model_with(0.5, 0.5), t);
  CHECK_FALSE(tie.results[0].pass);
  CHECK(tie.error_rate == 1.0);
}

TEST_CASE("error rate is failures over tests") {
  const std::vector<OrdinalityTest> t(4, {"777-3_N", "777-3_A", "777-3_AA", OrdinalFamily::AbnormalFamily});
  auto report = evaluate_ordinality(model_with(0.9, 0.2), t);
  CHECK(report.error_rate == 0.0);
  // one failing test among four
  std::vector<OrdinalityTest> mixed = t;
  mixed[3] = {"777-3_N", "777-3_AA", "777-3_A", OrdinalFamily::AbnormalFamily};
  report = evaluate_ordinality(model_with(0.9, 0.2), mixed);
  CHECK(report.failures == 1);
  CHECK(report.error_rate == 0.25);
}

TEST_CASE("error rate ignores uniform rescaling") {
  const std::vector<OrdinalityTest> t = {{"777-3_N", "777-3_A", "777-3_AA", OrdinalFamily::AbnormalFamily}};
  const auto m = model_with(0.7, 0.3);
  const EmbeddingModel scaled(m.tokens(), m.vectors() * 12.0);
  CHECK(evaluate_ordinality(m, t).error_rate == evaluate_ordinality(scaled, t).error_rate);
}

TEST_CASE("evaluation errors") {
  CHECK_THROWS_AS(evaluate_ordinality(model_with(0.9, 0.2), {}), EmptyTestSet);
  const std::vector<OrdinalityTest> t = {{"9-9_N", "9-9_A", "9-9_AA", OrdinalFamily::AbnormalFamily}};
  CHECK_THROWS_AS(evaluate_ordinality(model_with(0.9, 0.2), t), UnknownToken);
}

TEST_CASE("report CSV layout") {
  const std::vector<OrdinalityTest> t = {{"777-3_N", "777-3_A", "777-3_AA", OrdinalFamily::AbnormalFamily}};
  std::ostringstream out;
  write_ordinality_report(out, evaluate_ordinality(model_with(0.9, 0.2), t));
  const auto text = out.str();
  CHECK(text.find("stem,family,sim_near,sim_far,pass\n") != std::string::npos);
  CHECK(text.find("777-3,") != std::string::npos);
  CHECK(text[0] == '#');
}
