#include <gtest/gtest.h>

#include "support.hpp"
#include "tdclean/baselines.hpp"
#include "tdclean/metrics.hpp"

using namespace tdclean;

namespace {

constexpr Status R = Status::Resolved;
constexpr Status U = Status::Unresolved;

}  // namespace

TEST(Confusion, CountsAgainstLabels) {
  auto c = confusion({R, R, U, U, R}, std::vector<Label>{Label::Positive, Label::Negative, Label::Positive,
                                                          Label::Negative, Label::Positive});
  EXPECT_EQ(c, (Confusion{2, 1, 1, 1}));
  EXPECT_EQ(c.total(), 5u);
  EXPECT_THROW(confusion({R}, std::vector<Status>{}), LengthMismatch);
}

TEST(Confusion, MatchesCountingOracle) {
  Rng rng(2);
  for (int round = 0; round < 50; ++round) {
    const std::size_t n = rng.below(200);
    std::vector<Status> p, t;
    std::size_t agree_r = 0, agree_u = 0;
    for (std::size_t i = 0; i < n; ++i) {
      p.push_back(rng.bernoulli(0.5) ? R : U);
      t.push_back(rng.bernoulli(0.5) ? R : U);
      agree_r += p.back() == R && t.back() == R;
      agree_u += p.back() == U && t.back() == U;
    }
    auto c = confusion(p, t);
    EXPECT_EQ(c.tp, agree_r);
    EXPECT_EQ(c.tn, agree_u);
    EXPECT_EQ(c.total(), n);
    EXPECT_EQ(c.tp + c.fp, static_cast<std::size_t>(std::count(p.begin(), p.end(), R)));
    EXPECT_EQ(c.tp + c.fn, static_cast<std::size_t>(std::count(t.begin(), t.end(), R)));
  }
}

TEST(Metrics, Formulas) {
  auto r = metrics(Confusion{25, 25, 25, 25});
  EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(*r.precision, 0.5);
  EXPECT_DOUBLE_EQ(*r.recall, 0.5);
  EXPECT_DOUBLE_EQ(*r.f1, 0.5);

  EXPECT_NEAR(*f1_score(0.826, 0.868), 0.8464793388429751, 1e-15);
  EXPECT_NEAR(*f1_score(0.862, 0.844), 0.852905041031653, 1e-15);
  EXPECT_FALSE(f1_score(0.0, 0.0));
  EXPECT_FALSE(f1_score(std::nullopt, 0.5));
  EXPECT_THROW(metrics(Confusion{}), EmptyEvaluation);
}

TEST(Metrics, UndefinedRatios) {
  auto none_predicted = metrics(Confusion{0, 10, 0, 5});
  EXPECT_FALSE(none_predicted.precision);
  EXPECT_DOUBLE_EQ(*none_predicted.recall, 0.0);
  EXPECT_FALSE(none_predicted.f1);
  auto no_positives = metrics(Confusion{0, 10, 3, 0});
  EXPECT_FALSE(no_positives.recall);
  EXPECT_DOUBLE_EQ(*no_positives.precision, 0.0);
}

TEST(Metrics, ConstantPredictors) {
  auto samples = testsupport::random_samples(200, 1);
  std::size_t pos = 0;
  for (const auto& s : samples) pos += s.label == Label::Positive;
  auto always = evaluate([](const TripleSample&) { return R; }, samples, "always");
  EXPECT_DOUBLE_EQ(*always.recall, 1.0);
  EXPECT_DOUBLE_EQ(*always.precision, static_cast<double>(pos) / 200.0);
  auto never = evaluate([](const TripleSample&) { return U; }, samples, "never");
  EXPECT_FALSE(never.precision);
  EXPECT_DOUBLE_EQ(*never.recall, 0.0);
  EXPECT_DOUBLE_EQ(never.accuracy, static_cast<double>(200 - pos) / 200.0);
  EXPECT_THROW(evaluate([](const TripleSample&) { return R; }, {}), EmptyEvaluation);
}

// Confusion matrices consistent with the reference precision / recall
// rows; the rendered percentages must match them.
TEST(Metrics, ReferenceRowsRenderAsExpected) {
  auto py = metrics(Confusion{3122, 3163, 658, 474});
  EXPECT_EQ(format_percent(py.accuracy), "84.7%");
  EXPECT_EQ(format_percent(py.precision), "82.6%");
  EXPECT_EQ(format_percent(py.recall), "86.8%");
  EXPECT_EQ(format_percent(py.f1), "84.7%");
  auto java = metrics(Confusion{2868, 2769, 461, 531});
  EXPECT_EQ(format_percent(java.accuracy), "85.0%");
  EXPECT_EQ(format_percent(java.precision), "86.2%");
  EXPECT_EQ(format_percent(java.recall), "84.4%");
  EXPECT_EQ(format_percent(java.f1), "85.3%");
}

TEST(Metrics, EvaluateTcmoOnFixture) {
  std::vector<TripleSample> test;
  auto add = [&](std::string cc, std::string td, std::string msg, Label l) {
    TripleSample s;
    s.code_change = std::move(cc);
    s.todo_comment = std::move(td);
    s.commit_msg = std::move(msg);
    s.label = l;
    test.push_back(s);
  };
  // 10 positives: 7 overlap, 3 do not; 10 negatives: 4 overlap, 6 do not
  for (int i = 0; i < 7; ++i) add("+cache.put(k)", "todo: cache", "speed up", Label::Positive);
  for (int i = 0; i < 3; ++i) add("+x = 1", "todo: cache", "speed up", Label::Positive);
  for (int i = 0; i < 4; ++i) add("+y = 2", "todo: retry", "retry later", Label::Negative);
  for (int i = 0; i < 6; ++i) add("+y = 2", "todo: retry", "bump", Label::Negative);
  auto r = evaluate([](const TripleSample& s) { return baselines::tcmo(s); }, test, "TCMO", "python");
  EXPECT_EQ(r.counts, (Confusion{7, 6, 4, 3}));
  EXPECT_DOUBLE_EQ(r.accuracy, 13.0 / 20.0);
  EXPECT_DOUBLE_EQ(*r.precision, 7.0 / 11.0);
  EXPECT_DOUBLE_EQ(*r.recall, 0.7);
  const auto table = format_table({r});
  EXPECT_NE(table.find("TCMO"), std::string::npos);
  EXPECT_NE(table.find("65.0%"), std::string::npos);
}

TEST(Format, Percent) {
  EXPECT_EQ(format_percent(std::nullopt), "n/a");
  EXPECT_EQ(format_percent(0.0), "0.0%");
  EXPECT_EQ(format_percent(1.0), "100.0%");
  EXPECT_EQ(format_percent(0.8465), "84.7%");
  EXPECT_EQ(format_percent(0.84649), "84.6%");
  EXPECT_EQ(format_percent(0.12345), "12.3%");
}

TEST(Format, JsonRecord) {
  auto r = metrics(Confusion{0, 10, 0, 5}, "TCO", "java");
  const auto line = to_record(r);
  EXPECT_NE(line.find("\"precision\":null"), std::string::npos);
  EXPECT_NE(line.find("\"method\":\"TCO\""), std::string::npos);
}
