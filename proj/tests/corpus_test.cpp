#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "support.hpp"
#include "tdclean/corpus.hpp"

using namespace tdclean;

namespace {

std::string sample_key(const TripleSample& s) { return s.commit_id + "|" + s.todo_comment; }

}  // namespace

TEST(TodoCommits, KeepsDiffsMentioningTodo) {
  Rng rng(11);
  std::vector<RawCommit> commits;
  std::size_t expected = 0;
  for (int i = 0; i < 100; ++i) {
    const bool has = i % 100 < 37;
    static const char* kSpell[] = {"TODO", "todo", "ToDo", "tOdO"};
    std::string diff = "--- a/f\n+++ b/f\n@@ -1 +1 @@\n-x\n+y  # " +
                       (has ? std::string(kSpell[rng.below(4)]) + " later" : std::string("note")) + "\n";
    commits.push_back({std::to_string(i), "m", diff, "r"});
    expected += has;
  }
  auto kept = identify_todo_commits(commits);
  EXPECT_EQ(kept.size(), 37u);
  EXPECT_EQ(expected, 37u);
  for (const auto& c : kept) EXPECT_LT(std::stoi(c.commit_id), 37);
}

TEST(Labeling, TotalOverLineKinds) {
  CodeChange cc{{}, "+x"};
  NormalizedMessage msg{"m"};
  TodoComment t;
  t.text = "todo";
  t.line.kind = LineKind::Removed;
  EXPECT_EQ(label_triple(t, cc, msg)->label, Label::Positive);
  t.line.kind = LineKind::Context;
  EXPECT_EQ(label_triple(t, cc, msg)->label, Label::Negative);
  t.line.kind = LineKind::Added;
  EXPECT_FALSE(label_triple(t, cc, msg));
}

TEST(Labeling, DropsEmptyMessage) {
  RawCommit c{"abc", "   ", "--- a/f\n+++ b/f\n@@ -1,2 +0,0 @@\n-# TODO x\n-a\n", "r"};
  auto r = build_samples({c}, Language::Python);
  EXPECT_TRUE(r.samples.empty());
  EXPECT_EQ(r.counters.empty_message, 1u);
}

TEST(Labeling, DropsEmptyCodeChange) {
  RawCommit c{"abc", "Remove note", "--- a/f\n+++ b/f\n@@ -1,2 +0,0 @@\n-# TODO x\n-\n", "r"};
  auto r = build_samples({c}, Language::Python);
  EXPECT_TRUE(r.samples.empty());
  EXPECT_EQ(r.counters.empty_code_change, 1u);
}

TEST(Labeling, CountersAddUp) {
  const auto cases = testsupport::load_label_cases();
  std::vector<RawCommit> commits;
  for (const auto& c : cases) {
    if (c.lang == "python") commits.push_back({"c" + c.name, "Update " + c.name, c.diff, "fx"});
  }
  auto r = build_samples(commits, Language::Python);
  const auto& k = r.counters;
  EXPECT_EQ(k.commits, commits.size());
  EXPECT_EQ(k.todo_commits, k.parse_failures + k.oversized + k.no_todo_comment + k.multiple_todos +
                                k.unassociated + k.added_todo + k.empty_code_change + k.empty_message +
                                k.positives + k.negatives);
  EXPECT_EQ(r.samples.size(), k.positives + k.negatives);
}

TEST(Split, SizesFollowTenPercentRule) {
  const struct {
    std::size_t n, train, val;
  } cases[] = {{10, 8, 1}, {15, 13, 1}, {16, 12, 2}, {19, 15, 2}, {100, 80, 10}, {105, 85, 10}, {999, 799, 100}};
  for (const auto& c : cases) {
    auto split = split_dataset(testsupport::random_samples(c.n, c.n), 42);
    EXPECT_EQ(split.train.size(), c.train) << c.n;
    EXPECT_EQ(split.val.size(), c.val) << c.n;
    EXPECT_EQ(split.test.size(), c.val) << c.n;
  }
  auto s = split_dataset(testsupport::random_samples(100, 1), 3);
  EXPECT_EQ(s.train.size(), 80u);
  s = split_dataset(testsupport::random_samples(101, 1), 3);
  EXPECT_EQ(s.train.size(), 81u);
  EXPECT_EQ(s.val.size(), 10u);
  EXPECT_EQ(s.test.size(), 10u);
}

TEST(Split, DisjointCoverAndDeterministic) {
  auto samples = testsupport::random_samples(250, 5);
  auto a = split_dataset(samples, 9);
  auto b = split_dataset(samples, 9);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  EXPECT_EQ(a.test, b.test);
  std::multiset<std::string> all;
  for (const auto* part : {&a.train, &a.val, &a.test}) {
    for (const auto& s : *part) all.insert(sample_key(s));
  }
  std::multiset<std::string> orig;
  for (const auto& s : samples) orig.insert(sample_key(s));
  EXPECT_EQ(all, orig);
  auto c = split_dataset(samples, 10);
  EXPECT_NE(a.train, c.train);
}

TEST(Split, TooFewSamples) {
  EXPECT_THROW(split_dataset(testsupport::random_samples(9, 1), 1), TooFewSamples);
  EXPECT_THROW(split_dataset({}, 1), TooFewSamples);
}

TEST(CorpusFile, RoundTripsRandomSamples) {
  auto samples = testsupport::random_samples(1000, 17);
  samples[0].todo_comment = "todo: unicode \xc3\xa9 and \"quotes\" and \\ backslash\ttab";
  samples[1].code_change = "+line one\n-line two\n \n";
  std::stringstream io;
  write_corpus(io, samples);
  auto back = read_corpus(io);
  EXPECT_EQ(back, samples);
}

TEST(CorpusFile, EmptyRoundTrip) {
  std::stringstream io;
  write_corpus(io, {});
  EXPECT_TRUE(read_corpus(io).empty());
}

TEST(CorpusFile, FileRoundTrip) {
  testsupport::TempDir tmp;
  auto samples = testsupport::random_samples(20, 2);
  write_corpus(samples, tmp.sub("c.jsonl"));
  EXPECT_EQ(read_corpus(tmp.sub("c.jsonl")), samples);
  EXPECT_THROW(read_corpus(tmp.sub("missing.jsonl")), IoFailure);
}

TEST(CorpusFile, SchemaViolations) {
  auto line = to_record(testsupport::random_samples(1, 3)[0]);
  auto without_label = line;
  auto pos = without_label.find(",\"label\"");
  auto end = without_label.find(",\"todo_line_kind\"");
  without_label.erase(pos, end - pos);
  std::stringstream a(line + "\n" + without_label + "\n");
  try {
    read_corpus(a);
    FAIL() << "expected SchemaViolation";
  } catch (const SchemaViolation& e) {
    EXPECT_EQ(e.line_no(), 2u);
  }
  std::stringstream b("not json\n");
  EXPECT_THROW(read_corpus(b), SchemaViolation);
  std::stringstream c("[1,2]\n");
  EXPECT_THROW(read_corpus(c), SchemaViolation);
  std::stringstream d(
      R"({"repo":"r","commit_id":"c","todo_comment":"t","code_change":"+x","commit_msg":"m","label":"positive","todo_line_kind":"context"})"
      "\n");
  EXPECT_THROW(read_corpus(d), SchemaViolation);
}

TEST(CommitFile, RoundTrip) {
  std::vector<RawCommit> commits = {{"a1", "msg\n\nbody", "--- a/x\n+++ b/x\n", "repo"},
                                    {"b2", "", "", "repo"}};
  std::stringstream io;
  for (const auto& c : commits) io << to_record(c) << "\n";
  EXPECT_EQ(read_commits(io), commits);
}

TEST(ManualCheck, DrawsRequestedCounts) {
  auto samples = testsupport::random_samples(600, 8);
  auto picked = sample_for_manual_check(samples, 100, 100, 1);
  ASSERT_EQ(picked.size(), 200u);
  std::set<std::string> keys;
  for (std::size_t i = 0; i < picked.size(); ++i) {
    EXPECT_EQ(picked[i].label, i < 100 ? Label::Positive : Label::Negative);
    keys.insert(sample_key(picked[i]));
  }
  EXPECT_EQ(keys.size(), 200u);
  EXPECT_TRUE(sample_for_manual_check(samples, 0, 0, 1).empty());
}

TEST(ManualCheck, StableForSeed) {
  auto samples = testsupport::random_samples(50, 8);
  EXPECT_EQ(sample_for_manual_check(samples, 5, 5, 4), sample_for_manual_check(samples, 5, 5, 4));
}

TEST(ManualCheck, Insufficient) {
  auto samples = testsupport::random_samples(10, 8);
  EXPECT_THROW(sample_for_manual_check(samples, 11, 0, 1), Insufficient);
  EXPECT_THROW(sample_for_manual_check(samples, 0, 11, 1), Insufficient);
}

TEST(ManualCheck, ReportListsEverySample) {
  auto picked = sample_for_manual_check(testsupport::random_samples(40, 8), 2, 3, 1);
  std::ostringstream os;
  write_manual_check_report(os, picked);
  const auto s = os.str();
  std::size_t n = 0;
  for (auto p = s.find("=== sample"); p != std::string::npos; p = s.find("=== sample", p + 1)) ++n;
  EXPECT_EQ(n, 5u);
}

TEST(Stats, ConsistentWithSplit) {
  auto samples = testsupport::random_samples(123, 6);
  auto split = split_dataset(samples, 1);
  auto st = compute_stats(200, split);
  std::size_t pos = 0;
  for (const auto& s : samples) pos += s.label == Label::Positive;
  EXPECT_EQ(st.positives, pos);
  EXPECT_EQ(st.positives + st.negatives, samples.size());
  EXPECT_EQ(st.train + st.val + st.test, samples.size());
  const auto text = format_stats(st, "python");
  for (const char* row : {"# TODO Commits", "# Positive samples", "# Negative samples", "# Train Set", "# Val Set",
                          "# Test Set"}) {
    EXPECT_NE(text.find(row), std::string::npos) << row;
  }
}
