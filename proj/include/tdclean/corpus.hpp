#pragma once

// Turning mined commits into labeled <code_change, todo_comment, commit_msg>
// triples, splitting them, and reading/writing the corpus files.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tdclean/diff.hpp"
#include "tdclean/error.hpp"
#include "tdclean/random.hpp"
#include "tdclean/todo.hpp"

namespace tdclean {

struct RawCommit {
  std::string commit_id;
  std::string message;
  std::string diff_text;
  std::string repo;

  bool operator==(const RawCommit&) const = default;
};

enum class Label { Positive, Negative };

inline std::string_view to_string(Label label) {
  return label == Label::Positive ? "positive" : "negative";
}

// Predicted status of a TODO. Resolved is the positive class.
enum class Status { Resolved, Unresolved };

inline std::string_view to_string(Status s) {
  return s == Status::Resolved ? "resolved" : "unresolved";
}

inline Status status_of(Label label) {
  return label == Label::Positive ? Status::Resolved : Status::Unresolved;
}

struct TripleSample {
  std::string code_change;
  std::string todo_comment;
  std::string commit_msg;
  Label label = Label::Negative;
  std::string repo;
  std::string commit_id;
  LineKind todo_line_kind = LineKind::Context;

  bool operator==(const TripleSample&) const = default;
};

struct Provenance {
  std::string repo;
  std::string commit_id;
};

// Keeps a commit when its diff mentions "todo" in any letter case.
inline bool is_todo_commit(const RawCommit& commit) {
  const std::string_view d = commit.diff_text;
  for (std::size_t i = 0; i + 4 <= d.size(); ++i) {
    if ((d[i] | 0x20) == 't' && (d[i + 1] | 0x20) == 'o' && (d[i + 2] | 0x20) == 'd' &&
        (d[i + 3] | 0x20) == 'o') {
      return true;
    }
  }
  return false;
}

inline std::vector<RawCommit> identify_todo_commits(const std::vector<RawCommit>& commits) {
  std::vector<RawCommit> out;
  std::copy_if(commits.begin(), commits.end(), std::back_inserter(out), is_todo_commit);
  return out;
}

// TODO on a removed line: the task was done (positive). On an unchanged
// line: the change did not resolve it (negative). On an added line: the
// TODO is new, nothing to judge (nullopt).
inline std::optional<TripleSample> label_triple(const TodoComment& todo, const CodeChange& cc,
                                                const NormalizedMessage& msg, const Provenance& from = {}) {
  std::optional<Label> label;
  switch (todo.kind()) {
    case LineKind::Removed: label = Label::Positive; break;
    case LineKind::Context: label = Label::Negative; break;
    case LineKind::Added: return std::nullopt;
  }
  return TripleSample{cc.rendered, todo.text, msg.text, *label, from.repo, from.commit_id, todo.kind()};
}

// Per-filter drop counters collected while building a corpus.
struct BuildCounters {
  std::size_t commits = 0;
  std::size_t todo_commits = 0;
  std::size_t parse_failures = 0;
  std::size_t oversized = 0;
  std::size_t no_todo_comment = 0;
  std::size_t multiple_todos = 0;
  std::size_t unassociated = 0;
  std::size_t added_todo = 0;
  std::size_t empty_code_change = 0;
  std::size_t empty_message = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

// Everything known about a single-TODO commit before labeling.
struct TodoTriple {
  TodoComment todo;
  CodeChange code_change;
  NormalizedMessage message;
  std::string path;  // file holding the TODO, as named after the change
  Provenance from;
};

// Runs normalization, comment extraction and the single-TODO and
// association filters on one commit. Returns nullopt when a filter drops
// the commit; the reason is counted in `counters`.
inline std::optional<TodoTriple> extract_todo_triple(const RawCommit& commit, Language language,
                                                     BuildCounters& counters,
                                                     std::size_t context_lines = kDefaultContextLines) {
  DiffDocument parsed;
  try {
    parsed = parse_unified_diff(commit.diff_text);
  } catch (const MalformedDiff&) {
    ++counters.parse_failures;
    return std::nullopt;
  }
  auto doc = normalize_diff(parsed);
  if (!doc) {
    ++counters.oversized;
    return std::nullopt;
  }
  const auto todos = find_todos(extract_comments(*doc, language), language);
  auto todo = single_todo_filter(todos);
  if (!todo) {
    ++(todos.empty() ? counters.no_todo_comment : counters.multiple_todos);
    return std::nullopt;
  }
  if (!associate(*todo, *doc, context_lines)) {
    ++counters.unassociated;
    return std::nullopt;
  }
  TodoTriple triple{*todo, carve_code_change(*doc, *todo), normalize_message(commit.message), {},
                    {commit.repo, commit.commit_id}};
  const FilePaths& file = doc->files.at(todo->line.file_index);
  triple.path = file.new_path == "/dev/null" ? file.old_path : file.new_path;
  return triple;
}

struct BuildResult {
  std::vector<TripleSample> samples;
  BuildCounters counters;
};

// Labels an extracted triple and applies the sample-level drops: TODOs
// on added lines, empty code changes and empty commit messages.
inline std::optional<TripleSample> finalize_sample(const TodoTriple& triple, BuildCounters& c) {
  auto sample = label_triple(triple.todo, triple.code_change, triple.message, triple.from);
  if (!sample) {
    ++c.added_todo;
    return std::nullopt;
  }
  const auto& lines = triple.code_change.lines;
  if (std::all_of(lines.begin(), lines.end(), [](const DiffLine& l) { return text::trim(l.text).empty(); })) {
    ++c.empty_code_change;
    return std::nullopt;
  }
  if (sample->commit_msg.empty()) {
    ++c.empty_message;
    return std::nullopt;
  }
  ++(sample->label == Label::Positive ? c.positives : c.negatives);
  return sample;
}

inline BuildResult build_samples(const std::vector<RawCommit>& commits, Language language) {
  BuildResult result;
  auto& c = result.counters;
  for (const auto& commit : commits) {
    ++c.commits;
    if (!is_todo_commit(commit)) continue;
    ++c.todo_commits;
    auto triple = extract_todo_triple(commit, language, c);
    if (!triple) continue;
    if (auto sample = finalize_sample(*triple, c)) result.samples.push_back(std::move(*sample));
  }
  return result;
}

struct DatasetSplit {
  std::vector<TripleSample> train;
  std::vector<TripleSample> val;
  std::vector<TripleSample> test;
  std::uint64_t seed = 0;
};

// 80/10/10 after a seeded shuffle. Validation and test each get n/10
// rounded to nearest (ties down, so the remainder goes to train); this
// keeps all three sizes within 1 of their share.
inline DatasetSplit split_dataset(const std::vector<TripleSample>& samples, std::uint64_t seed) {
  if (samples.size() < 10) throw TooFewSamples(samples.size());
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const std::size_t n_val = (samples.size() + 4) / 10;
  const std::size_t n_test = n_val;
  const std::size_t n_train = samples.size() - n_val - n_test;
  DatasetSplit split;
  split.seed = seed;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& dest = i < n_train ? split.train : i < n_train + n_val ? split.val : split.test;
    dest.push_back(samples[order[i]]);
  }
  return split;
}

// ---------------------------------------------------------------------------
// Persistence: one JSON object per line, keys in a fixed order.

namespace detail {

using ordered_json = nlohmann::ordered_json;

inline std::string dump_line(const ordered_json& j) {
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

inline std::string require_string(const nlohmann::json& j, const char* key, std::size_t line_no) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaViolation(line_no, std::string("missing field '") + key + "'");
  if (!it->is_string()) throw SchemaViolation(line_no, std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

template <typename F>
void for_each_record(std::istream& in, F&& on_record) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaViolation(line_no, e.what());
    }
    if (!j.is_object()) throw SchemaViolation(line_no, "record is not an object");
    on_record(j, line_no);
  }
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open " + path + " for writing");
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path + " for reading");
  return in;
}

}  // namespace detail

inline std::string to_record(const TripleSample& s) {
  detail::ordered_json j;
  j["repo"] = s.repo;
  j["commit_id"] = s.commit_id;
  j["todo_comment"] = s.todo_comment;
  j["code_change"] = s.code_change;
  j["commit_msg"] = s.commit_msg;
  j["label"] = to_string(s.label);
  j["todo_line_kind"] = to_string(s.todo_line_kind);
  return detail::dump_line(j);
}

inline void write_corpus(std::ostream& out, const std::vector<TripleSample>& samples) {
  for (const auto& s : samples) out << to_record(s) << '\n';
}

inline void write_corpus(const std::vector<TripleSample>& samples, const std::string& path) {
  auto out = detail::open_out(path);
  write_corpus(out, samples);
  if (!out.flush()) throw IoFailure("write to " + path + " failed");
}

inline std::vector<TripleSample> read_corpus(std::istream& in) {
  std::vector<TripleSample> samples;
  detail::for_each_record(in, [&](const nlohmann::json& j, std::size_t line_no) {
    TripleSample s;
    s.repo = detail::require_string(j, "repo", line_no);
    s.commit_id = detail::require_string(j, "commit_id", line_no);
    s.todo_comment = detail::require_string(j, "todo_comment", line_no);
    s.code_change = detail::require_string(j, "code_change", line_no);
    s.commit_msg = detail::require_string(j, "commit_msg", line_no);
    const std::string label = detail::require_string(j, "label", line_no);
    const std::string kind = detail::require_string(j, "todo_line_kind", line_no);
    if (label == "positive") s.label = Label::Positive;
    else if (label == "negative") s.label = Label::Negative;
    else throw SchemaViolation(line_no, "unknown label '" + label + "'");
    if (kind == "removed") s.todo_line_kind = LineKind::Removed;
    else if (kind == "context") s.todo_line_kind = LineKind::Context;
    else throw SchemaViolation(line_no, "unknown todo_line_kind '" + kind + "'");
    if ((s.label == Label::Positive) != (s.todo_line_kind == LineKind::Removed)) {
      throw SchemaViolation(line_no, "label and todo_line_kind disagree");
    }
    samples.push_back(std::move(s));
  });
  return samples;
}

inline std::vector<TripleSample> read_corpus(const std::string& path) {
  auto in = detail::open_in(path);
  return read_corpus(in);
}

inline std::string to_record(const RawCommit& c) {
  detail::ordered_json j;
  j["repo"] = c.repo;
  j["commit_id"] = c.commit_id;
  j["message"] = c.message;
  j["diff"] = c.diff_text;
  return detail::dump_line(j);
}

inline std::vector<RawCommit> read_commits(std::istream& in) {
  std::vector<RawCommit> commits;
  detail::for_each_record(in, [&](const nlohmann::json& j, std::size_t line_no) {
    RawCommit c;
    c.repo = detail::require_string(j, "repo", line_no);
    c.commit_id = detail::require_string(j, "commit_id", line_no);
    c.message = detail::require_string(j, "message", line_no);
    c.diff_text = detail::require_string(j, "diff", line_no);
    if (c.commit_id.empty()) throw SchemaViolation(line_no, "empty commit_id");
    commits.push_back(std::move(c));
  });
  return commits;
}

inline std::vector<RawCommit> read_commits(const std::string& path) {
  auto in = detail::open_in(path);
  return read_commits(in);
}

// ---------------------------------------------------------------------------

// Seeded random draw of n_pos positives and n_neg negatives for manual
// label checking. Positives come first in the result.
inline std::vector<TripleSample> sample_for_manual_check(const std::vector<TripleSample>& samples,
                                                         std::size_t n_pos, std::size_t n_neg,
                                                         std::uint64_t seed) {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    (samples[i].label == Label::Positive ? pos : neg).push_back(i);
  }
  if (pos.size() < n_pos) throw Insufficient("positive", pos.size(), n_pos);
  if (neg.size() < n_neg) throw Insufficient("negative", neg.size(), n_neg);
  Rng rng(seed);
  rng.shuffle(pos);
  rng.shuffle(neg);
  std::vector<TripleSample> out;
  out.reserve(n_pos + n_neg);
  for (std::size_t i = 0; i < n_pos; ++i) out.push_back(samples[pos[i]]);
  for (std::size_t i = 0; i < n_neg; ++i) out.push_back(samples[neg[i]]);
  return out;
}

inline void write_manual_check_report(std::ostream& out, const std::vector<TripleSample>& picked) {
  std::size_t n = 0;
  for (const auto& s : picked) {
    out << "=== sample " << ++n << " / " << picked.size() << " [" << to_string(s.label) << "] "
        << s.repo << ' ' << s.commit_id << "\n";
    out << "todo_comment: " << s.todo_comment << "\n";
    out << "commit_msg:   " << s.commit_msg << "\n";
    out << "code_change:\n" << s.code_change << "\n";
    out << "verdict (correct/incorrect): \n\n";
  }
}

struct CorpusStats {
  std::size_t todo_commits = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;

  bool operator==(const CorpusStats&) const = default;
};

inline CorpusStats compute_stats(std::size_t todo_commits, const DatasetSplit& split) {
  CorpusStats st;
  st.todo_commits = todo_commits;
  st.train = split.train.size();
  st.val = split.val.size();
  st.test = split.test.size();
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    for (const auto& s : *part) ++(s.label == Label::Positive ? st.positives : st.negatives);
  }
  return st;
}

// Plain-text statistics report, one "# <row>  <count>" line per row.
inline std::string format_stats(const CorpusStats& st, std::string_view dataset) {
  std::ostringstream os;
  os << "Dataset: " << dataset << "\n";
  os << "# TODO Commits       " << st.todo_commits << "\n";
  os << "# Positive samples   " << st.positives << "\n";
  os << "# Negative samples   " << st.negatives << "\n";
  os << "# Train Set          " << st.train << "\n";
  os << "# Val Set            " << st.val << "\n";
  os << "# Test Set           " << st.test << "\n";
  return os.str();
}

inline std::string format_counters(const BuildCounters& c) {
  std::ostringstream os;
  os << "commits              " << c.commits << "\n"
     << "todo_commits         " << c.todo_commits << "\n"
     << "dropped.parse        " << c.parse_failures << "\n"
     << "dropped.oversized    " << c.oversized << "\n"
     << "dropped.no_todo      " << c.no_todo_comment << "\n"
     << "dropped.multi_todo   " << c.multiple_todos << "\n"
     << "dropped.unassociated " << c.unassociated << "\n"
     << "dropped.added_todo   " << c.added_todo << "\n"
     << "dropped.empty_change " << c.empty_code_change << "\n"
     << "dropped.empty_msg    " << c.empty_message << "\n"
     << "positives            " << c.positives << "\n"
     << "negatives            " << c.negatives << "\n";
  return os.str();
}

}  // namespace tdclean
