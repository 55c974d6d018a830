#pragma once

// Looking for TODOs that some commit resolved without deleting them.
//
// Every historical commit that kept a TODO on an unchanged line next to a
// code change is turned into a triple and scored. Triples predicted as
// resolved are checked against HEAD: if the comment is still there it is a
// potential obsolete TODO, otherwise it was deleted later (intermediate).

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tdclean/corpus.hpp"
#include "tdclean/git.hpp"
#include "tdclean/training.hpp"

namespace tdclean {

enum class FindingKind { PotentialObsolete, IntermediateObsolete };

inline std::string_view to_string(FindingKind k) {
  return k == FindingKind::PotentialObsolete ? "potential_obsolete" : "intermediate_obsolete";
}

struct ScanFinding {
  std::string path;
  std::size_t line = 0;  // 1-based line at HEAD; 0 when the TODO is gone
  std::string todo;
  std::string commit_id;  // commit predicted to have resolved the TODO
  double score = 0.0;
  FindingKind kind = FindingKind::PotentialObsolete;

  bool operator==(const ScanFinding&) const = default;
};

// File content at HEAD, nullopt when the path does not exist there.
using HeadReader = std::function<std::optional<std::string>(const std::string& path)>;

// 1-based line number of the first comment at HEAD whose text equals
// `todo` up to whitespace, after the same normalization used for diffs.
inline std::optional<std::size_t> locate_todo(std::string_view content, std::string_view todo, Language language) {
  const std::string wanted = text::collapse_whitespace(todo);
  const auto lines = text::split_lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    DiffDocument one;
    one.lines.push_back(DiffLine{LineKind::Context, text::replace_commit_ids(text::to_lower(lines[i])), 0, 0, 0});
    for (const auto& c : extract_comments(one, language)) {
      if (text::collapse_whitespace(c.text) == wanted) return i + 1;
    }
  }
  return std::nullopt;
}

struct ScanOptions {
  Language language = Language::Python;
  const nn::ExternalVectors* external = nullptr;
};

// `commits` in git log order (newest first).
inline std::vector<ScanFinding> scan_commits(const std::vector<RawCommit>& commits, const nn::Model& model,
                                             const HeadReader& head, const ScanOptions& opts = {}) {
  std::map<std::pair<std::string, std::string>, ScanFinding> best;  // (path, todo) -> finding
  BuildCounters counters;
  for (auto it = commits.rbegin(); it != commits.rend(); ++it) {
    if (!is_todo_commit(*it)) continue;
    auto triple = extract_todo_triple(*it, opts.language, counters);
    if (!triple || triple->todo.kind() != LineKind::Context) continue;
    auto sample = finalize_sample(*triple, counters);
    if (!sample) continue;
    const auto pred = nn::predict(*sample, model, opts.external);
    if (pred.status != Status::Resolved) continue;
    auto key = std::make_pair(triple->path, sample->todo_comment);
    auto found = best.find(key);
    if (found == best.end() || pred.score > found->second.score) {
      best[key] = ScanFinding{triple->path, 0, sample->todo_comment, sample->commit_id, pred.score,
                              FindingKind::PotentialObsolete};
    }
  }

  std::vector<ScanFinding> findings;
  for (auto& [key, f] : best) {
    const auto content = head(f.path);
    const auto line = content ? locate_todo(*content, f.todo, opts.language) : std::nullopt;
    f.kind = line ? FindingKind::PotentialObsolete : FindingKind::IntermediateObsolete;
    f.line = line.value_or(0);
    findings.push_back(std::move(f));
  }
  std::stable_sort(findings.begin(), findings.end(), [](const ScanFinding& a, const ScanFinding& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.path != b.path) return a.path < b.path;
    return a.line < b.line;
  });
  return findings;
}

// Read-only: uses `git log` and `git show HEAD:<path>` only.
inline std::vector<ScanFinding> scan(const std::string& repo, const nn::Model& model, const ScanOptions& opts = {}) {
  std::vector<RawCommit> commits;
  git::for_each_commit(repo, [&](RawCommit&& c) { commits.push_back(std::move(c)); });
  return scan_commits(commits, model, [&](const std::string& path) { return git::show_at_head(repo, path); }, opts);
}

inline std::string to_record(const ScanFinding& f) {
  nlohmann::ordered_json j;
  j["path"] = f.path;
  j["line"] = f.line;
  j["todo"] = f.todo;
  j["commit_id"] = f.commit_id;
  j["score"] = f.score;
  j["classification"] = to_string(f.kind);
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace tdclean
