#pragma once

// Unified diff model: parsing `git log -p` / `git show` diff text into
// tagged lines, plus the normalization applied before mining.

#include <charconv>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tdclean/error.hpp"
#include "tdclean/text.hpp"

namespace tdclean {

enum class LineKind { Added, Removed, Context };

inline char marker_of(LineKind kind) {
  switch (kind) {
    case LineKind::Added: return '+';
    case LineKind::Removed: return '-';
    case LineKind::Context: return ' ';
  }
  return ' ';
}

inline std::string_view to_string(LineKind kind) {
  switch (kind) {
    case LineKind::Added: return "added";
    case LineKind::Removed: return "removed";
    case LineKind::Context: return "context";
  }
  return "context";
}

struct DiffLine {
  LineKind kind = LineKind::Context;
  std::string text;             // marker stripped
  std::size_t file_index = 0;
  std::size_t hunk_index = 0;   // document-wide hunk ordinal
  std::size_t position = 0;     // ordinal within the hunk

  bool operator==(const DiffLine&) const = default;
};

struct FilePaths {
  std::string old_path;  // "/dev/null" for created files
  std::string new_path;  // "/dev/null" for deleted files
  bool binary = false;

  bool operator==(const FilePaths&) const = default;
};

struct DiffDocument {
  std::vector<DiffLine> lines;
  std::size_t byte_size = 0;  // size of the diff text before normalization
  std::vector<FilePaths> files;

  bool operator==(const DiffDocument&) const = default;
};

// Diffs larger than 1 MiB are dropped from mining.
inline constexpr std::size_t kMaxDiffBytes = std::size_t{1} << 20;

namespace detail {

inline std::string strip_path_prefix(std::string_view path) {
  path = text::rtrim(path);
  // "--- a/foo\t2020-01-01" style timestamps
  if (auto tab = path.find('\t'); tab != std::string_view::npos) path = path.substr(0, tab);
  if (path == "/dev/null") return std::string(path);
  if (text::starts_with(path, "a/") || text::starts_with(path, "b/")) path.remove_prefix(2);
  return std::string(path);
}

// "diff --git a/x b/y": split at the last " b/" so that paths containing
// spaces survive when both sides are equal.
inline FilePaths paths_from_git_header(std::string_view rest) {
  FilePaths paths;
  auto split = rest.rfind(" b/");
  if (split == std::string_view::npos) {
    paths.old_path = paths.new_path = std::string(text::trim(rest));
    return paths;
  }
  paths.old_path = strip_path_prefix(rest.substr(0, split));
  paths.new_path = strip_path_prefix(rest.substr(split + 1));
  return paths;
}

inline bool parse_count(std::string_view s, std::size_t& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Parses "-a[,b]" or "+c[,d]" and returns the line count (default 1).
inline bool parse_range_count(std::string_view range, std::size_t& count) {
  if (range.size() < 2) return false;
  range.remove_prefix(1);
  std::size_t start = 0;
  auto comma = range.find(',');
  if (comma == std::string_view::npos) {
    count = 1;
    return parse_count(range, start);
  }
  return parse_count(range.substr(0, comma), start) && parse_count(range.substr(comma + 1), count);
}

struct HunkHeader {
  std::size_t old_count = 0;
  std::size_t new_count = 0;
};

inline std::optional<HunkHeader> parse_hunk_header(std::string_view line) {
  // "@@ -a,b +c,d @@ optional section heading"
  if (!text::starts_with(line, "@@ ")) return std::nullopt;
  auto close = line.find(" @@", 2);
  if (close == std::string_view::npos) return std::nullopt;
  std::string_view ranges = line.substr(3, close - 3);
  auto space = ranges.find(' ');
  if (space == std::string_view::npos) return std::nullopt;
  std::string_view old_range = ranges.substr(0, space);
  std::string_view new_range = text::trim(ranges.substr(space + 1));
  if (old_range.empty() || old_range[0] != '-' || new_range.empty() || new_range[0] != '+') return std::nullopt;
  HunkHeader h;
  if (!parse_range_count(old_range, h.old_count) || !parse_range_count(new_range, h.new_count)) return std::nullopt;
  return h;
}

}  // namespace detail

// Parses unified diff text. File headers ("diff --git", "index", "---",
// "+++", mode lines) and hunk headers are metadata and never appear in
// `lines`. Hunk bodies are delimited by the line counts in their "@@"
// header, so content lines that look like headers ("--- x") are safe.
// A blank line inside a hunk body is read as an empty context line.
inline DiffDocument parse_unified_diff(std::string_view diff_text) {
  DiffDocument doc;
  doc.byte_size = diff_text.size();
  if (diff_text.empty()) return doc;

  const auto lines = text::split_lines(diff_text);
  bool in_file = false;
  bool file_has_git_header = false;
  std::size_t hunk_counter = 0;
  std::size_t old_left = 0;
  std::size_t new_left = 0;
  std::size_t position = 0;
  bool in_hunk = false;
  std::size_t hunk_line_no = 0;

  auto current_file = [&]() -> FilePaths& { return doc.files.back(); };

  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    const std::size_t line_no = i + 1;

    if (text::starts_with(line, "\\")) continue;  // "\ No newline at end of file"

    if (in_hunk) {
      if (line.empty()) line = " ";
      LineKind kind;
      switch (line[0]) {
        case '+': kind = LineKind::Added; break;
        case '-': kind = LineKind::Removed; break;
        case ' ': kind = LineKind::Context; break;
        default: throw MalformedDiff(line_no, "hunk body line lacks a +/-/space marker");
      }
      if ((kind != LineKind::Added && old_left == 0) || (kind != LineKind::Removed && new_left == 0)) {
        throw MalformedDiff(line_no, "hunk body longer than its header announces");
      }
      if (kind != LineKind::Added) --old_left;
      if (kind != LineKind::Removed) --new_left;
      doc.lines.push_back(DiffLine{kind, std::string(line.substr(1)), doc.files.size() - 1,
                                   hunk_counter - 1, position++});
      if (old_left == 0 && new_left == 0) in_hunk = false;
      continue;
    }

    if (text::starts_with(line, "diff --git ")) {
      doc.files.push_back(detail::paths_from_git_header(line.substr(11)));
      in_file = true;
      file_has_git_header = true;
      continue;
    }
    if (text::starts_with(line, "--- ") && i + 1 < lines.size() && text::starts_with(lines[i + 1], "+++ ")) {
      // plain unified diffs have no "diff --git" line before the pair
      if (!file_has_git_header) {
        doc.files.push_back({});
        in_file = true;
      }
      current_file().old_path = detail::strip_path_prefix(line.substr(4));
      current_file().new_path = detail::strip_path_prefix(lines[i + 1].substr(4));
      file_has_git_header = false;  // the next "---" pair starts a new file
      ++i;
      continue;
    }
    if (text::starts_with(line, "@@")) {
      auto header = detail::parse_hunk_header(line);
      if (!header) throw MalformedDiff(line_no, "unparseable hunk header");
      if (!in_file) throw MalformedDiff(line_no, "hunk outside of a file section");
      file_has_git_header = false;
      ++hunk_counter;
      position = 0;
      old_left = header->old_count;
      new_left = header->new_count;
      in_hunk = old_left > 0 || new_left > 0;
      hunk_line_no = line_no;
      continue;
    }
    if (in_file && (text::starts_with(line, "Binary files ") || text::starts_with(line, "GIT binary patch"))) {
      current_file().binary = true;
      continue;
    }
    // Remaining lines are file metadata ("index", "new file mode", ...)
    // or binary patch payload; none of them carry content.
  }
  if (in_hunk) throw MalformedDiff(hunk_line_no, "diff ends inside a hunk");
  return doc;
}

// Lowercases every line and replaces commit hashes with "<commit_id>".
// Returns nullopt (the document is rejected) when the original diff text
// was larger than 1 MiB.
inline std::optional<DiffDocument> normalize_diff(const DiffDocument& doc) {
  if (doc.byte_size > kMaxDiffBytes) return std::nullopt;
  DiffDocument out = doc;
  for (auto& line : out.lines) line.text = text::replace_commit_ids(text::to_lower(line.text));
  return out;
}

struct NormalizedMessage {
  std::string text;

  bool operator==(const NormalizedMessage&) const = default;
};

// Keeps the lowercased first sentence of a commit message. The sentence
// ends at the first period followed by whitespace or end of text (period
// kept), or at the first newline, whichever comes first.
inline NormalizedMessage normalize_message(std::string_view message) {
  std::string lowered = text::to_lower(text::trim(message));
  std::size_t end = lowered.size();
  for (std::size_t i = 0; i < lowered.size(); ++i) {
    if (lowered[i] == '\n' || lowered[i] == '\r') {
      end = i;
      break;
    }
    if (lowered[i] == '.' && (i + 1 == lowered.size() || text::is_space(lowered[i + 1]))) {
      end = i + 1;
      break;
    }
  }
  std::string first = std::string(text::trim(std::string_view(lowered).substr(0, end)));
  return {text::replace_commit_ids(text::replace_issue_refs(first))};
}

struct LineScopes {
  std::vector<DiffLine> added;
  std::vector<DiffLine> removed;
  std::vector<DiffLine> equal;
};

inline LineScopes line_scopes(const DiffDocument& doc) {
  LineScopes scopes;
  for (const auto& line : doc.lines) {
    switch (line.kind) {
      case LineKind::Added: scopes.added.push_back(line); break;
      case LineKind::Removed: scopes.removed.push_back(line); break;
      case LineKind::Context: scopes.equal.push_back(line); break;
    }
  }
  return scopes;
}

}  // namespace tdclean
