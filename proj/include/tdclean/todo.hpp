#pragma once

// Comment extraction from diff lines, TODO detection, and carving the
// TODO out of its diff to obtain the code change.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tdclean/diff.hpp"
#include "tdclean/error.hpp"
#include "tdclean/text.hpp"

namespace tdclean {

enum class Language { Python, Java };

inline Language parse_language(std::string_view name) {
  const std::string lowered = text::to_lower(name);
  if (lowered == "python" || lowered == "py") return Language::Python;
  if (lowered == "java") return Language::Java;
  throw InvalidArgument("unsupported language: " + std::string(name));
}

inline std::string_view to_string(Language lang) {
  return lang == Language::Python ? "python" : "java";
}

// One comment found on a diff line.
struct LineComment {
  std::size_t line_index = 0;  // index into DiffDocument::lines
  DiffLine line;
  std::string text;            // delimiters removed, trimmed
  std::size_t column = 0;      // offset of the comment delimiter in line.text
  std::size_t end_column = 0;  // one past the comment's last character
  bool comment_only = false;   // no code on the line besides the comment
};

namespace detail {

inline std::string strip_leading(std::string_view s, char c) {
  s = text::trim(s);
  while (!s.empty() && s.front() == c) s.remove_prefix(1);
  return std::string(text::trim(s));
}

inline bool blank_before(std::string_view line, std::size_t col) {
  return text::trim(line.substr(0, col)).empty();
}

// Python: "#" outside of a string literal starts a comment. Quote state is
// tracked per line; triple quotes behave as three single quotes, which
// keeps ''' / """ balanced on one line.
inline void scan_python(std::size_t index, const DiffLine& line, std::vector<LineComment>& out) {
  const std::string_view s = line.text;
  char quote = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quote) {
      if (c == '\\') ++i;
      else if (c == quote) quote = 0;
      continue;
    }
    if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      out.push_back({index, line, strip_leading(s.substr(i), '#'), i, s.size(), blank_before(s, i)});
      return;
    }
  }
}

// Java: "//" line comments and single-line "/* ... */" blocks outside of
// string and char literals. An unterminated "/*" runs to end of line, and a
// line starting with "*" is treated as the interior of a block comment.
inline void scan_java(std::size_t index, const DiffLine& line, std::vector<LineComment>& out) {
  const std::string_view s = line.text;
  const std::string_view trimmed = text::trim(s);
  if (text::starts_with(trimmed, "*") && !text::starts_with(trimmed, "*/")) {
    std::string_view body = trimmed;
    if (text::ends_with(body, "*/")) body.remove_suffix(2);
    out.push_back({index, line, strip_leading(body, '*'), s.find('*'), s.size(), true});
    return;
  }
  char quote = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quote) {
      if (c == '\\') ++i;
      else if (c == quote) quote = 0;
      continue;
    }
    if (c == '"' || c == '\'') {
      quote = c;
      continue;
    }
    if (c != '/' || i + 1 >= s.size()) continue;
    if (s[i + 1] == '/') {
      out.push_back({index, line, strip_leading(s.substr(i + 2), '/'), i, s.size(), blank_before(s, i)});
      return;
    }
    if (s[i + 1] == '*') {
      const auto close = s.find("*/", i + 2);
      const std::size_t body_end = close == std::string_view::npos ? s.size() : close;
      std::string body = strip_leading(s.substr(i + 2, body_end - i - 2), '*');
      const bool only = blank_before(s, i) &&
                        (close == std::string_view::npos || text::trim(s.substr(close + 2)).empty());
      const std::size_t end = close == std::string_view::npos ? s.size() : close + 2;
      out.push_back({index, line, std::move(body), i, end, only});
      if (close == std::string_view::npos) return;
      i = close + 1;
    }
  }
}

}  // namespace detail

inline std::vector<LineComment> extract_comments(const DiffDocument& doc, Language language) {
  std::vector<LineComment> comments;
  for (std::size_t i = 0; i < doc.lines.size(); ++i) {
    if (language == Language::Python) detail::scan_python(i, doc.lines[i], comments);
    else detail::scan_java(i, doc.lines[i], comments);
  }
  return comments;
}

// True when "todo" occurs as a token bounded by non-alphanumeric
// characters. Case-insensitive.
inline bool contains_todo_token(std::string_view s) {
  const std::string lowered = text::to_lower(s);
  std::size_t pos = 0;
  while ((pos = lowered.find("todo", pos)) != std::string::npos) {
    const bool left = pos == 0 || !text::is_alnum(lowered[pos - 1]);
    const bool right = pos + 4 >= lowered.size() || !text::is_alnum(lowered[pos + 4]);
    if (left && right) return true;
    ++pos;
  }
  return false;
}

struct TodoComment {
  std::string text;
  std::size_t line_index = 0;
  DiffLine line;
  std::size_t column = 0;
  std::size_t end_column = 0;
  bool comment_only = false;
  Language language = Language::Python;

  LineKind kind() const { return line.kind; }
};

inline std::vector<TodoComment> find_todos(const std::vector<LineComment>& comments,
                                           Language language = Language::Python) {
  std::vector<TodoComment> todos;
  for (const auto& c : comments) {
    if (!contains_todo_token(c.text)) continue;
    todos.push_back({c.text, c.line_index, c.line, c.column, c.end_column, c.comment_only, language});
  }
  return todos;
}

// A diff with more than one TODO is most likely a comment edit; keep only
// diffs with exactly one.
inline std::optional<TodoComment> single_todo_filter(const std::vector<TodoComment>& todos) {
  if (todos.size() != 1) return std::nullopt;
  return todos.front();
}

inline constexpr std::size_t kDefaultContextLines = 3;

// A TODO is associated with the change when an added or removed line
// (other than the TODO's own line) sits within `context_lines` positions
// of it in the same hunk.
inline bool associate(const TodoComment& todo, const DiffDocument& doc,
                      std::size_t context_lines = kDefaultContextLines) {
  for (std::size_t i = 0; i < doc.lines.size(); ++i) {
    const DiffLine& other = doc.lines[i];
    if (i == todo.line_index || other.kind == LineKind::Context) continue;
    if (other.hunk_index != todo.line.hunk_index) continue;
    const std::size_t a = other.position;
    const std::size_t b = todo.line.position;
    if ((a > b ? a - b : b - a) <= context_lines) return true;
  }
  return false;
}

struct CodeChange {
  std::vector<DiffLine> lines;
  std::string rendered;  // "<marker><text>" per line, newline separated
};

inline std::string render_lines(const std::vector<DiffLine>& lines) {
  std::string out;
  for (const auto& line : lines) {
    if (!out.empty()) out.push_back('\n');
    out.push_back(marker_of(line.kind));
    out += line.text;
  }
  return out;
}

// Removes the TODO from the diff: a comment-only line is dropped, a code
// line with a trailing TODO keeps its code part.
inline CodeChange carve_code_change(const DiffDocument& doc, const TodoComment& todo) {
  CodeChange cc;
  cc.lines.reserve(doc.lines.size());
  for (std::size_t i = 0; i < doc.lines.size(); ++i) {
    if (i != todo.line_index) {
      cc.lines.push_back(doc.lines[i]);
      continue;
    }
    if (todo.comment_only) continue;
    DiffLine code = doc.lines[i];
    const std::string_view full = code.text;
    std::string kept(text::rtrim(full.substr(0, todo.column)));
    if (todo.end_column < full.size()) kept += full.substr(todo.end_column);
    code.text = std::move(kept);
    cc.lines.push_back(std::move(code));
  }
  cc.rendered = render_lines(cc.lines);
  return cc;
}

}  // namespace tdclean
