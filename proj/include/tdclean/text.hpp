#pragma once

// Small ASCII text helpers shared by the diff, comment and baseline code.

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace tdclean::text {

inline constexpr std::string_view kCommitIdPlaceholder = "<commit_id>";
inline constexpr std::string_view kIssueIdPlaceholder = "<issue_id>";

inline bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
inline bool is_word_char(char c) { return is_alnum(c) || c == '_'; }
inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_lower_hex(char c) { return is_digit(c) || (c >= 'a' && c <= 'f'); }

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

inline std::string_view rtrim(std::string_view s) {
  std::size_t e = s.size();
  while (e > 0 && is_space(s[e - 1])) --e;
  return s.substr(0, e);
}

// Collapses every whitespace run to one space and trims both ends.
inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for (char c : s) {
    if (is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

inline std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < s.size()) {
    std::size_t nl = s.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(s.substr(start));
      break;
    }
    lines.push_back(s.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

// Replaces commit hashes with "<commit_id>". A hash is a whole word
// (word characters are [A-Za-z0-9_]) made only of lowercase hex digits,
// 7 to 40 characters long, containing at least one decimal digit.
// Expects lowercased input.
inline std::string replace_commit_ids(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_word_char(s[i])) {
      out.push_back(s[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && is_word_char(s[j])) ++j;
    std::string_view word = s.substr(i, j - i);
    const bool all_hex = std::all_of(word.begin(), word.end(), is_lower_hex);
    const bool has_digit = std::any_of(word.begin(), word.end(), is_digit);
    if (all_hex && has_digit && word.size() >= 7 && word.size() <= 40) {
      out += kCommitIdPlaceholder;
    } else {
      out += word;
    }
    i = j;
  }
  return out;
}

// Replaces "#<digits>" issue references with "<issue_id>". The digit run
// must end at a non-word character (or end of text).
inline std::string replace_issue_refs(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '#' && i + 1 < s.size() && is_digit(s[i + 1])) {
      std::size_t j = i + 1;
      while (j < s.size() && is_digit(s[j])) ++j;
      if (j == s.size() || !is_word_char(s[j])) {
        out += kIssueIdPlaceholder;
        i = j;
        continue;
      }
    }
    out.push_back(s[i++]);
  }
  return out;
}

}  // namespace tdclean::text
