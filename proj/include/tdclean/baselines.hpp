#pragma once

// Heuristic comparison methods: word overlap between the TODO and the code
// change (TCO), the commit message (TMO), either of them (TCMO), and a
// TF-IDF cosine status checker over the added lines (IRSC).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tdclean/corpus.hpp"
#include "tdclean/text.hpp"

namespace tdclean::baselines {

// English function words ignored by the overlap and TF-IDF methods. The
// list is pinned by a checksum test; changing it changes every baseline
// score.
inline constexpr std::array<std::string_view, 50> kStopwords = {
    "a",     "an",    "the",   "and",   "or",    "but",   "if",   "then",   "else",  "of",
    "to",    "in",    "on",    "at",    "by",    "for",   "with", "from",   "as",    "into",
    "is",    "are",   "was",   "were",  "be",    "been",  "it",   "its",    "this",  "that",
    "these", "those", "there", "here",  "not",   "no",    "do",   "does",   "so",    "than",
    "too",   "very",  "can",   "will",  "just",  "should", "would", "could", "we",   "i"};

inline bool is_stopword(std::string_view w) {
  return std::find(kStopwords.begin(), kStopwords.end(), w) != kStopwords.end();
}

// Suffix stripping: "ing", then "ed", then plural "s", each only when the
// remaining stem keeps at least three characters.
inline std::string light_stem(std::string w) {
  for (std::string_view suffix : {"ing", "ed", "s"}) {
    if (text::ends_with(w, suffix) && w.size() - suffix.size() >= 3) {
      w.resize(w.size() - suffix.size());
      return w;
    }
  }
  return w;
}

// Splits identifiers at underscores, punctuation and camel-case humps
// ("parseHTTPHeader" -> parse, http, header), lowercases, and drops
// stopwords and "todo".
inline std::vector<std::string> word_tokens(std::string_view s, bool stem = true) {
  std::vector<std::string> words;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    std::string w = text::to_lower(cur);
    cur.clear();
    if (is_stopword(w) || w == "todo") return;
    if (stem) w = light_stem(std::move(w));
    if (w.empty() || w == "todo") return;
    words.push_back(std::move(w));
  };
  auto is_upper = [](char c) { return c >= 'A' && c <= 'Z'; };
  auto is_lower = [](char c) { return c >= 'a' && c <= 'z'; };
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (!text::is_alnum(c)) {
      flush();
      continue;
    }
    if (!cur.empty() && is_upper(c)) {
      const char prev = cur.back();
      const bool next_lower = i + 1 < s.size() && is_lower(s[i + 1]);
      if (!is_upper(prev) || next_lower) flush();
    }
    cur.push_back(c);
  }
  flush();
  return words;
}

using TokenSet = std::set<std::string>;

inline TokenSet overlap_tokens(std::string_view s, bool stem = true) {
  auto words = word_tokens(s, stem);
  return TokenSet(words.begin(), words.end());
}

inline bool intersects(const TokenSet& a, const TokenSet& b) {
  const TokenSet& small = a.size() <= b.size() ? a : b;
  const TokenSet& large = a.size() <= b.size() ? b : a;
  return std::any_of(small.begin(), small.end(), [&](const std::string& w) { return large.count(w) > 0; });
}

inline Status tco(const TripleSample& s, bool stem = true) {
  return intersects(overlap_tokens(s.todo_comment, stem), overlap_tokens(s.code_change, stem))
             ? Status::Resolved
             : Status::Unresolved;
}

inline Status tmo(const TripleSample& s, bool stem = true) {
  return intersects(overlap_tokens(s.todo_comment, stem), overlap_tokens(s.commit_msg, stem))
             ? Status::Resolved
             : Status::Unresolved;
}

inline Status tcmo(const TripleSample& s, bool stem = true) {
  return tco(s, stem) == Status::Resolved || tmo(s, stem) == Status::Resolved ? Status::Resolved
                                                                               : Status::Unresolved;
}

// Added lines of a rendered code change, markers stripped.
inline std::string lines_added(std::string_view code_change) {
  std::string out;
  for (auto line : text::split_lines(code_change)) {
    if (line.empty() || line[0] != '+') continue;
    if (!out.empty()) out.push_back('\n');
    out += line.substr(1);
  }
  return out;
}

// Document frequencies of a background collection (by default the
// training split's TODO comments and added lines).
class IdfBackground {
 public:
  explicit IdfBackground(bool stem = true) : stem_(stem) {}

  void add_document(std::string_view doc) {
    ++documents_;
    for (const auto& w : overlap_tokens(doc, stem_)) ++df_[w];
  }

  std::size_t documents() const { return documents_; }
  std::size_t df(const std::string& w) const {
    auto it = df_.find(w);
    return it == df_.end() ? 0 : it->second;
  }
  bool stem() const { return stem_; }

 private:
  bool stem_;
  std::size_t documents_ = 0;
  std::unordered_map<std::string, std::size_t> df_;
};

inline IdfBackground background_from(const std::vector<TripleSample>& docs, bool stem = true) {
  IdfBackground bg(stem);
  for (const auto& s : docs) {
    bg.add_document(s.todo_comment);
    bg.add_document(lines_added(s.code_change));
  }
  return bg;
}

// TF-IDF cosine between a comment and the added lines. Term weights are
// raw term frequency times smoothed idf, ln((1 + N) / (1 + df)) + 1, where
// N and df count the background documents plus the two compared texts.
// Weights are positive, so the cosine lies in [0, 1]; a zero vector gives 0.
inline double tfidf_cosine(std::string_view comment, std::string_view added, const IdfBackground& bg) {
  std::map<std::string, double> tf_a;
  std::map<std::string, double> tf_b;
  for (auto& w : word_tokens(comment, bg.stem())) tf_a[w] += 1.0;
  for (auto& w : word_tokens(added, bg.stem())) tf_b[w] += 1.0;
  if (tf_a.empty() || tf_b.empty()) return 0.0;
  const double n = static_cast<double>(bg.documents() + 2);
  auto idf = [&](const std::string& w) {
    const double df = static_cast<double>(bg.df(w) + tf_a.count(w) + tf_b.count(w));
    return std::log((1.0 + n) / (1.0 + df)) + 1.0;
  };
  double dot = 0.0;
  double norm_a = 0.0;
  double norm_b = 0.0;
  for (const auto& [w, tf] : tf_a) {
    const double wa = tf * idf(w);
    norm_a += wa * wa;
    if (auto it = tf_b.find(w); it != tf_b.end()) dot += wa * it->second * idf(w);
  }
  for (const auto& [w, tf] : tf_b) {
    const double wb = tf * idf(w);
    norm_b += wb * wb;
  }
  if (norm_a == 0.0 || norm_b == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(norm_a) * std::sqrt(norm_b)), 0.0, 1.0);
}

inline constexpr double kDefaultIrscThreshold = 0.3;

inline double irsc_score(const TripleSample& s, const IdfBackground& bg) {
  return tfidf_cosine(s.todo_comment, lines_added(s.code_change), bg);
}

inline Status irsc(const TripleSample& s, const IdfBackground& bg, double threshold = kDefaultIrscThreshold) {
  return irsc_score(s, bg) >= threshold ? Status::Resolved : Status::Unresolved;
}

}  // namespace tdclean::baselines
