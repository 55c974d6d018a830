#pragma once

// Confusion counts, accuracy/precision/recall/F1 and the evaluation
// harness that renders one table row per method.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tdclean/corpus.hpp"
#include "tdclean/error.hpp"

namespace tdclean {

struct Confusion {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + tn + fp + fn; }
  bool operator==(const Confusion&) const = default;
};

// Resolved is the positive class.
inline Confusion confusion(const std::vector<Status>& preds, const std::vector<Status>& truth) {
  if (preds.size() != truth.size()) throw LengthMismatch(preds.size(), truth.size());
  Confusion c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == Status::Resolved;
    const bool t = truth[i] == Status::Resolved;
    if (p && t) ++c.tp;
    else if (!p && !t) ++c.tn;
    else if (p) ++c.fp;
    else ++c.fn;
  }
  return c;
}

inline Confusion confusion(const std::vector<Status>& preds, const std::vector<Label>& labels) {
  std::vector<Status> truth;
  truth.reserve(labels.size());
  for (Label l : labels) truth.push_back(status_of(l));
  return confusion(preds, truth);
}

struct MetricReport {
  std::string method;
  std::string dataset;
  Confusion counts;
  double accuracy = 0.0;
  std::optional<double> precision;  // nullopt when tp + fp = 0
  std::optional<double> recall;     // nullopt when tp + fn = 0
  std::optional<double> f1;         // nullopt when either is undefined or p + r = 0
};

inline std::optional<double> f1_score(std::optional<double> precision, std::optional<double> recall) {
  if (!precision || !recall || *precision + *recall == 0.0) return std::nullopt;
  return 2.0 * *precision * *recall / (*precision + *recall);
}

inline MetricReport metrics(const Confusion& c, std::string method = {}, std::string dataset = {}) {
  if (c.total() == 0) throw EmptyEvaluation();
  MetricReport r;
  r.method = std::move(method);
  r.dataset = std::move(dataset);
  r.counts = c;
  r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  if (c.tp + c.fp > 0) r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  r.f1 = f1_score(r.precision, r.recall);
  return r;
}

using Predictor = std::function<Status(const TripleSample&)>;

inline MetricReport evaluate(const Predictor& method, const std::vector<TripleSample>& test,
                             std::string method_name = {}, std::string dataset = {}) {
  if (test.empty()) throw EmptyEvaluation();
  std::vector<Status> preds;
  std::vector<Label> labels;
  preds.reserve(test.size());
  labels.reserve(test.size());
  for (const auto& s : test) {
    preds.push_back(method(s));
    labels.push_back(s.label);
  }
  return metrics(confusion(preds, labels), std::move(method_name), std::move(dataset));
}

// Percentage with one decimal, rounded half-up; "n/a" when undefined.
inline std::string format_percent(std::optional<double> fraction) {
  if (!fraction) return "n/a";
  // the epsilon keeps values like 0.8465 (stored as 0.84649999...) on the
  // half-up side
  const double tenths = std::floor(*fraction * 1000.0 + 0.5 + 1e-9);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", tenths / 10.0);
  return buf;
}

inline std::string format_table(const std::vector<MetricReport>& rows) {
  std::size_t width = 7;
  for (const auto& r : rows) width = std::max(width, r.method.size());
  std::ostringstream os;
  auto cell = [](std::string_view s, std::size_t w) {
    std::string out(s);
    if (out.size() < w) out.append(w - out.size(), ' ');
    return out;
  };
  os << cell("Measure", width) << " | Accuracy | Precision | Recall | F1\n";
  os << std::string(width, '-') << "-+----------+-----------+--------+-------\n";
  for (const auto& r : rows) {
    os << cell(r.method, width) << " | " << cell(format_percent(r.accuracy), 8) << " | "
       << cell(format_percent(r.precision), 9) << " | " << cell(format_percent(r.recall), 6) << " | "
       << format_percent(r.f1) << "\n";
  }
  return os.str();
}

inline std::string to_record(const MetricReport& r) {
  nlohmann::ordered_json j;
  auto opt = [](std::optional<double> v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr); };
  j["method"] = r.method;
  j["dataset"] = r.dataset;
  j["tp"] = r.counts.tp;
  j["tn"] = r.counts.tn;
  j["fp"] = r.counts.fp;
  j["fn"] = r.counts.fn;
  j["accuracy"] = r.accuracy;
  j["precision"] = opt(r.precision);
  j["recall"] = opt(r.recall);
  j["f1"] = opt(r.f1);
  return j.dump();
}

}  // namespace tdclean
