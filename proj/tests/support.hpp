#pragma once

// Helpers shared by the unit and acceptance tests.

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdclean/tdclean.hpp"

namespace testsupport {

namespace fs = std::filesystem;

inline std::string fixture(const std::string& name) { return std::string(TDCLEAN_FIXTURES) + "/" + name; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

// Fresh directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "tdclean-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  std::string sub(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

inline int shell(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// Runs one of the fixture repository builders into `dir`.
inline void make_repo(const std::string& script, const std::string& dir) {
  if (shell("bash '" + fixture(script) + "' '" + dir + "' >/dev/null 2>&1") != 0) {
    throw std::runtime_error(script + " failed");
  }
}

inline std::string capture(const std::string& cmd, int* status = nullptr) {
  std::string out;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) throw std::runtime_error("popen failed");
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  const int rc = ::pclose(p);
  if (status) *status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return out;
}

// ---------------------------------------------------------------------------
// Random samples

inline const std::vector<std::string>& word_pool() {
  static const std::vector<std::string> words = {
      "cache",  "retry",  "parse", "config", "stream", "buffer", "socket", "timeout", "encode", "decode",
      "user",   "token",  "queue", "worker", "lock",   "thread", "path",   "file",    "index",  "query",
      "render", "layout", "font",  "color",  "the",    "a",      "of",     "to",      "handle", "error",
      "value",  "key",    "list",  "map",    "loading", "closed", "items", "message", "log",    "fix"};
  return words;
}

inline std::string random_words(tdclean::Rng& rng, std::size_t lo, std::size_t hi) {
  const auto& pool = word_pool();
  const std::size_t n = lo + rng.below(hi - lo + 1);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out.push_back(' ');
    out += pool[rng.below(pool.size())];
  }
  return out;
}

inline std::string random_code_change(tdclean::Rng& rng) {
  static const char kMarkers[] = {'+', '-', ' '};
  const std::size_t n = 1 + rng.below(5);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out.push_back('\n');
    out.push_back(kMarkers[rng.below(3)]);
    out += "    " + random_words(rng, 1, 4);
  }
  return out;
}

inline tdclean::TripleSample random_sample(tdclean::Rng& rng) {
  tdclean::TripleSample s;
  s.code_change = random_code_change(rng);
  s.todo_comment = "todo: " + random_words(rng, 1, 5);
  s.commit_msg = random_words(rng, 1, 6);
  const bool pos = rng.bernoulli(0.5);
  s.label = pos ? tdclean::Label::Positive : tdclean::Label::Negative;
  s.todo_line_kind = pos ? tdclean::LineKind::Removed : tdclean::LineKind::Context;
  s.repo = "r" + std::to_string(rng.below(5));
  char id[41];
  for (int i = 0; i < 40; ++i) id[i] = "0123456789abcdef"[rng.below(16)];
  id[40] = 0;
  s.commit_id = id;
  return s;
}

inline std::vector<tdclean::TripleSample> random_samples(std::size_t n, std::uint64_t seed) {
  tdclean::Rng rng(seed);
  std::vector<tdclean::TripleSample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_sample(rng));
  return out;
}

// Linearly separable toy triples: positives mention "fixed" words in the
// message and remove code, negatives mention unrelated chores.
inline std::vector<tdclean::TripleSample> separable_samples(std::size_t n, std::uint64_t seed) {
  tdclean::Rng rng(seed);
  static const std::vector<std::string> pos_msgs = {"implement", "resolve", "handle", "support", "finish"};
  static const std::vector<std::string> neg_msgs = {"bump", "rename", "format", "reorder", "typo"};
  std::vector<tdclean::TripleSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    tdclean::TripleSample s;
    const bool pos = i % 2 == 0;
    const std::string topic = random_words(rng, 1, 2);
    s.todo_comment = "todo: " + topic;
    if (pos) {
      s.commit_msg = pos_msgs[rng.below(pos_msgs.size())] + " " + topic;
      s.code_change = "+    done_" + std::to_string(rng.below(4)) + "(" + topic + ")\n-    pending()";
    } else {
      s.commit_msg = neg_msgs[rng.below(neg_msgs.size())] + " version";
      s.code_change = " " + topic + "\n+    version = " + std::to_string(rng.below(4));
    }
    s.label = pos ? tdclean::Label::Positive : tdclean::Label::Negative;
    s.todo_line_kind = pos ? tdclean::LineKind::Removed : tdclean::LineKind::Context;
    s.repo = "toy";
    s.commit_id = std::to_string(i);
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Finite-difference gradient check

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// Summed loss over `xs` with dropout masks drawn from a generator seeded
// with `seed`, so every evaluation sees the same masks.
inline double batch_loss(const tdclean::nn::Model& m, const std::vector<tdclean::nn::EncodedSample>& xs,
                         const std::vector<double>& ys, bool train_mode, std::uint64_t seed) {
  tdclean::Rng rng(seed);
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto h = tdclean::nn::encode(xs[i], m);
    const auto r = tdclean::nn::forward(h[0], h[1], h[2], m.mlp, train_mode, &rng);
    total += tdclean::nn::loss(r.score, ys[i]);
  }
  return total;
}

// Compares every analytic gradient with a central difference. The
// relative error uses max(|analytic|, |numeric|) as denominator, floored
// at 1e-7 so that two vanishing gradients compare by absolute difference.
inline GradCheck check_gradients(tdclean::nn::Model m, const std::vector<tdclean::nn::EncodedSample>& xs,
                                 const std::vector<double>& ys, bool train_mode, std::uint64_t seed,
                                 double step = 1e-6) {
  using namespace tdclean::nn;
  Gradients g = Gradients::zeros_like(m);
  tdclean::Rng rng(seed);
  for (std::size_t i = 0; i < xs.size(); ++i) accumulate(m, xs[i], ys[i], train_mode, &rng, g);
  auto params = parameter_blocks(m);
  auto grads = gradient_blocks(g);
  GradCheck out;
  for (std::size_t b = 0; b < params.size(); ++b) {
    for (std::size_t k = 0; k < params[b].size(); ++k) {
      const double saved = params[b][k];
      params[b][k] = saved + step;
      const double up = batch_loss(m, xs, ys, train_mode, seed);
      params[b][k] = saved - step;
      const double down = batch_loss(m, xs, ys, train_mode, seed);
      params[b][k] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = grads[b][k];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
      out.max_rel_error = std::max(out.max_rel_error, std::abs(analytic - numeric) / denom);
      ++out.checked;
    }
  }
  return out;
}

// A small random model and batch for gradient checks: width <= 8, hidden
// layers <= 8 wide.
struct SmallInstance {
  tdclean::nn::Model model;
  std::vector<tdclean::nn::EncodedSample> xs;
  std::vector<double> ys;
};

inline SmallInstance small_instance(std::uint64_t seed) {
  using namespace tdclean::nn;
  tdclean::Rng rng(seed);
  ModelConfig cfg;
  cfg.dim = 2 + rng.below(7);
  cfg.hidden = {1 + rng.below(8), 1 + rng.below(8)};
  cfg.dropout = 0.2;
  auto samples = random_samples(4, seed * 31 + 7);
  std::vector<std::vector<std::string>> docs;
  for (const auto& s : samples) {
    for (Field f : kFields) docs.push_back(model_tokens(field_text(s, f)));
  }
  SmallInstance inst;
  inst.model = init_model(cfg, build_vocab(docs, 1), rng);
  // larger weights than the embedding default so gradients are not tiny
  for (auto& e : inst.model.embeddings) {
    for (double& x : e.data) x *= 10.0;
  }
  // zero biases put dead units exactly on the ReLU kink, where a central
  // difference sees half the slope
  for (auto& l : inst.model.mlp.layers) {
    for (double& b : l.bias) b = rng.uniform(-0.1, 0.1);
  }
  for (const auto& s : samples) {
    inst.xs.push_back(prepare(s, inst.model));
    inst.ys.push_back(s.label == tdclean::Label::Positive ? 1.0 : 0.0);
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Models with a fixed score: all weights zero, so the output is the
// sigmoid of the output bias whatever the input.

inline tdclean::nn::Model constant_model(double output_bias) {
  using namespace tdclean::nn;
  ModelConfig cfg;
  cfg.dim = 4;
  cfg.hidden = {2};
  tdclean::Rng rng(1);
  Model m = init_model(cfg, Vocab::with_specials(1), rng);
  for (auto& e : m.embeddings) std::fill(e.data.begin(), e.data.end(), 0.0);
  for (auto& l : m.mlp.layers) {
    std::fill(l.weight.data.begin(), l.weight.data.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  m.mlp.layers.back().bias[0] = output_bias;
  return m;
}

// Golden corpus comparison: returns an empty string on a match, else a
// description of the first difference.
inline std::string compare_corpus(const std::vector<tdclean::TripleSample>& got,
                                  const std::vector<tdclean::TripleSample>& want) {
  if (got.size() != want.size()) {
    return "expected " + std::to_string(want.size()) + " records, got " + std::to_string(got.size());
  }
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (!(got[i] == want[i])) return "record " + std::to_string(i + 1) + " differs: " + tdclean::to_record(got[i]);
  }
  return {};
}

// ---------------------------------------------------------------------------
// Labeling fixture: "### case NN kind=K lang=L expect=E" headers, each
// followed by its diff.

struct LabelCase {
  std::string name;
  std::string lang;
  std::string expect;  // positive, negative, ignored
  std::string diff;
};

inline std::vector<LabelCase> load_label_cases() {
  std::istringstream in(read_file(fixture("labeling/cases.txt")));
  std::vector<LabelCase> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("### case ", 0) == 0) {
      LabelCase c;
      std::istringstream hs(line.substr(9));
      std::string tok;
      hs >> c.name;
      while (hs >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        auto key = tok.substr(0, eq);
        auto val = tok.substr(eq + 1);
        if (key == "lang") c.lang = val;
        else if (key == "expect") c.expect = val;
      }
      out.push_back(std::move(c));
      continue;
    }
    if (!out.empty()) out.back().diff += line + "\n";
  }
  return out;
}

// Label produced by the library for one case: "positive", "negative",
// "ignored", or "dropped" when a filter removed it before labeling.
inline std::string label_of(const LabelCase& c) {
  tdclean::RawCommit commit{"c" + c.name, "Update module " + c.name, c.diff, "fixture"};
  tdclean::BuildCounters counters;
  auto triple = tdclean::extract_todo_triple(commit, tdclean::parse_language(c.lang), counters);
  if (!triple) return "dropped";
  auto sample = tdclean::finalize_sample(*triple, counters);
  if (!sample) return counters.added_todo ? "ignored" : "dropped";
  return std::string(tdclean::to_string(sample->label));
}

}  // namespace testsupport
