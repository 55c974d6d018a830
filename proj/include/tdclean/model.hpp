#pragma once

// The classifier: three encoders (code change, TODO comment, commit
// message) whose outputs are concatenated and fed to an MLP with a sigmoid
// output giving P(resolved | code change, todo, message).
//
// Two encoder backends exist. Internal: a trainable embedding table per
// field, mean-pooled over the non-padding tokens. External: fixed vectors
// produced by an outside model, looked up by the SHA-256 of the field text.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tdclean/corpus.hpp"
#include "tdclean/digest.hpp"
#include "tdclean/error.hpp"
#include "tdclean/random.hpp"
#include "tdclean/text.hpp"

namespace tdclean::nn {

enum class Field : std::size_t { CodeChange = 0, Todo = 1, Message = 2 };
inline constexpr std::array<Field, 3> kFields = {Field::CodeChange, Field::Todo, Field::Message};
inline constexpr std::size_t index_of(Field f) { return static_cast<std::size_t>(f); }

inline const std::string& field_text(const TripleSample& s, Field f) {
  switch (f) {
    case Field::CodeChange: return s.code_change;
    case Field::Todo: return s.todo_comment;
    case Field::Message: return s.commit_msg;
  }
  return s.code_change;
}

// Which encoders feed the MLP. Disabled encoders contribute no input
// columns at all.
struct ComponentMask {
  std::array<bool, 3> enabled = {true, true, true};

  bool has(Field f) const { return enabled[index_of(f)]; }
  std::size_t count() const { return static_cast<std::size_t>(std::count(enabled.begin(), enabled.end(), true)); }
  bool operator==(const ComponentMask&) const = default;

  // "cc,td,msg" or any non-empty subset.
  static ComponentMask parse(std::string_view spec) {
    ComponentMask m{{false, false, false}};
    std::string item;
    auto take = [&] {
      const std::string name(text::trim(item));
      item.clear();
      if (name.empty()) return;
      if (name == "cc") m.enabled[0] = true;
      else if (name == "td") m.enabled[1] = true;
      else if (name == "msg") m.enabled[2] = true;
      else throw InvalidArgument("unknown component '" + name + "' (expected cc, td or msg)");
    };
    for (char c : spec) {
      if (c == ',') take();
      else item.push_back(c);
    }
    take();
    if (m.count() == 0) throw InvalidArgument("component mask must name at least one of cc, td, msg");
    return m;
  }

  std::string to_string() const {
    static constexpr std::array<std::string_view, 3> kNames = {"cc", "td", "msg"};
    std::string out;
    for (std::size_t i = 0; i < 3; ++i) {
      if (!enabled[i]) continue;
      if (!out.empty()) out.push_back(',');
      out += kNames[i];
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Tokens and vocabulary

// Word runs ([a-z0-9_]) and single punctuation characters; the
// "<commit_id>" / "<issue_id>" placeholders stay whole.
inline std::vector<std::string> model_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (text::is_space(c)) {
      ++i;
      continue;
    }
    if (c == '<') {
      bool matched = false;
      for (auto ph : {text::kCommitIdPlaceholder, text::kIssueIdPlaceholder}) {
        if (s.substr(i, ph.size()) == ph) {
          out.emplace_back(ph);
          i += ph.size();
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    if (text::is_word_char(c)) {
      std::size_t j = i;
      while (j < s.size() && text::is_word_char(s[j])) ++j;
      out.push_back(text::to_lower(s.substr(i, j - i)));
      i = j;
      continue;
    }
    out.emplace_back(1, c);
    ++i;
  }
  return out;
}

struct Vocab {
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr std::int32_t kCls = 2;

  std::vector<std::string> tokens;
  std::unordered_map<std::string, std::int32_t> index;
  std::size_t min_freq = 2;

  std::size_t size() const { return tokens.size(); }

  std::int32_t id(const std::string& token) const {
    auto it = index.find(token);
    return it == index.end() ? kUnk : it->second;
  }

  void add(std::string token) {
    if (index.count(token)) return;
    index.emplace(token, static_cast<std::int32_t>(tokens.size()));
    tokens.push_back(std::move(token));
  }

  static Vocab with_specials(std::size_t min_freq) {
    Vocab v;
    v.min_freq = min_freq;
    v.add("<pad>");
    v.add("<unk>");
    v.add("<cls>");
    return v;
  }

  bool operator==(const Vocab& o) const { return tokens == o.tokens && min_freq == o.min_freq; }
};

// Tokens reaching `min_freq` occurrences, in order of first appearance.
inline Vocab build_vocab(const std::vector<std::vector<std::string>>& docs, std::size_t min_freq = 2) {
  if (docs.empty()) throw EmptyCorpus();
  std::unordered_map<std::string, std::size_t> freq;
  std::vector<std::string> first_seen;
  for (const auto& doc : docs) {
    for (const auto& t : doc) {
      if (freq[t]++ == 0) first_seen.push_back(t);
    }
  }
  Vocab v = Vocab::with_specials(min_freq);
  for (auto& t : first_seen) {
    if (freq[t] >= min_freq) v.add(t);
  }
  return v;
}

// Token ids, truncated to the first `max_len` tokens.
inline std::vector<std::int32_t> to_ids(const std::vector<std::string>& tokens, const Vocab& vocab,
                                        std::size_t max_len) {
  std::vector<std::int32_t> ids;
  const std::size_t n = std::min(tokens.size(), max_len);
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.push_back(vocab.id(tokens[i]));
  return ids;
}

// ---------------------------------------------------------------------------
// Parameters

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool operator==(const Matrix&) const = default;
};

// y = W x + b with W stored as (out x in).
struct Dense {
  Matrix weight;
  std::vector<double> bias;

  std::size_t in() const { return weight.cols; }
  std::size_t out() const { return weight.rows; }
  bool operator==(const Dense&) const = default;
};

struct MlpParams {
  std::vector<Dense> layers;  // hidden layers (ReLU) then the 1-wide output layer
  double dropout = 0.2;

  std::size_t input_width() const { return layers.empty() ? 0 : layers.front().in(); }
  bool operator==(const MlpParams&) const = default;
};

enum class Backend { Internal, External };

inline std::string_view to_string(Backend b) { return b == Backend::Internal ? "internal" : "external"; }

inline Backend parse_backend(std::string_view s) {
  if (s == "internal") return Backend::Internal;
  if (s == "external") return Backend::External;
  throw InvalidArgument("unknown backend '" + std::string(s) + "' (expected internal or external)");
}

inline constexpr std::size_t kExternalWidth = 768;
inline constexpr std::size_t kDefaultInternalWidth = 128;
inline constexpr std::array<std::size_t, 3> kDefaultMaxLens = {200, 30, 30};

// Three hidden layers, halving: 256/128/64 for 768-wide encoders and
// D/2, D/4, D/8 otherwise.
inline std::vector<std::size_t> default_hidden(std::size_t dim) {
  if (dim >= kExternalWidth) return {256, 128, 64};
  return {std::max<std::size_t>(dim / 2, 1), std::max<std::size_t>(dim / 4, 1), std::max<std::size_t>(dim / 8, 1)};
}

struct ModelConfig {
  Backend backend = Backend::Internal;
  std::size_t dim = kDefaultInternalWidth;
  std::vector<std::size_t> hidden;  // empty: default_hidden(dim)
  ComponentMask mask;
  std::array<std::size_t, 3> max_lens = kDefaultMaxLens;
  double dropout = 0.2;
  std::size_t min_freq = 2;

  std::vector<std::size_t> hidden_widths() const { return hidden.empty() ? default_hidden(dim) : hidden; }
  bool operator==(const ModelConfig&) const = default;
};

struct Model {
  ModelConfig config;
  Vocab vocab;
  std::array<Matrix, 3> embeddings;  // |V| x D per field; empty for External or masked fields
  MlpParams mlp;

  bool operator==(const Model&) const = default;
};

inline void glorot_init(Dense& layer, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(layer.in() + layer.out()));
  for (double& w : layer.weight.data) w = rng.uniform(-limit, limit);
  std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
}

inline MlpParams make_mlp(std::size_t input_width, const std::vector<std::size_t>& hidden, double dropout) {
  MlpParams mlp;
  mlp.dropout = dropout;
  std::size_t in = input_width;
  for (std::size_t width : hidden) {
    mlp.layers.push_back({Matrix(width, in), std::vector<double>(width, 0.0)});
    in = width;
  }
  mlp.layers.push_back({Matrix(1, in), std::vector<double>(1, 0.0)});
  return mlp;
}

// Fresh parameters: embedding rows uniform in +-0.05, Glorot-uniform
// weights, zero biases, all drawn from `rng` in a fixed order.
inline Model init_model(const ModelConfig& config, Vocab vocab, Rng& rng) {
  if (config.mask.count() == 0) throw InvalidArgument("component mask is empty");
  Model m;
  m.config = config;
  m.vocab = std::move(vocab);
  if (config.backend == Backend::Internal) {
    for (Field f : kFields) {
      if (!config.mask.has(f)) continue;
      Matrix& table = m.embeddings[index_of(f)];
      table = Matrix(m.vocab.size(), config.dim);
      for (std::size_t r = 0; r < table.rows; ++r) {
        if (r == static_cast<std::size_t>(Vocab::kPad)) continue;
        for (double& x : table.row(r)) x = rng.uniform(-0.05, 0.05);
      }
    }
  }
  m.mlp = make_mlp(config.dim * config.mask.count(), config.hidden_widths(), config.dropout);
  for (auto& layer : m.mlp.layers) glorot_init(layer, rng);
  return m;
}

// ---------------------------------------------------------------------------
// Encoders

// Mean of the embedding rows of non-PAD ids; zero vector when there are
// none.
inline std::vector<double> encode_internal(std::span<const std::int32_t> ids, const Matrix& table) {
  std::vector<double> h(table.cols, 0.0);
  std::size_t n = 0;
  for (auto id : ids) {
    if (id == Vocab::kPad) continue;
    const auto row = table.row(static_cast<std::size_t>(id));
    for (std::size_t k = 0; k < h.size(); ++k) h[k] += row[k];
    ++n;
  }
  if (n > 0) {
    for (double& x : h) x /= static_cast<double>(n);
  }
  return h;
}

// Precomputed encoder outputs keyed by the SHA-256 of the exact text.
// File format: one record per line, "<hex digest> v1 v2 ... vD".
class ExternalVectors {
 public:
  ExternalVectors() = default;

  static ExternalVectors load(std::istream& in) {
    ExternalVectors ev;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (text::trim(line).empty()) continue;
      std::istringstream ls(line);
      std::string hash;
      ls >> hash;
      std::vector<double> v;
      std::string tok;
      while (ls >> tok) {
        try {
          std::size_t used = 0;
          v.push_back(std::stod(tok, &used));
          if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
          throw SchemaViolation(line_no, "bad number '" + tok + "'");
        }
      }
      if (hash.size() != 64) throw SchemaViolation(line_no, "expected a 64-character hex digest");
      if (ev.width_ == 0) ev.width_ = v.size();
      if (v.empty() || v.size() != ev.width_) {
        throw SchemaViolation(line_no, "expected " + std::to_string(ev.width_) + " values, got " +
                                           std::to_string(v.size()));
      }
      ev.vectors_[text::to_lower(hash)] = std::move(v);
    }
    return ev;
  }

  static ExternalVectors load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open " + path + " for reading");
    return load(in);
  }

  void insert(std::string_view text_value, std::vector<double> v) {
    if (width_ == 0) width_ = v.size();
    if (v.size() != width_) throw ShapeMismatch("external vector width mismatch");
    vectors_[sha256_hex(text_value)] = std::move(v);
  }

  const std::vector<double>& lookup(std::string_view text_value) const {
    const std::string h = sha256_hex(text_value);
    auto it = vectors_.find(h);
    if (it == vectors_.end()) throw MissingExternalVector(h);
    return it->second;
  }

  std::size_t width() const { return width_; }
  std::size_t size() const { return vectors_.size(); }

 private:
  std::size_t width_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

// A sample prepared for the model: token ids per enabled field (Internal)
// or the stored vectors per enabled field (External).
struct EncodedSample {
  std::array<std::vector<std::int32_t>, 3> ids;
  std::array<std::vector<double>, 3> fixed;
};

inline EncodedSample prepare(const TripleSample& s, const Model& m, const ExternalVectors* external = nullptr) {
  EncodedSample e;
  for (Field f : kFields) {
    if (!m.config.mask.has(f)) continue;
    const std::size_t i = index_of(f);
    if (m.config.backend == Backend::Internal) {
      e.ids[i] = to_ids(model_tokens(field_text(s, f)), m.vocab, m.config.max_lens[i]);
    } else {
      if (!external) throw InvalidArgument("the external backend needs a vectors file");
      e.fixed[i] = external->lookup(field_text(s, f));
      if (e.fixed[i].size() != m.config.dim) throw ShapeMismatch("external vector width differs from model width");
    }
  }
  return e;
}

// Encoder outputs (h_c, h_t, h_m); masked fields yield empty vectors.
inline std::array<std::vector<double>, 3> encode(const EncodedSample& e, const Model& m) {
  std::array<std::vector<double>, 3> h;
  for (Field f : kFields) {
    if (!m.config.mask.has(f)) continue;
    const std::size_t i = index_of(f);
    h[i] = m.config.backend == Backend::Internal ? encode_internal(e.ids[i], m.embeddings[i]) : e.fixed[i];
  }
  return h;
}

// ---------------------------------------------------------------------------
// MLP forward / backward

inline constexpr double kScoreFloor = 1e-12;

inline double sigmoid(double z) {
  const double s = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return std::clamp(s, kScoreFloor, 1.0 - kScoreFloor);
}

struct ForwardCache {
  std::vector<std::vector<double>> inputs;  // input of each layer after dropout
  std::vector<std::vector<double>> keep;    // dropout scale per input element; empty in eval mode
  std::vector<std::vector<double>> pre;     // pre-activation of each layer
  double score = 0.5;
};

struct ForwardResult {
  double score = 0.5;
  ForwardCache cache;
};

// Dropout (inverted, so inference needs no rescaling) is applied to the
// input of every dense layer in training mode. Hidden layers use ReLU;
// the output passes through the sigmoid.
inline ForwardResult forward(std::span<const double> h_c, std::span<const double> h_t, std::span<const double> h_m,
                             const MlpParams& mlp, bool train_mode, Rng* rng) {
  std::vector<double> x;
  x.reserve(h_c.size() + h_t.size() + h_m.size());
  x.insert(x.end(), h_c.begin(), h_c.end());
  x.insert(x.end(), h_t.begin(), h_t.end());
  x.insert(x.end(), h_m.begin(), h_m.end());
  if (mlp.layers.empty() || x.size() != mlp.input_width()) {
    throw ShapeMismatch("MLP expects " + std::to_string(mlp.input_width()) + " inputs, got " +
                        std::to_string(x.size()));
  }
  if (train_mode && !rng) throw InvalidArgument("training-mode forward needs a random generator");

  ForwardResult res;
  auto& cache = res.cache;
  const double keep_p = 1.0 - mlp.dropout;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const Dense& layer = mlp.layers[l];
    std::vector<double> keep;
    if (train_mode && mlp.dropout > 0.0) {
      keep.resize(x.size());
      for (std::size_t k = 0; k < x.size(); ++k) {
        keep[k] = rng->bernoulli(keep_p) ? 1.0 / keep_p : 0.0;
        x[k] *= keep[k];
      }
    }
    std::vector<double> z(layer.out());
    for (std::size_t o = 0; o < layer.out(); ++o) {
      const auto w = layer.weight.row(o);
      double acc = layer.bias[o];
      for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * x[k];
      z[o] = acc;
    }
    cache.inputs.push_back(x);
    cache.keep.push_back(std::move(keep));
    cache.pre.push_back(z);
    if (l + 1 < mlp.layers.size()) {
      for (double& v : z) v = std::max(0.0, v);
      x = std::move(z);
    } else {
      res.score = sigmoid(z[0]);
    }
  }
  cache.score = res.score;
  return res;
}

inline constexpr double kLossEpsilon = 1e-7;

// Binary cross-entropy with the score clamped to [1e-7, 1 - 1e-7].
inline double loss(double score, double label) {
  const double s = std::clamp(score, kLossEpsilon, 1.0 - kLossEpsilon);
  return -(label * std::log(s) + (1.0 - label) * std::log(1.0 - s));
}

struct MlpGradients {
  std::vector<Dense> layers;

  static MlpGradients zeros_like(const MlpParams& mlp) {
    MlpGradients g;
    for (const auto& l : mlp.layers) g.layers.push_back({Matrix(l.out(), l.in()), std::vector<double>(l.out(), 0.0)});
    return g;
  }
};

// Accumulates d(loss)/d(params) into `grads` and returns d(loss)/d(input),
// i.e. the gradient with respect to the concatenated encoder outputs. The
// dropout masks recorded by forward are reused.
inline std::vector<double> backward(const ForwardCache& cache, double label, const MlpParams& mlp,
                                    MlpGradients& grads) {
  const std::size_t n_layers = mlp.layers.size();
  const double s = cache.score;
  // d(loss)/d(z_L); zero where the loss clamp is active
  const bool clamped = s < kLossEpsilon || s > 1.0 - kLossEpsilon;
  std::vector<double> delta = {clamped ? 0.0 : s - label};

  for (std::size_t li = n_layers; li-- > 0;) {
    const Dense& layer = mlp.layers[li];
    Dense& g = grads.layers[li];
    const auto& in = cache.inputs[li];
    for (std::size_t o = 0; o < layer.out(); ++o) {
      g.bias[o] += delta[o];
      auto grow = g.weight.row(o);
      for (std::size_t k = 0; k < in.size(); ++k) grow[k] += delta[o] * in[k];
    }
    std::vector<double> d_in(layer.in(), 0.0);
    for (std::size_t o = 0; o < layer.out(); ++o) {
      const auto w = layer.weight.row(o);
      for (std::size_t k = 0; k < d_in.size(); ++k) d_in[k] += w[k] * delta[o];
    }
    const auto& keep = cache.keep[li];
    if (!keep.empty()) {
      for (std::size_t k = 0; k < d_in.size(); ++k) d_in[k] *= keep[k];
    }
    if (li > 0) {
      const auto& prev_pre = cache.pre[li - 1];
      for (std::size_t k = 0; k < d_in.size(); ++k) {
        if (prev_pre[k] <= 0.0) d_in[k] = 0.0;
      }
    }
    delta = std::move(d_in);
  }
  return delta;
}

struct Gradients {
  MlpGradients mlp;
  std::array<Matrix, 3> embeddings;

  static Gradients zeros_like(const Model& m) {
    Gradients g;
    g.mlp = MlpGradients::zeros_like(m.mlp);
    for (std::size_t i = 0; i < 3; ++i) g.embeddings[i] = Matrix(m.embeddings[i].rows, m.embeddings[i].cols);
    return g;
  }

  void zero() {
    for (auto& l : mlp.layers) {
      std::fill(l.weight.data.begin(), l.weight.data.end(), 0.0);
      std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
    for (auto& e : embeddings) std::fill(e.data.begin(), e.data.end(), 0.0);
  }

  void scale(double f) {
    for (auto& l : mlp.layers) {
      for (double& x : l.weight.data) x *= f;
      for (double& x : l.bias) x *= f;
    }
    for (auto& e : embeddings) {
      for (double& x : e.data) x *= f;
    }
  }
};

// Forward + backward for one sample; adds its gradients to `grads` and
// returns the sample loss.
inline double accumulate(const Model& m, const EncodedSample& e, double label, bool train_mode, Rng* rng,
                         Gradients& grads) {
  const auto h = encode(e, m);
  auto res = forward(h[0], h[1], h[2], m.mlp, train_mode, rng);
  const double l = loss(res.score, label);
  const auto d_x = backward(res.cache, label, m.mlp, grads.mlp);
  if (m.config.backend != Backend::Internal) return l;
  std::size_t offset = 0;
  for (Field f : kFields) {
    const std::size_t i = index_of(f);
    if (!m.config.mask.has(f)) continue;
    const auto& ids = e.ids[i];
    const std::size_t n = static_cast<std::size_t>(std::count_if(ids.begin(), ids.end(), [](auto id) { return id != Vocab::kPad; }));
    if (n > 0) {
      const double inv = 1.0 / static_cast<double>(n);
      for (auto id : ids) {
        if (id == Vocab::kPad) continue;
        auto row = grads.embeddings[i].row(static_cast<std::size_t>(id));
        for (std::size_t k = 0; k < row.size(); ++k) row[k] += d_x[offset + k] * inv;
      }
    }
    offset += m.config.dim;
  }
  return l;
}

inline double score(const Model& m, const EncodedSample& e) {
  const auto h = encode(e, m);
  return forward(h[0], h[1], h[2], m.mlp, false, nullptr).score;
}

// Parameter blocks in a fixed order (per layer: weight, bias; then the
// embedding tables), paired with the matching gradient blocks.
inline std::vector<std::span<double>> parameter_blocks(Model& m) {
  std::vector<std::span<double>> out;
  for (auto& l : m.mlp.layers) {
    out.emplace_back(l.weight.data);
    out.emplace_back(l.bias);
  }
  for (auto& e : m.embeddings) {
    if (!e.data.empty()) out.emplace_back(e.data);
  }
  return out;
}

inline std::vector<std::span<double>> gradient_blocks(Gradients& g) {
  std::vector<std::span<double>> out;
  for (auto& l : g.mlp.layers) {
    out.emplace_back(l.weight.data);
    out.emplace_back(l.bias);
  }
  for (auto& e : g.embeddings) {
    if (!e.data.empty()) out.emplace_back(e.data);
  }
  return out;
}

}  // namespace tdclean::nn
