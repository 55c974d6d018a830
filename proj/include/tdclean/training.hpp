#pragma once

// Optimisation (gradient clipping, Adam), the training loop with
// best-on-validation checkpointing, prediction, and model files.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdclean/corpus.hpp"
#include "tdclean/metrics.hpp"
#include "tdclean/model.hpp"

namespace tdclean::nn {

inline double global_norm(const std::vector<std::span<double>>& blocks) {
  double sq = 0.0;
  for (auto b : blocks) {
    for (double g : b) sq += g * g;
  }
  return std::sqrt(sq);
}

// Rescales all gradients together when their global L2 norm exceeds
// `max_norm`. Returns the norm before clipping.
inline double clip_gradients(const std::vector<std::span<double>>& grads, double max_norm = 2.0) {
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double f = max_norm / norm;
    for (auto b : grads) {
      for (double& g : b) g *= f;
    }
  }
  return norm;
}

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;

  static AdamState for_blocks(const std::vector<std::span<double>>& params) {
    AdamState s;
    for (auto p : params) {
      s.m.emplace_back(p.size(), 0.0);
      s.v.emplace_back(p.size(), 0.0);
    }
    return s;
  }
};

// One bias-corrected Adam update.
inline void adam_step(const std::vector<std::span<double>>& params, const std::vector<std::span<double>>& grads,
                      AdamState& state, const AdamConfig& cfg = {}) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeMismatch("parameter, gradient and optimizer blocks differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto p = params[b];
    auto g = grads[b];
    auto& m = state.m[b];
    auto& v = state.v[b];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      p[i] -= cfg.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.eps);
    }
  }
}

// ---------------------------------------------------------------------------

struct Prediction {
  double score = 0.5;
  Status status = Status::Unresolved;
};

inline constexpr double kDecisionThreshold = 0.5;

inline Prediction to_prediction(double score) {
  return {score, score >= kDecisionThreshold ? Status::Resolved : Status::Unresolved};
}

inline Prediction predict(const TripleSample& sample, const Model& model, const ExternalVectors* external = nullptr) {
  return to_prediction(score(model, prepare(sample, model, external)));
}

struct TrainConfig {
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double grad_clip_norm = 2.0;
  std::size_t validate_every = 1000;  // batches
  std::size_t max_epochs = 20;
  std::uint64_t seed = 1;
  ComponentMask mask;
  Backend backend = Backend::Internal;
  std::size_t dim = kDefaultInternalWidth;  // ignored by the external backend
  std::vector<std::size_t> hidden;          // empty: default for the width
  double dropout = 0.2;
  std::size_t min_freq = 2;
  std::array<std::size_t, 3> max_lens = kDefaultMaxLens;
};

struct ValidationPoint {
  std::size_t batch = 0;  // batches seen so far
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean batch loss since the previous point
  double val_accuracy = 0.0;
  std::optional<double> val_f1;
};

struct TrainResult {
  Model model;  // best checkpoint
  std::vector<ValidationPoint> history;
  std::size_t best = 0;  // index into history
  bool diverged = false;
};

namespace detail {

inline MetricReport validate(const Model& m, const std::vector<EncodedSample>& xs, const std::vector<TripleSample>& ys) {
  std::vector<Status> preds;
  std::vector<Label> labels;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    preds.push_back(to_prediction(score(m, xs[i])).status);
    labels.push_back(ys[i].label);
  }
  return metrics(confusion(preds, labels));
}

inline bool better(const std::optional<double>& f1, const std::optional<double>& best) {
  if (!f1) return false;
  return !best || *f1 > *best;
}

}  // namespace detail

// Mini-batch training. Validation F1 is computed every `validate_every`
// batches and after the last batch; the checkpoint with the highest F1
// is kept (earliest on ties). A non-finite batch loss stops training and
// the best checkpoint so far is returned.
inline TrainResult train(const DatasetSplit& split, const TrainConfig& cfg, const ExternalVectors* external = nullptr) {
  if (split.train.empty() || split.val.empty()) throw InvalidArgument("training needs non-empty train and val sets");
  if (cfg.batch_size == 0 || cfg.validate_every == 0) throw InvalidArgument("batch size and validation interval must be positive");

  ModelConfig mc;
  mc.backend = cfg.backend;
  mc.mask = cfg.mask;
  mc.max_lens = cfg.max_lens;
  mc.dropout = cfg.dropout;
  mc.min_freq = cfg.min_freq;
  mc.hidden = cfg.hidden;
  if (cfg.backend == Backend::External) {
    if (!external) throw InvalidArgument("the external backend needs a vectors file");
    mc.dim = external->width();
  } else {
    mc.dim = cfg.dim;
  }

  Vocab vocab = Vocab::with_specials(cfg.min_freq);
  if (cfg.backend == Backend::Internal) {
    std::vector<std::vector<std::string>> docs;
    for (const auto& s : split.train) {
      for (Field f : kFields) {
        if (cfg.mask.has(f)) docs.push_back(model_tokens(field_text(s, f)));
      }
    }
    vocab = build_vocab(docs, cfg.min_freq);
  }

  Rng rng(cfg.seed);
  Model model = init_model(mc, std::move(vocab), rng);

  std::vector<EncodedSample> train_x;
  std::vector<double> train_y;
  for (const auto& s : split.train) {
    train_x.push_back(prepare(s, model, external));
    train_y.push_back(s.label == Label::Positive ? 1.0 : 0.0);
  }
  std::vector<EncodedSample> val_x;
  for (const auto& s : split.val) val_x.push_back(prepare(s, model, external));

  TrainResult result;
  result.model = model;
  std::optional<double> best_f1;
  bool have_best = false;

  Gradients grads = Gradients::zeros_like(model);
  auto params = parameter_blocks(model);
  auto gblocks = gradient_blocks(grads);
  AdamState adam = AdamState::for_blocks(params);
  const AdamConfig adam_cfg{cfg.learning_rate};

  std::vector<std::size_t> order(train_x.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::size_t batches = 0;
  double loss_sum = 0.0;
  std::size_t loss_batches = 0;

  auto checkpoint = [&](std::size_t epoch) {
    const auto report = detail::validate(model, val_x, split.val);
    ValidationPoint p{batches, epoch, loss_batches ? loss_sum / static_cast<double>(loss_batches) : 0.0,
                      report.accuracy, report.f1};
    loss_sum = 0.0;
    loss_batches = 0;
    result.history.push_back(p);
    if (!have_best || detail::better(p.val_f1, best_f1)) {
      have_best = true;
      best_f1 = p.val_f1;
      result.best = result.history.size() - 1;
      result.model = model;
    }
  };

  for (std::size_t epoch = 0; epoch < cfg.max_epochs && !result.diverged; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      grads.zero();
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        batch_loss += accumulate(model, train_x[order[k]], train_y[order[k]], true, &rng, grads);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      batch_loss *= inv;
      if (!std::isfinite(batch_loss)) {
        result.diverged = true;
        break;
      }
      grads.scale(inv);
      clip_gradients(gblocks, cfg.grad_clip_norm);
      adam_step(params, gblocks, adam, adam_cfg);
      ++batches;
      loss_sum += batch_loss;
      ++loss_batches;
      if (batches % cfg.validate_every == 0) checkpoint(epoch);
    }
    if (!result.diverged && epoch + 1 == cfg.max_epochs && batches % cfg.validate_every != 0) checkpoint(epoch);
  }
  if (!have_best) checkpoint(0);
  return result;
}

// ---------------------------------------------------------------------------
// Model files: a versioned JSON document.

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json to_json(const Model& m) {
  nlohmann::json j;
  j["format"] = "tdcleaner-model";
  j["version"] = kModelFormatVersion;
  const auto& c = m.config;
  j["config"] = {{"backend", to_string(c.backend)},
                 {"dim", c.dim},
                 {"hidden", c.hidden},
                 {"mask", c.mask.to_string()},
                 {"max_lens", c.max_lens},
                 {"dropout", c.dropout},
                 {"min_freq", c.min_freq}};
  j["vocab"] = m.vocab.tokens;
  nlohmann::json emb = nlohmann::json::array();
  for (const auto& e : m.embeddings) emb.push_back({{"rows", e.rows}, {"cols", e.cols}, {"data", e.data}});
  j["embeddings"] = emb;
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : m.mlp.layers) {
    layers.push_back({{"in", l.in()}, {"out", l.out()}, {"weight", l.weight.data}, {"bias", l.bias}});
  }
  j["mlp"] = {{"dropout", m.mlp.dropout}, {"layers", layers}};
  return j;
}

inline Model model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "tdcleaner-model") throw SchemaViolation(1, "not a model file");
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw SchemaViolation(1, "unsupported model version " + j.at("version").dump());
    }
    Model m;
    const auto& c = j.at("config");
    m.config.backend = parse_backend(c.at("backend").get<std::string>());
    m.config.dim = c.at("dim").get<std::size_t>();
    m.config.hidden = c.at("hidden").get<std::vector<std::size_t>>();
    m.config.mask = ComponentMask::parse(c.at("mask").get<std::string>());
    m.config.max_lens = c.at("max_lens").get<std::array<std::size_t, 3>>();
    m.config.dropout = c.at("dropout").get<double>();
    m.config.min_freq = c.at("min_freq").get<std::size_t>();
    m.vocab.min_freq = m.config.min_freq;
    for (auto& t : j.at("vocab").get<std::vector<std::string>>()) m.vocab.add(std::move(t));
    const auto& emb = j.at("embeddings");
    if (emb.size() != 3) throw SchemaViolation(1, "expected three embedding tables");
    for (std::size_t i = 0; i < 3; ++i) {
      Matrix& e = m.embeddings[i];
      e.rows = emb[i].at("rows").get<std::size_t>();
      e.cols = emb[i].at("cols").get<std::size_t>();
      e.data = emb[i].at("data").get<std::vector<double>>();
      if (e.data.size() != e.rows * e.cols) throw SchemaViolation(1, "embedding table size mismatch");
    }
    m.mlp.dropout = j.at("mlp").at("dropout").get<double>();
    for (const auto& l : j.at("mlp").at("layers")) {
      Dense d;
      d.weight.rows = l.at("out").get<std::size_t>();
      d.weight.cols = l.at("in").get<std::size_t>();
      d.weight.data = l.at("weight").get<std::vector<double>>();
      d.bias = l.at("bias").get<std::vector<double>>();
      if (d.weight.data.size() != d.weight.rows * d.weight.cols || d.bias.size() != d.weight.rows) {
        throw SchemaViolation(1, "dense layer size mismatch");
      }
      m.mlp.layers.push_back(std::move(d));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaViolation(1, e.what());
  }
}

inline void save_model(const Model& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open " + path + " for writing");
  out << to_json(m).dump() << '\n';
  if (!out.flush()) throw IoFailure("write to " + path + " failed");
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path + " for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaViolation(1, e.what());
  }
  return model_from_json(j);
}

}  // namespace tdclean::nn
