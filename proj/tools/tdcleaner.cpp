// tdcleaner: mine TODO triples from git history, train and evaluate the
// classifier and the baselines, and scan repositories for obsolete TODOs.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tdclean/tdclean.hpp"

namespace {

using namespace tdclean;

void write_error(const std::string& kind, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  std::cerr << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << std::endl;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open " + path + " for writing");
  return out;
}

struct MineArgs {
  std::string repo;
  std::string out;
};

int run_mine(const MineArgs& a) {
  const auto r = git::mine(a.repo, a.out);
  std::cout << "mined " << r.commits << " commits from " << a.repo << " into " << a.out;
  if (r.skipped) std::cout << " (" << r.skipped << " skipped)";
  std::cout << "\n";
  return 0;
}

struct BuildArgs {
  std::string in;
  std::string out;
  std::string lang = "python";
  std::string stats;
  std::uint64_t split_seed = 42;
  std::string review;
  std::size_t review_pos = 100;
  std::size_t review_neg = 100;
  std::uint64_t review_seed = 7;
};

int run_build(const BuildArgs& a) {
  const Language lang = parse_language(a.lang);
  const auto commits = read_commits(a.in);
  const auto built = build_samples(commits, lang);
  write_corpus(built.samples, a.out);

  CorpusStats st;
  st.todo_commits = built.counters.todo_commits;
  st.positives = built.counters.positives;
  st.negatives = built.counters.negatives;
  if (built.samples.size() >= 10) st = compute_stats(built.counters.todo_commits, split_dataset(built.samples, a.split_seed));
  const std::string report = format_stats(st, to_string(lang)) + "\n" + format_counters(built.counters);
  auto stats_out = open_output(a.stats.empty() ? a.out + ".stats.txt" : a.stats);
  stats_out << report;
  std::cout << report;

  if (!a.review.empty()) {
    auto picked = sample_for_manual_check(built.samples, a.review_pos, a.review_neg, a.review_seed);
    auto review_out = open_output(a.review);
    write_manual_check_report(review_out, picked);
  }
  return 0;
}

struct TrainArgs {
  std::string corpus;
  std::string out;
  std::string mask = "cc,td,msg";
  std::string backend = "internal";
  std::string vectors;
  std::uint64_t seed = 1;
  std::uint64_t split_seed = 42;
  std::size_t epochs = 20;
  std::size_t dim = nn::kDefaultInternalWidth;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double clip = 2.0;
  std::size_t validate_every = 1000;
  std::size_t min_freq = 2;
  std::string history;
};

int run_train(const TrainArgs& a) {
  const auto samples = read_corpus(a.corpus);
  const auto split = split_dataset(samples, a.split_seed);
  nn::TrainConfig cfg;
  cfg.mask = nn::ComponentMask::parse(a.mask);
  cfg.backend = nn::parse_backend(a.backend);
  cfg.seed = a.seed;
  cfg.max_epochs = a.epochs;
  cfg.dim = a.dim;
  cfg.batch_size = a.batch_size;
  cfg.learning_rate = a.lr;
  cfg.grad_clip_norm = a.clip;
  cfg.validate_every = a.validate_every;
  cfg.min_freq = a.min_freq;
  std::optional<nn::ExternalVectors> external;
  if (cfg.backend == nn::Backend::External) {
    if (a.vectors.empty()) throw InvalidArgument("--backend external requires --vectors");
    external = nn::ExternalVectors::load(a.vectors);
  }
  const auto result = nn::train(split, cfg, external ? &*external : nullptr);
  nn::save_model(result.model, a.out);

  std::ofstream hist;
  if (!a.history.empty()) hist = open_output(a.history);
  for (std::size_t i = 0; i < result.history.size(); ++i) {
    const auto& p = result.history[i];
    nlohmann::ordered_json j;
    j["batch"] = p.batch;
    j["epoch"] = p.epoch;
    j["train_loss"] = p.train_loss;
    j["val_accuracy"] = p.val_accuracy;
    j["val_f1"] = p.val_f1 ? nlohmann::ordered_json(*p.val_f1) : nlohmann::ordered_json(nullptr);
    j["best"] = i == result.best;
    if (hist) hist << j.dump() << "\n";
  }
  const auto& best = result.history[result.best];
  std::cout << "trained on " << split.train.size() << " samples (" << result.history.size()
            << " validations); best val F1 " << format_percent(best.val_f1) << " at batch " << best.batch
            << (result.diverged ? " [diverged]" : "") << "; model written to " << a.out << "\n";
  return result.diverged ? 3 : 0;
}

struct EvalArgs {
  std::string corpus;
  std::string model;
  std::string vectors;
  bool baselines = false;
  std::optional<double> irsc_threshold;
  bool irsc_sweep = false;
  std::uint64_t split_seed = 42;
  std::string format = "text";
  std::string dataset = "test";
};

int run_eval(const EvalArgs& a) {
  const auto samples = read_corpus(a.corpus);
  const auto split = split_dataset(samples, a.split_seed);
  if (a.model.empty() && !a.baselines) throw InvalidArgument("nothing to evaluate: pass --model and/or --baselines");
  std::vector<MetricReport> rows;
  std::vector<std::string> notes;

  if (a.baselines) {
    for (bool stem : {true, false}) {
      const std::string suffix = stem ? "" : " (no stem)";
      rows.push_back(evaluate([stem](const TripleSample& s) { return baselines::tco(s, stem); }, split.test, "TCO" + suffix, a.dataset));
      rows.push_back(evaluate([stem](const TripleSample& s) { return baselines::tmo(s, stem); }, split.test, "TMO" + suffix, a.dataset));
      rows.push_back(evaluate([stem](const TripleSample& s) { return baselines::tcmo(s, stem); }, split.test, "TCMO" + suffix, a.dataset));
    }
    const auto bg = baselines::background_from(split.train);
    double threshold = a.irsc_threshold.value_or(baselines::kDefaultIrscThreshold);
    if (a.irsc_sweep) {
      std::optional<double> best_f1;
      for (int step = 0; step <= 20; ++step) {
        const double t = step * 0.05;
        auto r = evaluate([&](const TripleSample& s) { return baselines::irsc(s, bg, t); }, split.val);
        if (r.f1 && (!best_f1 || *r.f1 > *best_f1)) {
          best_f1 = r.f1;
          threshold = t;
        }
      }
      notes.push_back("IRSC threshold " + std::to_string(threshold) + " selected on the validation split");
    }
    rows.push_back(evaluate([&](const TripleSample& s) { return baselines::irsc(s, bg, threshold); }, split.test, "IRSC", a.dataset));
  }
  if (!a.model.empty()) {
    const auto model = nn::load_model(a.model);
    std::optional<nn::ExternalVectors> external;
    if (!a.vectors.empty()) external = nn::ExternalVectors::load(a.vectors);
    const nn::ExternalVectors* ev = external ? &*external : nullptr;
    rows.push_back(evaluate([&](const TripleSample& s) { return nn::predict(s, model, ev).status; }, split.test,
                            "TDCleaner[" + model.config.mask.to_string() + "]", a.dataset));
  }

  if (a.format == "jsonl") {
    for (const auto& r : rows) std::cout << to_record(r) << "\n";
  } else {
    std::cout << format_table(rows);
    for (const auto& n : notes) std::cout << n << "\n";
  }
  return 0;
}

struct ScanArgs {
  std::string repo;
  std::string model;
  std::string report;
  std::string lang = "python";
  std::string vectors;
};

int run_scan(const ScanArgs& a) {
  const auto model = nn::load_model(a.model);
  std::optional<nn::ExternalVectors> external;
  if (!a.vectors.empty()) external = nn::ExternalVectors::load(a.vectors);
  ScanOptions opts{parse_language(a.lang), external ? &*external : nullptr};
  const auto findings = scan(a.repo, model, opts);
  std::ofstream file;
  if (!a.report.empty()) file = open_output(a.report);
  std::ostream& out = a.report.empty() ? std::cout : file;
  for (const auto& f : findings) out << to_record(f) << "\n";
  if (!a.report.empty()) {
    std::size_t potential = 0;
    for (const auto& f : findings) potential += f.kind == FindingKind::PotentialObsolete;
    std::cout << findings.size() << " findings (" << potential << " potential, " << findings.size() - potential
              << " intermediate) written to " << a.report << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detect obsolete TODO comments from version-control history"};
  app.require_subcommand(1);

  MineArgs mine_args;
  auto* mine = app.add_subcommand("mine", "Extract every commit of a repository with its diff");
  mine->add_option("--repo", mine_args.repo, "Repository path")->required();
  mine->add_option("--out", mine_args.out, "Output commit file")->required();

  BuildArgs build_args;
  auto* build = app.add_subcommand("build", "Build labeled triples from mined commits");
  build->add_option("--in", build_args.in, "Mined commit file")->required();
  build->add_option("--out", build_args.out, "Output corpus file")->required();
  build->add_option("--lang", build_args.lang, "python or java")->check(CLI::IsMember({"python", "java"}));
  build->add_option("--stats", build_args.stats, "Statistics report (default: <out>.stats.txt)");
  build->add_option("--split-seed", build_args.split_seed, "Seed of the train/val/test split");
  build->add_option("--review", build_args.review, "Write a manual-check sample report to this file");
  build->add_option("--review-pos", build_args.review_pos, "Positives in the manual-check sample");
  build->add_option("--review-neg", build_args.review_neg, "Negatives in the manual-check sample");
  build->add_option("--review-seed", build_args.review_seed, "Seed of the manual-check sample");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train the classifier on a corpus");
  train->add_option("--corpus", train_args.corpus, "Corpus file")->required();
  train->add_option("--out", train_args.out, "Output model file")->required();
  train->add_option("--mask", train_args.mask, "Encoders to use: any of cc,td,msg");
  train->add_option("--backend", train_args.backend, "internal or external")->check(CLI::IsMember({"internal", "external"}));
  train->add_option("--vectors", train_args.vectors, "External embedding file");
  train->add_option("--seed", train_args.seed, "Initialisation and shuffling seed");
  train->add_option("--split-seed", train_args.split_seed, "Seed of the train/val/test split");
  train->add_option("--epochs", train_args.epochs, "Maximum epochs");
  train->add_option("--dim", train_args.dim, "Embedding width of the internal encoders");
  train->add_option("--batch-size", train_args.batch_size, "Mini-batch size");
  train->add_option("--lr", train_args.lr, "Adam learning rate");
  train->add_option("--clip", train_args.clip, "Gradient norm limit");
  train->add_option("--validate-every", train_args.validate_every, "Validation interval in batches");
  train->add_option("--min-freq", train_args.min_freq, "Minimum token frequency for the vocabulary");
  train->add_option("--history", train_args.history, "Write the validation history here");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate the classifier and/or the baselines on the test split");
  eval->add_option("--corpus", eval_args.corpus, "Corpus file")->required();
  eval->add_option("--model", eval_args.model, "Model file");
  eval->add_option("--vectors", eval_args.vectors, "External embedding file");
  eval->add_flag("--baselines", eval_args.baselines, "Evaluate TCO, TMO, TCMO and IRSC");
  auto* thr = eval->add_option("--irsc-threshold", eval_args.irsc_threshold, "IRSC cosine threshold");
  auto* sweep = eval->add_flag("--irsc-sweep", eval_args.irsc_sweep, "Pick the IRSC threshold on the validation split");
  thr->excludes(sweep);
  eval->add_option("--split-seed", eval_args.split_seed, "Seed of the train/val/test split");
  eval->add_option("--format", eval_args.format, "text or jsonl")->check(CLI::IsMember({"text", "jsonl"}));
  eval->add_option("--dataset", eval_args.dataset, "Dataset name for the report");

  ScanArgs scan_args;
  auto* scan = app.add_subcommand("scan", "Report TODOs that were resolved but not removed");
  scan->add_option("--repo", scan_args.repo, "Repository path")->required();
  scan->add_option("--model", scan_args.model, "Model file")->required();
  scan->add_option("--report", scan_args.report, "Write findings here instead of stdout");
  scan->add_option("--lang", scan_args.lang, "python or java")->check(CLI::IsMember({"python", "java"}));
  scan->add_option("--vectors", scan_args.vectors, "External embedding file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    write_error("UsageError", e.what());
    return 2;
  }

  try {
    if (*mine) return run_mine(mine_args);
    if (*build) return run_build(build_args);
    if (*train) return run_train(train_args);
    if (*eval) return run_eval(eval_args);
    if (*scan) return run_scan(scan_args);
  } catch (const tdclean::Error& e) {
    write_error(e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    write_error("InternalError", e.what());
    return 1;
  }
  return 0;
}
