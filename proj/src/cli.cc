// grbmspk/cli.cc

// Copyright 2026  The grbmspk Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "grbmspk/cli.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "grbmspk/binary_io.h"
#include "grbmspk/eval.h"
#include "grbmspk/grbm_train.h"
#include "grbmspk/ivector_data.h"
#include "grbmspk/plda.h"
#include "grbmspk/scoring.h"
#include "grbmspk/synthgen.h"
#include "grbmspk/text_format.h"

namespace grbm {

namespace {

namespace fs = std::filesystem;

// Thrown for malformed flag values; mapped to kExitUsage.
class UsageError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

void write_text(const std::string &path, const std::string &content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path);
  os << content;
  if (!os) throw Error("write failed: " + path);
}

// Fills options not given on the command line from a flat `key = value`
// file. Keys are long option names without the dashes; '_' may stand for '-'.
void apply_config(CLI::App &app, const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("cannot open config file " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  const std::string content = buf.str();
  std::size_t line_no = 0;
  for (auto line : text::lines(content)) {
    ++line_no;
    auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#' || trimmed.front() == ';') continue;
    const std::string where = path + ":" + std::to_string(line_no);
    auto eq = trimmed.find('=');
    if (eq == std::string_view::npos) throw UsageError(where + ": expected 'key = value'");
    std::string key(text::trim(trimmed.substr(0, eq)));
    std::string value(text::trim(trimmed.substr(eq + 1)));
    std::replace(key.begin(), key.end(), '_', '-');
    CLI::Option *opt = key == "config" ? nullptr : app.get_option_no_throw("--" + key);
    if (!opt) throw UsageError(where + ": unknown setting '" + key + "'");
    if (opt->count() > 0) continue;  // the command line wins
    try {
      opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::Error &e) {
      throw UsageError(where + ": " + e.what());
    }
  }
}

std::vector<long long> parse_ints(const std::string &s, char sep, std::size_t count, const char *flag) {
  std::vector<long long> out;
  for (auto field : text::split(s, sep)) {
    auto v = text::parse_int(text::trim(field));
    if (!v) throw UsageError(std::string(flag) + ": expected integers, got '" + s + "'");
    out.push_back(*v);
  }
  if (out.size() != count) throw UsageError(std::string(flag) + ": malformed value '" + s + "'");
  return out;
}

CountRange parse_range(const std::string &s, const char *flag) {
  auto v = parse_ints(s, ':', 2, flag);
  return {static_cast<int>(v[0]), static_cast<int>(v[1])};
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string truth;
  int speakers = 100;
  std::string per_speaker = "5:5";
  std::uint64_t seed = 0;
  std::string out_dir;
  double speaker_scale = 8.0;
  double channel_scale = 8.0;
  double duration = 30.0;
  std::string format = "csv";
};

int cmd_synth(const SynthArgs &a, std::ostream &out) {
  SynthSettings settings;
  settings.n_speakers = a.speakers;
  settings.per_speaker = parse_range(a.per_speaker, "--per-speaker");
  settings.seed = a.seed;
  settings.duration_seconds = a.duration;
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);

  SynthResult result;
  if (a.truth.rfind("random:", 0) == 0) {
    auto dims = parse_ints(a.truth.substr(7), ',', 3, "--truth");
    GrbmParams truth = random_truth(dims[0], dims[1], dims[2], mix64(a.seed), a.speaker_scale,
                                    a.channel_scale);
    save_grbm(truth, (dir / "truth.grbm").string());
    result = synth_corpus(truth, settings);
  } else if (io::peek_magic(a.truth) == "PLDA") {
    PldaParams truth = load_plda(a.truth);
    save_plda(truth, (dir / "truth.plda").string());
    result = synth_plda_corpus(truth, settings);
  } else {
    GrbmParams truth = load_grbm(a.truth);
    save_grbm(truth, (dir / "truth.grbm").string());
    result = synth_corpus(truth, settings);
  }
  const bool binary = a.format == "binary";
  const fs::path corpus_path = dir / (binary ? "corpus.ivec" : "corpus.csv");
  save_corpus(result.corpus, corpus_path.string(), binary ? CorpusFormat::kBinary : CorpusFormat::kCsv);
  write_text((dir / "manifest.txt").string(), result.manifest);
  out << "wrote " << result.corpus.size() << " vectors of " << result.corpus.speakers().size()
      << " speakers to " << corpus_path.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct PreprocessArgs {
  std::string data;
  std::string out_dir;
  double min_duration = 10.0;
  std::string train_range = "3:10";
  std::string eval_range = "11:15";
  int cv_min = 15;
  int enroll = 5;
  bool no_whiten = false;
};

int cmd_preprocess(const PreprocessArgs &a, std::ostream &out) {
  PartitionConfig pc;
  pc.train_range = parse_range(a.train_range, "--train-range");
  pc.eval_range = parse_range(a.eval_range, "--eval-range");
  pc.cv_min = a.cv_min;
  pc.enroll_per_speaker = a.enroll;

  IVectorCorpus corpus = filter_by_duration(load_corpus_auto(a.data), a.min_duration);
  CorpusPartition part = partition_by_count(corpus, pc);
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);

  auto emit = [&](const IVectorCorpus &c, const char *name) {
    save_corpus(c, (dir / name).string(), CorpusFormat::kCsv);
    out << name << " " << c.size() << " vectors, " << c.speakers().size() << " speakers\n";
  };
  if (!a.no_whiten) {
    if (part.train.size() < 2) throw ValidationError("preprocess: train partition has fewer than 2 vectors");
    WhiteningTransform w = fit_whitening(part.train);
    save_whitening(w, (dir / "whitening.bin").string());
    part.train = apply_whitening(w, part.train);
    part.model = apply_whitening(w, part.model);
    part.test = apply_whitening(w, part.test);
    part.model_cv = apply_whitening(w, part.model_cv);
    part.test_cv = apply_whitening(w, part.test_cv);
  }
  emit(part.train, "train.csv");
  emit(part.model, "model.csv");
  emit(part.test, "test.csv");
  emit(part.model_cv, "model_cv.csv");
  emit(part.test_cv, "test_cv.csv");
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string dims = "";
  TrainConfig config;
  std::string cv_model;
  std::string cv_test;
  std::string report;
  std::string out;
  std::string checkpoint;
  std::string resume;
  bool plda = false;
  std::string plda_dims = "1,0";
  int em_iters = 20;
  std::string fproj;
};

std::vector<std::pair<std::string, std::string>> train_header(const TrainArgs &a) {
  const TrainConfig &c = a.config;
  return {{"data", a.data},
          {"dims", a.dims},
          {"lr", text::format_double(c.learning_rate)},
          {"momentum", text::format_double(c.momentum)},
          {"weight_decay", text::format_double(c.weight_decay)},
          {"batch", std::to_string(c.batch_speakers)},
          {"epochs", std::to_string(c.epochs)},
          {"cd_steps", std::to_string(c.cd_steps)},
          {"learn_sigma", c.learn_sigma ? "1" : "0"},
          {"init_std", text::format_double(c.init_weight_std)},
          {"seed", std::to_string(c.seed)},
          {"cv_model", a.cv_model},
          {"cv_test", a.cv_test}};
}

int cmd_train_plda(const TrainArgs &a, std::ostream &out) {
  auto dims = parse_ints(a.plda_dims, ',', 2, "--plda-dims");
  IVectorCorpus corpus = load_corpus_auto(a.data);
  if (!a.fproj.empty()) corpus = project_corpus_f(load_grbm(a.fproj), corpus);
  PldaTrainOptions opt;
  opt.speaker_dim = static_cast<int>(dims[0]);
  opt.channel_dim = static_cast<int>(dims[1]);
  opt.em_iters = a.em_iters;
  opt.seed = a.config.seed;
  PldaTrainResult result = plda_train(corpus, opt);
  save_plda(result.params, a.out);

  std::string report = "# data=" + a.data + "\n# plda_dims=" + a.plda_dims + "\n# em_iters=" +
                       std::to_string(a.em_iters) + "\n# seed=" + std::to_string(a.config.seed) + "\n";
  if (!a.fproj.empty()) report += "# fproj=" + a.fproj + "\n";
  report += "iter,log_likelihood\n";
  for (std::size_t k = 0; k < result.log_likelihood.size(); ++k)
    report += std::to_string(k) + "," + text::format_double(result.log_likelihood[k]) + "\n";
  write_text(a.report.empty() ? a.out + ".report.csv" : a.report, report);
  out << "plda log-likelihood " << text::format_double(result.log_likelihood.back()) << "\n";
  return kExitOk;
}

int cmd_train(const TrainArgs &a, std::ostream &out) {
  if (a.plda) return cmd_train_plda(a, out);
  if (a.dims.empty()) throw UsageError("train: --dims is required for GRBM training");
  auto dims = parse_ints(a.dims, ',', 2, "--dims");
  if (a.cv_model.empty() != a.cv_test.empty())
    throw UsageError("train: --cv-model and --cv-test must be given together");

  IVectorCorpus corpus = load_corpus_auto(a.data);
  std::optional<CrossValidationSets> cv;
  if (!a.cv_model.empty()) cv = CrossValidationSets{load_corpus_auto(a.cv_model), load_corpus_auto(a.cv_test)};
  TrainHooks hooks;
  if (!a.resume.empty()) hooks.resume = load_checkpoint(a.resume);

  TrainResult result = train(corpus, dims[0], dims[1], a.config, cv, hooks);
  save_grbm(result.params, a.out);
  if (!a.checkpoint.empty()) save_checkpoint(result.final_state, a.checkpoint);
  auto header = train_header(a);
  header.emplace_back("best_epoch", std::to_string(result.report.best_epoch));
  write_text(a.report.empty() ? a.out + ".report.csv" : a.report, format_train_report(result.report, header));
  out << "trained " << result.report.epochs.size() << " epochs, kept epoch " << result.report.best_epoch
      << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ScoreArgs {
  std::string scorer;
  std::string model;
  std::string plda;
  std::string enroll;
  std::string test;
  bool exact_z = false;
  std::string out;
};

GrbmParams load_grbm_for(const std::string &path, const std::string &scorer) {
  if (io::peek_magic(path) != "GRBM")
    throw UsageError("scorer '" + scorer + "' needs a GRBM model, but " + path + " is not one");
  return load_grbm(path);
}

PldaParams load_plda_for(const std::string &path, const std::string &scorer) {
  if (io::peek_magic(path) != "PLDA")
    throw UsageError("scorer '" + scorer + "' needs a PLDA model, but " + path + " is not one");
  return load_plda(path);
}

int cmd_score(const ScoreArgs &a, std::ostream &out) {
  IVectorCorpus model_corpus = load_corpus_auto(a.enroll);
  IVectorCorpus test_corpus = load_corpus_auto(a.test);
  std::vector<Trial> trials = build_trials(model_corpus, test_corpus);

  ScoreFile scores;
  std::string hash = io::file_hash(a.model);
  if (a.scorer == "llr") {
    GrbmParams params = load_grbm_for(a.model, a.scorer);
    if (!a.exact_z) require_uniform_enrollment(trials);
    scores = score_trials(trials, model_corpus, test_corpus, llr_scorer(params, a.exact_z), a.scorer);
  } else if (a.scorer == "cos" || a.scorer == "cosnorm") {
    GrbmParams params = load_grbm_for(a.model, a.scorer);
    IVectorCorpus model_f = project_corpus_f(params, model_corpus);
    IVectorCorpus test_f = project_corpus_f(params, test_corpus);
    scores = score_trials(trials, model_f, test_f, cosine_scorer(a.scorer == "cosnorm"), a.scorer);
  } else if (a.scorer == "plda") {
    PldaParams params = load_plda_for(a.model, a.scorer);
    scores = score_trials(trials, model_corpus, test_corpus, plda_scorer(params), a.scorer);
  } else if (a.scorer == "plda-fproj") {
    GrbmParams grbm = load_grbm_for(a.model, a.scorer);
    if (a.plda.empty()) throw UsageError("scorer 'plda-fproj' needs --plda");
    PldaParams plda = load_plda_for(a.plda, a.scorer);
    hash = io::content_hash(hash + io::file_hash(a.plda));
    IVectorCorpus model_f = project_corpus_f(grbm, model_corpus);
    IVectorCorpus test_f = project_corpus_f(grbm, test_corpus);
    scores = score_trials(trials, model_f, test_f, plda_scorer(plda), a.scorer);
  } else {
    throw UsageError("unknown scorer '" + a.scorer + "'");
  }
  scores.model_hash = hash;
  scores.settings = {{"enroll", a.enroll}, {"test", a.test}, {"exact_z", a.exact_z ? "1" : "0"}};
  save_scores(scores, a.out);
  out << "scored " << scores.entries.size() << " trials\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string scores;
  double fa_cost = 100.0;
  std::string out;
  std::string det;
};

int cmd_eval(const EvalArgs &a, std::ostream &out) {
  ScoreFile scores = load_scores(a.scores);
  if (!scores.fully_labeled()) throw UsageError("eval: " + a.scores + " has unlabeled trials");
  MetricReport report = compute_metrics(scores, a.fa_cost);
  const std::string text = format_metrics(report);
  if (!a.out.empty()) save_metrics(report, a.out);
  if (!a.det.empty()) export_det(report, a.det);
  out << text;
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct FuseArgs {
  std::vector<std::string> cv_scores;
  std::vector<std::string> apply;
  std::string weights;
  std::string weights_in;
  std::string out;
};

std::vector<ScoreFile> load_all(const std::vector<std::string> &paths) {
  std::vector<ScoreFile> files;
  for (const auto &p : paths) files.push_back(load_scores(p));
  return files;
}

int cmd_fuse(const FuseArgs &a, std::ostream &out) {
  FusionWeights weights;
  if (!a.weights_in.empty()) {
    weights = load_fusion_weights(a.weights_in);
  } else {
    if (a.cv_scores.empty()) throw UsageError("fuse: need --cv-scores or --weights-in");
    std::vector<ScoreFile> cv = load_all(a.cv_scores);
    for (std::size_t k = 0; k < cv.size(); ++k)
      if (!cv[k].fully_labeled()) throw UsageError("fuse: " + a.cv_scores[k] + " has unlabeled trials");
    for (std::size_t k = 1; k < cv.size(); ++k) check_same_trials(cv[0], cv[k]);
    weights = fuse_train(cv);
    out << "fusion objective " << text::format_double(fusion_objective(weights, cv)) << "\n";
  }
  if (!a.weights.empty()) save_fusion_weights(weights, a.weights);
  if (!a.apply.empty()) {
    if (a.out.empty()) throw UsageError("fuse: --apply needs --out");
    std::vector<ScoreFile> eval = load_all(a.apply);
    for (std::size_t k = 1; k < eval.size(); ++k) check_same_trials(eval[0], eval[k]);
    save_scores(fuse_apply(weights, eval), a.out);
  }
  out << format_fusion_weights(weights);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Shared-subspace GRBM speaker verification toolkit", "grbm-spk"};
  app.require_subcommand(1, 1);

  SynthArgs synth;
  auto *c_synth = app.add_subcommand("synth", "Generate a labeled synthetic corpus from a truth model");
  c_synth->add_option("--truth", synth.truth, "Model file (GRBM or PLDA) or random:p,ds,dc")->required();
  c_synth->add_option("--speakers", synth.speakers, "Number of speakers")->check(CLI::PositiveNumber);
  c_synth->add_option("--per-speaker", synth.per_speaker, "Vectors per speaker, lo:hi");
  c_synth->add_option("--seed", synth.seed, "Random seed");
  c_synth->add_option("--out-dir", synth.out_dir, "Output directory")->required();
  c_synth->add_option("--speaker-scale", synth.speaker_scale, "Column norm of F for random truth");
  c_synth->add_option("--channel-scale", synth.channel_scale, "Column norm of G for random truth");
  c_synth->add_option("--duration", synth.duration, "Duration stamped on every vector");
  c_synth->add_option("--format", synth.format, "Corpus format")->check(CLI::IsMember({"csv", "binary"}));

  PreprocessArgs pre;
  auto *c_pre = app.add_subcommand("preprocess", "Filter, partition and whiten a corpus");
  c_pre->add_option("--data", pre.data, "Input corpus")->required();
  c_pre->add_option("--out-dir", pre.out_dir, "Output directory")->required();
  c_pre->add_option("--min-duration", pre.min_duration, "Drop vectors shorter than this (seconds)");
  c_pre->add_option("--train-range", pre.train_range, "Per-speaker counts routed to train, lo:hi");
  c_pre->add_option("--eval-range", pre.eval_range, "Per-speaker counts routed to model/test, lo:hi");
  c_pre->add_option("--cv-min", pre.cv_min, "Speakers with more vectors than this go to the CV sets");
  c_pre->add_option("--enroll", pre.enroll, "Enrollment vectors per model speaker")->check(CLI::PositiveNumber);
  c_pre->add_flag("--no-whiten", pre.no_whiten, "Skip whitening");

  TrainArgs tr;
  auto *c_train = app.add_subcommand("train", "Train a GRBM (or, with --plda, a PLDA model)");
  std::string train_config;
  c_train->add_option("--config", train_config, "Flat 'key = value' file; explicit flags take precedence");
  c_train->add_option("--data", tr.data, "Training corpus");
  c_train->add_option("--dims", tr.dims, "Hidden dimensions dim_s,dim_c");
  c_train->add_option("--epochs", tr.config.epochs, "Epochs");
  c_train->add_option("--lr", tr.config.learning_rate, "Learning rate");
  c_train->add_option("--momentum", tr.config.momentum, "Momentum");
  c_train->add_option("--weight-decay", tr.config.weight_decay, "L2 penalty on F and G");
  c_train->add_option("--batch", tr.config.batch_speakers, "Speakers per mini-batch");
  c_train->add_option("--cd-steps", tr.config.cd_steps, "Gibbs steps per negative phase");
  c_train->add_flag("--learn-sigma", tr.config.learn_sigma, "Also update the log-variances");
  c_train->add_option("--init-std", tr.config.init_weight_std, "Std of the initial loadings");
  c_train->add_option("--seed", tr.config.seed, "Random seed");
  c_train->add_option("--threads", tr.config.threads, "Worker threads")->check(CLI::PositiveNumber);
  c_train->add_option("--eval-every", tr.config.eval_every, "Epochs between CV evaluations");
  c_train->add_option("--cv-model", tr.cv_model, "CV enrollment corpus");
  c_train->add_option("--cv-test", tr.cv_test, "CV test corpus");
  c_train->add_option("--report", tr.report, "Report CSV (default <out>.report.csv)");
  c_train->add_option("--out", tr.out, "Output model file");
  c_train->add_option("--checkpoint", tr.checkpoint, "Also write the final optimiser state here");
  c_train->add_option("--resume", tr.resume, "Continue from a checkpoint");
  c_train->add_flag("--plda", tr.plda, "Train a PLDA model instead");
  c_train->add_option("--plda-dims", tr.plda_dims, "PLDA dimensions q_s,q_c");
  c_train->add_option("--em-iters", tr.em_iters, "PLDA EM iterations");
  c_train->add_option("--fproj", tr.fproj, "Train PLDA on vectors projected by this GRBM's F");

  ScoreArgs sc;
  auto *c_score = app.add_subcommand("score", "Score every model speaker against every test vector");
  c_score->add_option("--scorer", sc.scorer, "Scoring rule")
      ->required()
      ->check(CLI::IsMember({"llr", "cos", "cosnorm", "plda", "plda-fproj"}));
  c_score->add_option("--model", sc.model, "GRBM model (PLDA model for --scorer plda)")->required();
  c_score->add_option("--plda", sc.plda, "PLDA model for --scorer plda-fproj");
  c_score->add_option("--enroll", sc.enroll, "Enrollment corpus")->required();
  c_score->add_option("--test", sc.test, "Test corpus")->required();
  c_score->add_flag("--exact-z", sc.exact_z, "Include the exact partition-function term in LLR scores");
  c_score->add_option("--out", sc.out, "Output score CSV")->required();

  EvalArgs ev;
  auto *c_eval = app.add_subcommand("eval", "EER, minDCF and DET points of a labeled score file");
  c_eval->add_option("--scores", ev.scores, "Score CSV")->required();
  c_eval->add_option("--fa-cost", ev.fa_cost, "Cost of a false acceptance");
  c_eval->add_option("--out", ev.out, "Metrics file");
  c_eval->add_option("--det", ev.det, "DET CSV");

  FuseArgs fu;
  auto *c_fuse = app.add_subcommand("fuse", "Train and apply linear score fusion");
  c_fuse->add_option("--cv-scores", fu.cv_scores, "Labeled score files to train on");
  c_fuse->add_option("--apply", fu.apply, "Score files to fuse");
  c_fuse->add_option("--weights", fu.weights, "Write the weights here");
  c_fuse->add_option("--weights-in", fu.weights_in, "Use these weights instead of training");
  c_fuse->add_option("--out", fu.out, "Fused score CSV");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n";
    const CLI::App *sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  try {
    if (c_synth->parsed()) return cmd_synth(synth, out);
    if (c_pre->parsed()) return cmd_preprocess(pre, out);
    if (c_train->parsed()) {
      if (!train_config.empty()) apply_config(*c_train, train_config);
      if (tr.data.empty() || tr.out.empty()) throw UsageError("train: --data and --out are required");
      return cmd_train(tr, out);
    }
    if (c_score->parsed()) return cmd_score(sc, out);
    if (c_eval->parsed()) return cmd_eval(ev, out);
    if (c_fuse->parsed()) return cmd_fuse(fu, out);
  } catch (const ValidationError &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DimensionError &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace grbm
