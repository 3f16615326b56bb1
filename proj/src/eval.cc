// grbmspk/eval.cc

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

#include "grbmspk/eval.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "grbmspk/binary_io.h"
#include "grbmspk/common.h"
#include "grbmspk/text_format.h"

namespace grbm {

std::vector<Trial> build_trials(const IVectorCorpus &model_corpus, const IVectorCorpus &test_corpus) {
  if (model_corpus.speakers().empty()) throw ValidationError("build_trials: no model speakers");
  if (test_corpus.empty()) throw ValidationError("build_trials: empty test corpus");
  std::vector<Trial> trials;
  trials.reserve(model_corpus.speakers().size() * test_corpus.size());
  for (const auto &spk : model_corpus.speakers()) {
    std::vector<std::string> enroll;
    for (auto i : model_corpus.speaker_records(spk)) enroll.push_back(model_corpus[i].vector_id);
    for (const auto &rec : test_corpus.records()) {
      Trial t{spk, enroll, rec.vector_id, std::nullopt};
      if (rec.speaker_id)
        t.label = *rec.speaker_id == spk ? TrialLabel::kTarget : TrialLabel::kNontarget;
      trials.push_back(std::move(t));
    }
  }
  return trials;
}

namespace {

// Where the FA - FR difference, nonincreasing along the sweep, reaches zero
// first (from_front) or last.
double crossing_value(const std::vector<DetPoint> &pts, bool from_front) {
  const std::size_t n = pts.size();
  auto diff = [&](std::size_t k) { return pts[k].fa - pts[k].fr; };
  auto interpolate = [&](std::size_t a, std::size_t b) {
    double t = diff(a) / (diff(a) - diff(b));
    return pts[a].fr + t * (pts[b].fr - pts[a].fr);
  };
  if (from_front) {
    for (std::size_t k = 0; k < n; ++k) {
      if (diff(k) == 0.0) return pts[k].fr;
      if (diff(k) < 0.0) return interpolate(k - 1, k);
    }
  } else {
    for (std::size_t k = n; k-- > 0;) {
      if (diff(k) == 0.0) return pts[k].fr;
      if (diff(k) > 0.0) return interpolate(k, k + 1);
    }
  }
  throw NumericError("compute_metrics: FA/FR curves never cross");
}

}  // namespace

MetricReport compute_metrics(std::span<const double> target_scores,
                             std::span<const double> nontarget_scores, double fa_cost) {
  MetricReport report;
  report.fa_cost = fa_cost;
  report.n_target = target_scores.size();
  report.n_nontarget = nontarget_scores.size();
  if (report.n_target == 0 || report.n_nontarget == 0)
    throw ValidationError("compute_metrics: need both target and nontarget trials");
  std::vector<double> scores(target_scores.begin(), target_scores.end());
  scores.insert(scores.end(), nontarget_scores.begin(), nontarget_scores.end());
  for (double v : scores)
    if (!std::isfinite(v)) throw ValidationError("compute_metrics: non-finite score");
  auto is_target = [&](std::size_t i) { return i < report.n_target; };

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  const double nt = static_cast<double>(report.n_target);
  const double nn = static_cast<double>(report.n_nontarget);
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Point k rejects everything up to and including the k-th distinct score.
  std::size_t rejected_targets = 0, rejected_nontargets = 0;
  report.det_points.push_back({-kInf, 1.0, 0.0});
  for (std::size_t i = 0; i < order.size();) {
    double value = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == value; ++i)
      (is_target(order[i]) ? rejected_targets : rejected_nontargets)++;
    double threshold = i < order.size() ? 0.5 * (value + scores[order[i]]) : kInf;
    report.det_points.push_back({threshold, (nn - rejected_nontargets) / nn, rejected_targets / nt});
  }

  report.min_dcf = kInf;
  for (const auto &pt : report.det_points) {
    double cost = pt.fr + fa_cost * pt.fa;
    if (cost < report.min_dcf) {
      report.min_dcf = cost;
      report.dcf_threshold = pt.threshold;
    }
  }
  report.eer = 0.5 * (crossing_value(report.det_points, true) +
                      crossing_value(report.det_points, false));
  report.eer_discrete = kInf;
  for (const auto &pt : report.det_points)
    report.eer_discrete = std::min(report.eer_discrete, std::max(pt.fa, pt.fr));
  return report;
}

MetricReport compute_metrics(const ScoreFile &scores, double fa_cost) {
  std::vector<double> target, nontarget;
  for (const auto &e : scores.entries) {
    if (!e.label) throw ValidationError("compute_metrics: score file has unlabeled trials");
    (*e.label == TrialLabel::kTarget ? target : nontarget).push_back(e.score);
  }
  return compute_metrics(target, nontarget, fa_cost);
}

std::string format_metrics(const MetricReport &report) {
  std::string out;
  out += "eer " + text::format_double(report.eer) + "\n";
  out += "eer_discrete " + text::format_double(report.eer_discrete) + "\n";
  out += "min_dcf " + text::format_double(report.min_dcf) + "\n";
  out += "dcf_threshold " + text::format_double(report.dcf_threshold) + "\n";
  out += "fa_cost " + text::format_double(report.fa_cost) + "\n";
  out += "n_target " + std::to_string(report.n_target) + "\n";
  out += "n_nontarget " + std::to_string(report.n_nontarget) + "\n";
  return out;
}

void save_metrics(const MetricReport &report, const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path);
  os << format_metrics(report);
}

void export_det(const MetricReport &report, const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path);
  os << "fa,fr\n";
  for (const auto &pt : report.det_points)
    os << text::format_double(pt.fa) << ',' << text::format_double(pt.fr) << '\n';
  if (!os) throw Error("write failed: " + path);
}

std::vector<std::pair<double, double>> read_det(const std::string &path) {
  auto content = io::read_file(path);
  auto rows = text::lines(content);
  if (rows.empty() || text::trim(rows[0]) != "fa,fr")
    throw ValidationError(path + ": expected 'fa,fr' header");
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (text::trim(rows[i]).empty()) continue;
    auto f = text::split(rows[i], ',');
    auto fa = f.size() == 2 ? text::parse_double(f[0]) : std::nullopt;
    auto fr = f.size() == 2 ? text::parse_double(f[1]) : std::nullopt;
    if (!fa || !fr) throw ValidationError(path + ": bad DET row " + std::to_string(i + 1));
    out.emplace_back(*fa, *fr);
  }
  return out;
}

}  // namespace grbm
