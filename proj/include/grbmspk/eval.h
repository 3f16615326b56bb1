// grbmspk/eval.h

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

#ifndef GRBMSPK_EVAL_H_
#define GRBMSPK_EVAL_H_

#include <span>
#include <string>
#include <vector>

#include "grbmspk/ivector_data.h"
#include "grbmspk/trials.h"

namespace grbm {

/// Every model speaker against every test vector; labelled when the test
/// vector carries a speaker id.
std::vector<Trial> build_trials(const IVectorCorpus &model_corpus, const IVectorCorpus &test_corpus);

struct DetPoint {
  double threshold;
  double fa;
  double fr;
};

struct MetricReport {
  double eer = 0.0;           // interpolated crossing of the FA/FR staircase
  double eer_discrete = 0.0;  // min over sweep points of max(FA, FR)
  double min_dcf = 0.0;
  double dcf_threshold = 0.0;
  double fa_cost = 100.0;
  std::size_t n_target = 0;
  std::size_t n_nontarget = 0;
  std::vector<DetPoint> det_points;  // threshold ascending: FA falls, FR rises
};

/// Sweeps thresholds at -inf, the midpoints of adjacent distinct scores and
/// +inf, accepting a trial iff score >= threshold.
/// minDCF = min over the sweep of FR + fa_cost * FA.
MetricReport compute_metrics(std::span<const double> target_scores,
                             std::span<const double> nontarget_scores, double fa_cost = 100.0);
MetricReport compute_metrics(const ScoreFile &scores, double fa_cost = 100.0);

/// `key value` lines: eer, min_dcf, dcf_threshold, n_target, n_nontarget
/// (plus eer_discrete and fa_cost).
std::string format_metrics(const MetricReport &report);
void save_metrics(const MetricReport &report, const std::string &path);

/// CSV `fa,fr`, one row per sweep point.
void export_det(const MetricReport &report, const std::string &path);
std::vector<std::pair<double, double>> read_det(const std::string &path);

}  // namespace grbm

#endif  // GRBMSPK_EVAL_H_
