// grbmspk/scoring.h

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

#ifndef GRBMSPK_SCORING_H_
#define GRBMSPK_SCORING_H_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "grbmspk/grbm_core.h"
#include "grbmspk/ivector_data.h"
#include "grbmspk/plda.h"
#include "grbmspk/trials.h"

namespace grbm {

/// log Z_N, log Z_1 and log Z_{N+1} for an enrollment size N.
struct PartitionTriplet {
  LogPartition enroll;
  LogPartition single;
  LogPartition joint;
};

PartitionTriplet exact_partition_triplet(const GrbmParams &params, int n_enroll,
                                         const EnumerationLimits &limits = {});

/// Log-likelihood ratio of "test shares the enrollment speaker factor"
/// against "test is independent". Without a partition triplet the constant
/// log(Z_N Z_1 / Z_{N+1}) is omitted, which only preserves ranking among
/// trials with the same enrollment size.
double score_llr(const GrbmParams &params, const SpeakerData &enrollment, const Vector &test,
                 const std::optional<PartitionTriplet> &partition = std::nullopt);

/// F' x / |F' x|. Throws NumericError when the projection vanishes.
Vector project_f(const GrbmParams &params, const Vector &x);

/// project_f applied to every record.
IVectorCorpus project_corpus_f(const GrbmParams &params, const IVectorCorpus &corpus);

/// Cosine between the test vector and the mean enrollment direction. All
/// inputs must be unit vectors (columns of `enrollment`).
double score_cosine(const Matrix &enrollment, const Vector &test);

/// score_cosine divided by |mean enrollment vector|, which equals the
/// average within-set cosine.
double score_cosine_normalized(const Matrix &enrollment, const Vector &test);

/// PLDA score on F-projected, unit-normalised vectors. `enrollment` and
/// `test` are in the (whitened) input space.
double score_plda_projected(const GrbmParams &grbm, const PldaParams &plda_f,
                            const Matrix &enrollment, const Vector &test);

// ---------------------------------------------------------------------------
// Trial-list scoring.

using EnrollmentScorer = std::function<double(const Vector &test)>;
/// Builds a scorer for one enrollment set (columns), so that per-speaker work
/// is done once.
using ScorerFactory = std::function<EnrollmentScorer(const Matrix &enrollment)>;

ScoreFile score_trials(const std::vector<Trial> &trials, const IVectorCorpus &model_corpus,
                       const IVectorCorpus &test_corpus, const ScorerFactory &factory,
                       const std::string &scorer_name);

ScorerFactory llr_scorer(const GrbmParams &params, bool exact_partition,
                         const EnumerationLimits &limits = {});
ScorerFactory cosine_scorer(bool normalized);
ScorerFactory plda_scorer(const PldaParams &params);

/// Throws ValidationError if the trials mix enrollment sizes, which the
/// partition-free LLR cannot rank consistently.
void require_uniform_enrollment(const std::vector<Trial> &trials);

// ---------------------------------------------------------------------------
// Linear fusion.

struct FusionWeights {
  std::vector<double> weights;  // one per system
  double offset = 0.0;
};

struct FusionOptions {
  int max_iterations = 500;
};

/// Class-balanced logistic loss (nats): targets and nontargets each carry
/// half of the total weight.
double fusion_objective(const FusionWeights &weights, const std::vector<ScoreFile> &systems);

/// Minimises fusion_objective with damped Newton steps from zero.
FusionWeights fuse_train(const std::vector<ScoreFile> &systems, const FusionOptions &options = {});

ScoreFile fuse_apply(const FusionWeights &weights, const std::vector<ScoreFile> &systems);

std::string format_fusion_weights(const FusionWeights &weights);
FusionWeights parse_fusion_weights(const std::string &text);
void save_fusion_weights(const FusionWeights &weights, const std::string &path);
FusionWeights load_fusion_weights(const std::string &path);

}  // namespace grbm

#endif  // GRBMSPK_SCORING_H_
