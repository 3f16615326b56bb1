// grbmspk/grbm_train.h

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

#ifndef GRBMSPK_GRBM_TRAIN_H_
#define GRBMSPK_GRBM_TRAIN_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "grbmspk/grbm_core.h"
#include "grbmspk/ivector_data.h"

namespace grbm {

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.5;
  double weight_decay = 0.0;  // applied to the loading matrices only
  int batch_speakers = 256;
  int epochs = 40;
  int cd_steps = 1;
  bool learn_sigma = false;
  double init_weight_std = 0.01;
  std::uint64_t seed = 0;
  int eval_every = 1;
  int threads = 1;

  void validate() const;
};

/// One slot per parameter tensor, laid out like GrbmParams.
struct GradientAccumulator {
  Vector visible_bias;
  Vector speaker_bias;
  Vector channel_bias;
  Matrix speaker_loading;
  Matrix channel_loading;
  Vector log_variance;
  double vector_count = 0.0;

  static GradientAccumulator zeros_like(const GrbmParams &params);

  GradientAccumulator &operator+=(const GradientAccumulator &other);
  GradientAccumulator &operator-=(const GradientAccumulator &other);
  GradientAccumulator &operator*=(double scale);

  /// Euclidean norm over every tensor.
  double norm() const;
  bool all_finite() const;
};

/// b = f = g = 0, z = 0 (unit variances), loadings ~ N(0, init_weight_std^2).
GrbmParams init_params(Eigen::Index dim_p, Eigen::Index dim_s, Eigen::Index dim_c,
                       const TrainConfig &config, Rng &rng);

/// Gradient of log sum_{s,C} exp(-E_N(X, s, C)) with respect to every
/// parameter, using the factorised posteriors.
GradientAccumulator positive_gradient(const GrbmParams &params, const SpeakerData &data);

struct CdResult {
  GradientAccumulator gradient;  // positive_gradient at the reconstruction
  SpeakerData reconstruction;
};

/// m steps of alternating Gibbs sampling started at the data:
/// X -> (s, C) -> X^1 -> ... -> X^m.
CdResult negative_phase_cd(const GrbmParams &params, const SpeakerData &data, int cd_steps, Rng &rng);

/// Gradient of log Z_N, i.e. the model expectation of positive_gradient,
/// by enumerating hidden configurations.
GradientAccumulator exact_negative_gradient(const GrbmParams &params, int n_order,
                                            const EnumerationLimits &limits = {});

/// velocity = momentum * velocity + lr * (gradient - weight_decay * W);
/// params += velocity. Log-variances move only when learn_sigma is set.
void sgd_momentum_step(GrbmParams &params, GradientAccumulator &velocity,
                       const GradientAccumulator &gradient, const TrainConfig &config);

struct EpochStats {
  int epoch = 0;
  double recon_err = 0.0;
  std::optional<double> cv_min_dcf;
  double grad_norm = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;  // epoch whose parameters were returned
};

/// Report CSV: `epoch,recon_err,cv_mindcf,grad_norm,seconds`, with optional
/// leading '# key=value' provenance lines.
std::string format_train_report(const TrainReport &report,
                                 const std::vector<std::pair<std::string, std::string>> &header = {});

struct CrossValidationSets {
  IVectorCorpus model;
  IVectorCorpus test;
};

/// Optimiser state for checkpoints and resumption.
struct TrainState {
  GrbmParams params;
  GradientAccumulator velocity;
  int epoch = 0;
};

/// Writes `path` in the GRBM model format plus `path + ".opt"` holding the
/// momentum buffers and epoch counter.
void save_checkpoint(const TrainState &state, const std::string &path);
TrainState load_checkpoint(const std::string &path);

struct TrainHooks {
  /// Called with epoch 0 before the first update and after every epoch.
  std::function<void(int epoch, const GrbmParams &params)> on_epoch;
  /// If set, training continues from this state instead of init_params.
  std::optional<TrainState> resume;
};

struct TrainResult {
  GrbmParams params;
  TrainReport report;
  TrainState final_state;
};

/// Mini-batch gradient ascent on the normalised log-likelihood with CD-m
/// negative phases. When `cv` is given, the parameters of the epoch with the
/// lowest normalised-cosine minDCF on it are returned.
TrainResult train(const IVectorCorpus &corpus, Eigen::Index dim_s, Eigen::Index dim_c,
                  const TrainConfig &config,
                  const std::optional<CrossValidationSets> &cv = std::nullopt,
                  const TrainHooks &hooks = {});

/// Per-speaker data of every labeled speaker, in corpus order.
std::vector<SpeakerData> speaker_data(const IVectorCorpus &corpus);

/// sum_k log P_{N_k}(X_k) / sum_k N_k with exact partition functions.
double normalized_log_likelihood(const GrbmParams &params, const std::vector<SpeakerData> &speakers,
                                 const EnumerationLimits &limits = {});

/// minDCF of normalised-cosine scoring on F-projected vectors.
double cv_min_dcf(const GrbmParams &params, const CrossValidationSets &cv, double fa_cost = 100.0);

}  // namespace grbm

#endif  // GRBMSPK_GRBM_TRAIN_H_
