// grbmspk/plda.h

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

#ifndef GRBMSPK_PLDA_H_
#define GRBMSPK_PLDA_H_

#include <cstdint>
#include <string>
#include <vector>

#include "grbmspk/common.h"
#include "grbmspk/ivector_data.h"

namespace grbm {

/// Two-subspace Gaussian PLDA:
///   x = mean + V h_s + U h_c + e,  h_s ~ N(0, I) shared by a speaker,
///   h_c ~ N(0, I) per vector,      e ~ N(0, diag(residual_variance)).
struct PldaParams {
  Vector mean;               // p
  Matrix speaker_loading;    // V, p x q_s
  Matrix channel_loading;    // U, p x q_c
  Vector residual_variance;  // p, all > 0

  Eigen::Index dim() const { return mean.size(); }
  Eigen::Index speaker_dim() const { return speaker_loading.cols(); }
  Eigen::Index channel_dim() const { return channel_loading.cols(); }

  void validate() const;
};

struct PldaTrainOptions {
  int speaker_dim = 1;
  int channel_dim = 0;
  int em_iters = 20;
  std::uint64_t seed = 0;
};

/// Joint posterior of the latent factors of one speaker. Every channel factor
/// shares the same marginal covariance and cross-covariance with h_s.
struct PldaPosterior {
  Vector speaker_mean;   // E[h_s]
  Matrix speaker_cov;    // Cov(h_s)
  Matrix channel_means;  // E[h_c,n] as columns
  Matrix channel_cov;    // Cov(h_c,n)
  Matrix cross_cov;      // Cov(h_s, h_c,n), q_s x q_c
};

/// mean = sample mean; V, U ~ N(0, (0.1 * mean feature std)^2); residual =
/// diagonal of the sample covariance.
PldaParams plda_init(const IVectorCorpus &corpus, int speaker_dim, int channel_dim,
                     std::uint64_t seed);

PldaPosterior plda_posterior(const PldaParams &params, const Matrix &speaker_vectors);

/// One EM iteration. The mean stays fixed at its initial value.
PldaParams plda_em_step(const PldaParams &params, const IVectorCorpus &corpus);

/// log p(x_1..x_N) with the shared speaker factor integrated out.
double plda_speaker_log_likelihood(const PldaParams &params, const Matrix &speaker_vectors);

/// Sum of plda_speaker_log_likelihood over the labeled speakers of `corpus`.
double plda_log_likelihood(const PldaParams &params, const IVectorCorpus &corpus);

struct PldaTrainResult {
  PldaParams params;
  std::vector<double> log_likelihood;  // [0] at init, [k] after k iterations
};

PldaTrainResult plda_train(const IVectorCorpus &corpus, const PldaTrainOptions &options);

/// log p(E, t | same speaker) - log p(E) - log p(t), integrating the shared
/// speaker factor over all N + 1 vectors.
double plda_score(const PldaParams &params, const Matrix &enrollment, const Vector &test);

/// "PLDA" magic, u32 version, u32 p, q_s, q_c, then mean, V, U (row-major)
/// and residual variance as little-endian f64.
void save_plda(const PldaParams &params, const std::string &path);
PldaParams load_plda(const std::string &path);

}  // namespace grbm

#endif  // GRBMSPK_PLDA_H_
