// grbmspk/grbm_core.h

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

#ifndef GRBMSPK_GRBM_CORE_H_
#define GRBMSPK_GRBM_CORE_H_

#include <string>

#include "grbmspk/common.h"
#include "grbmspk/rng.h"

namespace grbm {

/// Parameters of a Gaussian-binary RBM whose hidden layer is split into a
/// speaker factor (shared by all vectors of a speaker) and a channel factor
/// (one per vector).
///
/// Variances are stored only as log-variances; sigma^2 = exp(log_variance).
struct GrbmParams {
  Vector visible_bias;     // b, p
  Vector speaker_bias;     // f, dim_s
  Vector channel_bias;     // g, dim_c
  Matrix speaker_loading;  // F, p x dim_s
  Matrix channel_loading;  // G, p x dim_c
  Vector log_variance;     // z, p

  static GrbmParams zeros(Eigen::Index p, Eigen::Index dim_s, Eigen::Index dim_c);

  Eigen::Index dim_p() const { return visible_bias.size(); }
  Eigen::Index dim_s() const { return speaker_bias.size(); }
  Eigen::Index dim_c() const { return channel_bias.size(); }

  Vector variance() const { return log_variance.array().exp(); }
  Vector inv_variance() const { return (-log_variance.array()).exp(); }

  /// Throws DimensionError / NumericError if the shapes are inconsistent or
  /// any entry is non-finite.
  void validate() const;
};

/// The vectors of one speaker, as columns, with their cached sum.
class SpeakerData {
 public:
  explicit SpeakerData(Matrix vectors);

  const Matrix &vectors() const { return vectors_; }
  const Vector &sum() const { return sum_; }
  Eigen::Index count() const { return vectors_.cols(); }
  Eigen::Index dim() const { return vectors_.rows(); }

 private:
  Matrix vectors_;
  Vector sum_;
};

/// One joint hidden configuration: a binary speaker vector plus one binary
/// channel vector per visible vector (columns of `channel`).
struct LatentState {
  Vector speaker;  // dim_s, entries in {0, 1}
  Matrix channel;  // dim_c x N, entries in {0, 1}

  Eigen::Index count() const { return channel.cols(); }
};

struct LogPartition {
  int n_order = 0;
  double log_z = 0.0;
};

/// Bounds for anything that enumerates hidden configurations.
struct EnumerationLimits {
  int max_factor_dim = 14;   // per factor
  int max_total_bits = 24;   // dim_s + dim_c
};

/// Throws CapacityError if exact enumeration is not allowed for these dims.
void check_enumerable(const GrbmParams &params, const EnumerationLimits &limits);

/// Binary vector holding the low `bits` bits of `index`.
Vector bits_of(std::uint64_t index, Eigen::Index bits);

double energy(const GrbmParams &params, const Vector &x, const Vector &s, const Vector &c);
double energy_total(const GrbmParams &params, const SpeakerData &data, const LatentState &latent);

/// P(s_j = 1 | X) for every j.
Vector posterior_speaker(const GrbmParams &params, const SpeakerData &data);

/// P(c_j = 1 | x) for every j.
Vector posterior_channel(const GrbmParams &params, const Vector &x);

/// posterior_channel for every vector of `data`, as columns.
Matrix posterior_channel_all(const GrbmParams &params, const SpeakerData &data);

/// x_n ~ Normal(b + F s + G c_n, diag(sigma^2)).
SpeakerData sample_visible(const GrbmParams &params, const LatentState &latent, Rng &rng);

/// Binarises the posteriors against fresh Uniform(0,1) thresholds.
LatentState sample_latent(const GrbmParams &params, const SpeakerData &data, Rng &rng);

/// log of the integral over x of exp(-E(x, s, c)) for every hidden
/// configuration; entry (i, k) is for s = bits_of(i), c = bits_of(k).
Matrix config_log_integrals(const GrbmParams &params, const EnumerationLimits &limits = {});

/// Exact log Z_N by enumerating speaker and channel configurations; the
/// channel sum factorises over the N vectors.
LogPartition log_partition_exact(const GrbmParams &params, int n_order,
                                 const EnumerationLimits &limits = {});

/// log sum_{s,C} exp(-E_N(X, s, C)), i.e. log P_N(X) + log Z_N.
double log_unnormalized_marginal(const GrbmParams &params, const SpeakerData &data);

/// log P_N(X).
double log_marginal(const GrbmParams &params, const SpeakerData &data, const LogPartition &log_z);

/// log P_N(X, s, C).
double log_joint(const GrbmParams &params, const SpeakerData &data, const LatentState &latent,
                 const LogPartition &log_z);

struct GenerateOptions {
  EnumerationLimits limits;
  /// Above the enumeration cap, fall back to block Gibbs sampling instead of
  /// throwing CapacityError.
  bool allow_gibbs_fallback = true;
  int gibbs_burn_in = 1000;
};

struct GeneratedSpeaker {
  LatentState latent;
  SpeakerData data;
};

/// Draws (s, C) from the model prior P_N(s, C), then X given (s, C).
GeneratedSpeaker generate_speaker(const GrbmParams &params, int n_vectors, Rng &rng,
                                  const GenerateOptions &options = {});

/// Model file: "GRBM", u32 version, u32 p, dim_s, dim_c, then b, f, g, z,
/// F and G (row-major) as little-endian f64.
void save_grbm(const GrbmParams &params, const std::string &path);
GrbmParams load_grbm(const std::string &path);
void write_grbm(const GrbmParams &params, std::ostream &os);
GrbmParams read_grbm(std::istream &is, const std::string &what);

}  // namespace grbm

#endif  // GRBMSPK_GRBM_CORE_H_
