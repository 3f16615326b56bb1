// grbmspk/tests/oracles.h

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

#ifndef GRBMSPK_TESTS_ORACLES_H_
#define GRBMSPK_TESTS_ORACLES_H_

// Slow reference implementations used only by the tests. They share no code
// with the library beyond the parameter structs.

#include <vector>

#include "grbmspk/grbm_core.h"
#include "grbmspk/plda.h"

namespace grbm::oracle {

/// Random parameters with entries of the given scale.
GrbmParams random_params(Rng &rng, Eigen::Index p, Eigen::Index dim_s, Eigen::Index dim_c,
                         double scale = 0.6);
Matrix random_matrix(Rng &rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0);

/// Posterior marginals from the full joint over all 2^(dim_s + N dim_c)
/// hidden configurations of an N-vector speaker.
struct BrutePosterior {
  Vector speaker;  // P(s_j = 1 | X)
  Matrix channel;  // P(c_nj = 1 | X), dim_c x N
  long double log_unnormalized = 0;  // log sum_{s,C} exp(-E_N)
};
BrutePosterior brute_posterior(const GrbmParams &params, const Matrix &x);

/// Energy of one vector in long double, written out term by term.
long double brute_energy(const GrbmParams &params, const Vector &x, const Vector &s, const Vector &c);

/// log Z_N: full enumeration of (s, C), with each per-vector Gaussian
/// integral evaluated by trapezoidal quadrature per coordinate.
long double brute_log_partition(const GrbmParams &params, int n_order);

/// log P_N(X) = brute log-unnormalised marginal - brute log Z_N.
long double brute_log_likelihood(const GrbmParams &params, const Matrix &x);

/// Two-covariance model (no channel subspace): the speaker's N vectors are
/// jointly Gaussian with covariance I (x) diag(psi) + 11' (x) VV'.
double two_cov_log_likelihood(const Vector &mean, const Matrix &v, const Vector &psi, const Matrix &x);

/// Independent EM for the two-covariance model, starting from (v, psi).
/// Returns the total log-likelihood after 0..iters iterations.
std::vector<double> two_cov_em(const Vector &mean, Matrix v, Vector psi,
                               const std::vector<Matrix> &speakers, int iters);

/// Metrics by direct enumeration of every distinct decision set.
struct BruteMetrics {
  double min_dcf;
  double eer_discrete;
  double eer;
};
BruteMetrics brute_metrics(const std::vector<double> &target, const std::vector<double> &nontarget,
                           double fa_cost);

}  // namespace grbm::oracle

#endif  // GRBMSPK_TESTS_ORACLES_H_
