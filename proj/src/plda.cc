// grbmspk/plda.cc

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

#include "grbmspk/plda.h"

#include <cmath>
#include <fstream>

#include "grbmspk/binary_io.h"
#include "grbmspk/rng.h"

namespace grbm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kMinResidual = 1e-10;

Matrix spd_inverse(const Matrix &m, const char *what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw NumericError(std::string(what) + ": matrix not positive definite");
  return llt.solve(Matrix::Identity(m.rows(), m.cols()));
}

double spd_log_det(const Matrix &m, const char *what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw NumericError(std::string(what) + ": matrix not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

// Quantities shared by every speaker for fixed parameters.
struct PldaCache {
  Vector inv_residual;     // Psi^-1
  Matrix channel_prec;     // D = I + U' Psi^-1 U
  Matrix channel_prec_inv; // D^-1
  Matrix within_inv;       // C_w^-1, C_w = U U' + Psi
  double within_log_det;   // log det C_w
  Matrix v_within_inv;     // V' C_w^-1
  Matrix v_within_v;       // V' C_w^-1 V

  explicit PldaCache(const PldaParams &params) {
    const Eigen::Index qc = params.channel_dim();
    inv_residual = params.residual_variance.cwiseInverse();
    within_inv = inv_residual.asDiagonal();
    within_log_det = params.residual_variance.array().log().sum();
    if (qc > 0) {
      Matrix psi_inv_u = inv_residual.asDiagonal() * params.channel_loading;
      channel_prec = Matrix::Identity(qc, qc) + params.channel_loading.transpose() * psi_inv_u;
      channel_prec_inv = spd_inverse(channel_prec, "PLDA channel precision");
      within_inv -= psi_inv_u * channel_prec_inv * psi_inv_u.transpose();
      within_log_det += spd_log_det(channel_prec, "PLDA channel precision");
    } else {
      channel_prec = Matrix::Zero(0, 0);
      channel_prec_inv = Matrix::Zero(0, 0);
    }
    v_within_inv = params.speaker_loading.transpose() * within_inv;
    v_within_v = v_within_inv * params.speaker_loading;
  }
};

double speaker_log_likelihood(const PldaParams &params, const PldaCache &cache,
                              const Matrix &vectors) {
  const Eigen::Index n = vectors.cols(), p = params.dim(), qs = params.speaker_dim();
  Matrix centred = vectors.colwise() - params.mean;
  double quad = (centred.transpose() * cache.within_inv * centred).trace();
  Matrix m = Matrix::Identity(qs, qs) + static_cast<double>(n) * cache.v_within_v;
  double log_det = static_cast<double>(n) * cache.within_log_det;
  if (qs > 0) {
    Vector t = cache.v_within_inv * centred.rowwise().sum();
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) throw NumericError("PLDA: speaker precision not positive definite");
    quad -= t.dot(llt.solve(t));
    log_det += 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  }
  return -0.5 * (static_cast<double>(n * p) * kLog2Pi + log_det + quad);
}

PldaPosterior posterior_with_cache(const PldaParams &params, const PldaCache &cache,
                                   const Matrix &vectors) {
  const Eigen::Index n = vectors.cols(), qs = params.speaker_dim(), qc = params.channel_dim();
  Matrix centred = vectors.colwise() - params.mean;
  PldaPosterior post;
  post.speaker_cov =
      spd_inverse(Matrix::Identity(qs, qs) + static_cast<double>(n) * cache.v_within_v,
                  "PLDA speaker precision");
  post.speaker_mean = post.speaker_cov * (cache.v_within_inv * centred.rowwise().sum());
  if (qc > 0) {
    // h_c,n | h_s, x_n ~ N(D^-1 U' Psi^-1 (r_n - V h_s), D^-1).
    Matrix gain = cache.channel_prec_inv * params.channel_loading.transpose() *
                  cache.inv_residual.asDiagonal();
    Matrix coupling = gain * params.speaker_loading;  // D^-1 K'
    post.channel_means = gain * (centred.colwise() - params.speaker_loading * post.speaker_mean);
    post.channel_cov = cache.channel_prec_inv + coupling * post.speaker_cov * coupling.transpose();
    post.cross_cov = -post.speaker_cov * coupling.transpose();
  } else {
    post.channel_means = Matrix::Zero(0, n);
    post.channel_cov = Matrix::Zero(0, 0);
    post.cross_cov = Matrix::Zero(qs, 0);
  }
  return post;
}

void check_vectors(const PldaParams &params, const Matrix &vectors, const char *what) {
  check_dim(vectors.rows(), params.dim(), what);
  if (vectors.cols() < 1) throw ValidationError(std::string(what) + ": no vectors");
}

}  // namespace

void PldaParams::validate() const {
  check_dim(speaker_loading.rows(), dim(), "PLDA speaker_loading rows");
  check_dim(channel_loading.rows(), dim(), "PLDA channel_loading rows");
  check_dim(residual_variance.size(), dim(), "PLDA residual_variance");
  if (!mean.allFinite() || !speaker_loading.allFinite() || !channel_loading.allFinite() ||
      !residual_variance.allFinite())
    throw NumericError("PLDA parameters contain non-finite values");
  if ((residual_variance.array() <= 0.0).any())
    throw ValidationError("PLDA residual variances must be positive");
}

PldaParams plda_init(const IVectorCorpus &corpus, int speaker_dim, int channel_dim,
                     std::uint64_t seed) {
  if (speaker_dim < 0 || channel_dim < 0) throw ValidationError("PLDA: negative factor dimension");
  int eligible = 0;
  for (const auto &spk : corpus.speakers())
    if (corpus.speaker_records(spk).size() >= 2) ++eligible;
  if (eligible < 2)
    throw ValidationError("PLDA training needs at least 2 speakers with 2 or more vectors");
  auto [mean, cov] = corpus_moments(corpus);
  const Eigen::Index p = corpus.dim();
  const double scale = 0.1 * cov.diagonal().cwiseSqrt().mean();
  Rng rng(seed);
  PldaParams params;
  params.mean = mean;
  params.speaker_loading.resize(p, speaker_dim);
  params.channel_loading.resize(p, channel_dim);
  for (Eigen::Index k = 0; k < params.speaker_loading.size(); ++k)
    params.speaker_loading(k) = scale * rng.normal();
  for (Eigen::Index k = 0; k < params.channel_loading.size(); ++k)
    params.channel_loading(k) = scale * rng.normal();
  params.residual_variance = cov.diagonal().cwiseMax(kMinResidual);
  return params;
}

PldaPosterior plda_posterior(const PldaParams &params, const Matrix &speaker_vectors) {
  check_vectors(params, speaker_vectors, "plda_posterior");
  PldaCache cache(params);
  return posterior_with_cache(params, cache, speaker_vectors);
}

PldaParams plda_em_step(const PldaParams &params, const IVectorCorpus &corpus) {
  check_dim(corpus.dim(), params.dim(), "plda_em_step");
  const Eigen::Index p = params.dim(), qs = params.speaker_dim(), qc = params.channel_dim();
  const Eigen::Index q = qs + qc;
  PldaCache cache(params);

  Matrix cross = Matrix::Zero(p, q);    // sum_n r_n E[z_n]'
  Matrix second = Matrix::Zero(q, q);   // sum_n E[z_n z_n']
  Vector scatter = Vector::Zero(p);     // sum_n r_n .* r_n
  double total = 0.0;
  for (const auto &spk : corpus.speakers()) {
    Matrix vectors = corpus.speaker_matrix(spk);
    PldaPosterior post = posterior_with_cache(params, cache, vectors);
    Matrix centred = vectors.colwise() - params.mean;
    for (Eigen::Index n = 0; n < vectors.cols(); ++n) {
      Vector z(q);
      z.head(qs) = post.speaker_mean;
      z.tail(qc) = post.channel_means.col(n);
      Matrix zz = z * z.transpose();
      zz.topLeftCorner(qs, qs) += post.speaker_cov;
      zz.bottomRightCorner(qc, qc) += post.channel_cov;
      zz.topRightCorner(qs, qc) += post.cross_cov;
      zz.bottomLeftCorner(qc, qs) += post.cross_cov.transpose();
      cross += centred.col(n) * z.transpose();
      second += zz;
      scatter += centred.col(n).cwiseAbs2();
      total += 1.0;
    }
  }
  if (!cross.allFinite() || !second.allFinite())
    throw NumericError("plda_em_step: non-finite E-step statistics");

  PldaParams next = params;
  Matrix loading = second.ldlt().solve(cross.transpose()).transpose();
  next.speaker_loading = loading.leftCols(qs);
  next.channel_loading = loading.rightCols(qc);
  // diag(sum r r' - A R') / total, with R = cross.
  Vector explained = (loading.array() * cross.array()).rowwise().sum();
  next.residual_variance = ((scatter - explained) / total).cwiseMax(kMinResidual);
  next.validate();
  return next;
}

double plda_speaker_log_likelihood(const PldaParams &params, const Matrix &speaker_vectors) {
  check_vectors(params, speaker_vectors, "plda_speaker_log_likelihood");
  PldaCache cache(params);
  return speaker_log_likelihood(params, cache, speaker_vectors);
}

double plda_log_likelihood(const PldaParams &params, const IVectorCorpus &corpus) {
  PldaCache cache(params);
  double total = 0.0;
  for (const auto &spk : corpus.speakers())
    total += speaker_log_likelihood(params, cache, corpus.speaker_matrix(spk));
  return total;
}

PldaTrainResult plda_train(const IVectorCorpus &corpus, const PldaTrainOptions &options) {
  if (options.em_iters < 0) throw ValidationError("plda_train: em_iters must be >= 0");
  PldaTrainResult result{plda_init(corpus, options.speaker_dim, options.channel_dim, options.seed), {}};
  result.log_likelihood.push_back(plda_log_likelihood(result.params, corpus));
  for (int it = 0; it < options.em_iters; ++it) {
    result.params = plda_em_step(result.params, corpus);
    result.log_likelihood.push_back(plda_log_likelihood(result.params, corpus));
  }
  return result;
}

double plda_score(const PldaParams &params, const Matrix &enrollment, const Vector &test) {
  check_vectors(params, enrollment, "plda_score: enrollment");
  check_dim(test.size(), params.dim(), "plda_score: test");
  PldaCache cache(params);
  Matrix joint(enrollment.rows(), enrollment.cols() + 1);
  joint << enrollment, test;
  return speaker_log_likelihood(params, cache, joint) -
         speaker_log_likelihood(params, cache, enrollment) -
         speaker_log_likelihood(params, cache, test);
}

void save_plda(const PldaParams &params, const std::string &path) {
  params.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path);
  io::write_magic(os, "PLDA");
  io::write_u32(os, 1);
  io::write_u32(os, static_cast<std::uint32_t>(params.dim()));
  io::write_u32(os, static_cast<std::uint32_t>(params.speaker_dim()));
  io::write_u32(os, static_cast<std::uint32_t>(params.channel_dim()));
  io::write_vector(os, params.mean);
  io::write_matrix_row_major(os, params.speaker_loading);
  io::write_matrix_row_major(os, params.channel_loading);
  io::write_vector(os, params.residual_variance);
  if (!os) throw Error("write failed: " + path);
}

PldaParams load_plda(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open " + path);
  io::expect_magic(is, "PLDA", path);
  if (io::read_u32(is) != 1) throw ValidationError(path + ": unsupported PLDA version");
  Eigen::Index p = io::read_u32(is), qs = io::read_u32(is), qc = io::read_u32(is);
  PldaParams params;
  params.mean = io::read_vector(is, p);
  params.speaker_loading = io::read_matrix_row_major(is, p, qs);
  params.channel_loading = io::read_matrix_row_major(is, p, qc);
  params.residual_variance = io::read_vector(is, p);
  params.validate();
  return params;
}

}  // namespace grbm
