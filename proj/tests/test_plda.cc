// grbmspk/tests/test_plda.cc

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

#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "grbmspk/plda.h"
#include "grbmspk/synthgen.h"
#include "oracles.h"

using namespace grbm;

namespace {

std::vector<Matrix> speaker_matrices(const IVectorCorpus &c) {
  std::vector<Matrix> out;
  for (const auto &s : c.speakers()) out.push_back(c.speaker_matrix(s));
  return out;
}

SynthSettings settings(int speakers, CountRange per, std::uint64_t seed) {
  SynthSettings s;
  s.n_speakers = speakers;
  s.per_speaker = per;
  s.seed = seed;
  return s;
}

double log_normal(const Vector &x, const Matrix &cov) {
  Eigen::LLT<Matrix> llt(cov);
  const Matrix l = llt.matrixL();
  return -0.5 * (static_cast<double>(x.size()) * std::log(2 * M_PI) + 2 * l.diagonal().array().log().sum() +
                 x.dot(llt.solve(x)));
}

}  // namespace

TEST_CASE("em is monotone on random synthetic corpora") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    PldaParams truth = random_plda_truth(6, 2, 2, seed);
    auto corpus = synth_plda_corpus(truth, settings(40, {2, 6}, seed)).corpus;
    auto result = plda_train(corpus, {2, 2, 20, seed});
    REQUIRE(result.log_likelihood.size() == 21);
    const double slack = 1e-8 * static_cast<double>(corpus.size());
    for (std::size_t k = 1; k < result.log_likelihood.size(); ++k)
      CHECK(result.log_likelihood[k] >= result.log_likelihood[k - 1] - slack);
  }
}

TEST_CASE("no channel subspace: matches an independent two-covariance em") {
  PldaParams truth = random_plda_truth(5, 2, 0, 7);
  auto corpus = synth_plda_corpus(truth, settings(60, {2, 5}, 7)).corpus;
  auto result = plda_train(corpus, {2, 0, 20, 3});
  PldaParams init = plda_init(corpus, 2, 0, 3);
  auto oracle_trace = oracle::two_cov_em(init.mean, init.speaker_loading, init.residual_variance,
                                         speaker_matrices(corpus), 20);
  REQUIRE(oracle_trace.size() == result.log_likelihood.size());
  const double n = static_cast<double>(corpus.size());
  for (std::size_t k = 0; k < oracle_trace.size(); ++k)
    CHECK(std::abs(result.log_likelihood[k] - oracle_trace[k]) / n < 1e-6);
  for (const auto &x : speaker_matrices(corpus))
    CHECK(std::abs(plda_speaker_log_likelihood(result.params, x) -
                   oracle::two_cov_log_likelihood(result.params.mean, result.params.speaker_loading,
                                                  result.params.residual_variance, x)) < 1e-9);
}

TEST_CASE("posterior equals linear-Gaussian conditioning; one em step from it") {
  Rng rng(300);
  const Eigen::Index p = 3, qs = 2, qc = 1, n = 2;
  PldaParams params;
  params.mean = oracle::random_matrix(rng, p, 1);
  params.speaker_loading = oracle::random_matrix(rng, p, qs);
  params.channel_loading = oracle::random_matrix(rng, p, qc);
  params.residual_variance = Vector::Constant(p, 0.3) + oracle::random_matrix(rng, p, 1, 0.1).cwiseAbs();

  // Joint covariance of z = [h_s; h_c1; h_c2] and x = [x_1; x_2].
  const Eigen::Index nz = qs + n * qc, nx = n * p;
  Matrix a = Matrix::Zero(nx, nz);  // x - mean = A z + e
  for (Eigen::Index k = 0; k < n; ++k) {
    a.block(k * p, 0, p, qs) = params.speaker_loading;
    a.block(k * p, qs + k * qc, p, qc) = params.channel_loading;
  }
  Matrix noise = Matrix::Zero(nx, nx);
  for (Eigen::Index k = 0; k < n; ++k) noise.block(k * p, k * p, p, p) = params.residual_variance.asDiagonal();
  const Matrix sxx = a * a.transpose() + noise;
  const Matrix gain = a.transpose() * sxx.inverse();
  const Matrix post_cov = Matrix::Identity(nz, nz) - gain * a;

  // Two toy speakers of two vectors each.
  std::vector<Matrix> speakers{oracle::random_matrix(rng, p, n), oracle::random_matrix(rng, p, n)};
  Matrix cross = Matrix::Zero(p, qs + qc), second = Matrix::Zero(qs + qc, qs + qc);
  Vector scatter = Vector::Zero(p);
  std::vector<IVectorRecord> rs;
  for (std::size_t s = 0; s < speakers.size(); ++s) {
    const Matrix &x = speakers[s];
    Vector r(nx);
    for (Eigen::Index k = 0; k < n; ++k) r.segment(k * p, p) = x.col(k) - params.mean;
    const Vector mean = gain * r;
    auto post = plda_posterior(params, x);
    CHECK((post.speaker_mean - mean.head(qs)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((post.speaker_cov - post_cov.topLeftCorner(qs, qs)).cwiseAbs().maxCoeff() < 1e-10);
    for (Eigen::Index k = 0; k < n; ++k) {
      CHECK((post.channel_means.col(k) - mean.segment(qs + k * qc, qc)).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((post.channel_cov - post_cov.block(qs + k * qc, qs + k * qc, qc, qc)).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((post.cross_cov - post_cov.block(0, qs + k * qc, qs, qc)).cwiseAbs().maxCoeff() < 1e-10);
      // Per-vector EM statistics from the conditioning oracle.
      Vector z(qs + qc);
      z << mean.head(qs), mean.segment(qs + k * qc, qc);
      Matrix zz = z * z.transpose();
      zz.topLeftCorner(qs, qs) += post_cov.topLeftCorner(qs, qs);
      zz.bottomRightCorner(qc, qc) += post_cov.block(qs + k * qc, qs + k * qc, qc, qc);
      zz.topRightCorner(qs, qc) += post_cov.block(0, qs + k * qc, qs, qc);
      zz.bottomLeftCorner(qc, qs) += post_cov.block(0, qs + k * qc, qs, qc).transpose();
      cross += r.segment(k * p, p) * z.transpose();
      second += zz;
      scatter += r.segment(k * p, p).cwiseAbs2();
      rs.push_back({"v" + std::to_string(s) + std::to_string(k), "s" + std::to_string(s), 1.0, x.col(k)});
    }
  }
  const Matrix loading = cross * second.inverse();
  const Vector psi = (scatter - (loading * cross.transpose()).diagonal()) / 4.0;
  PldaParams next = plda_em_step(params, IVectorCorpus(rs));
  CHECK((next.speaker_loading - loading.leftCols(qs)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((next.channel_loading - loading.rightCols(qc)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((next.residual_variance - psi).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(next.mean == params.mean);
}

TEST_CASE("scores: trivial, scalar closed form, symmetries") {
  Rng rng(310);
  PldaParams flat;
  flat.mean = Vector::Zero(3);
  flat.speaker_loading = Matrix::Zero(3, 2);
  flat.channel_loading = oracle::random_matrix(rng, 3, 1);
  flat.residual_variance = Vector::Ones(3);
  CHECK(std::abs(plda_score(flat, oracle::random_matrix(rng, 3, 4), oracle::random_matrix(rng, 3, 1))) < 1e-12);

  PldaParams scalar;
  scalar.mean = Vector::Constant(1, 0.5);
  scalar.speaker_loading = Matrix::Constant(1, 1, 1.5);
  scalar.channel_loading = Matrix::Zero(1, 0);
  scalar.residual_variance = Vector::Constant(1, 0.7);
  const double e = 1.2, t = 0.9, b = 2.25, w = 0.7;
  // log N2([e t]; [b+w b; b b+w]) - log N1(e; b+w) - log N1(t; b+w), centred at 0.5.
  const double ec = e - 0.5, tc = t - 0.5, det = (b + w) * (b + w) - b * b;
  const double joint = -std::log(2 * M_PI) - 0.5 * std::log(det) -
                       0.5 * ((b + w) * ec * ec - 2 * b * ec * tc + (b + w) * tc * tc) / det;
  auto single = [&](double v) { return -0.5 * std::log(2 * M_PI * (b + w)) - 0.5 * v * v / (b + w); };
  CHECK(plda_score(scalar, Matrix::Constant(1, 1, e), Vector::Constant(1, t)) ==
        doctest::Approx(joint - single(ec) - single(tc)).epsilon(1e-13));

  PldaParams q = random_plda_truth(4, 2, 1, 3);
  q.mean = oracle::random_matrix(rng, 4, 1);
  Matrix enroll = oracle::random_matrix(rng, 4, 5);
  Vector test = oracle::random_matrix(rng, 4, 1);
  const double s = plda_score(q, enroll, test);
  CHECK(plda_score(q, enroll.rowwise().reverse(), test) == doctest::Approx(s).epsilon(1e-12));
  PldaParams doubled = q;
  doubled.mean *= 2;
  doubled.speaker_loading *= 2;
  doubled.channel_loading *= 2;
  doubled.residual_variance *= 4;
  CHECK(plda_score(doubled, 2 * enroll, 2 * test) == doctest::Approx(s).epsilon(1e-10));

  // Cross-check the speaker likelihood against the dense joint covariance.
  Matrix x = oracle::random_matrix(rng, 4, 3);
  Matrix cov = Matrix::Zero(12, 12);
  Vector r(12);
  const Matrix between = q.speaker_loading * q.speaker_loading.transpose();
  const Matrix within = q.channel_loading * q.channel_loading.transpose() + Matrix(q.residual_variance.asDiagonal());
  for (int i = 0; i < 3; ++i) {
    r.segment(4 * i, 4) = x.col(i) - q.mean;
    for (int j = 0; j < 3; ++j) cov.block(4 * i, 4 * j, 4, 4) = between + (i == j ? within : Matrix::Zero(4, 4));
  }
  CHECK(plda_speaker_log_likelihood(q, x) == doctest::Approx(log_normal(r, cov)).epsilon(1e-12));
}

TEST_CASE("recovers the speaker covariance of a known model") {
  PldaParams truth = random_plda_truth(10, 2, 1, 42);
  auto corpus = synth_plda_corpus(truth, settings(500, {8, 8}, 42)).corpus;
  // EM from the small random start is slow along the subspace rotation; run
  // it to convergence rather than the default 20 iterations.
  auto result = plda_train(corpus, {2, 1, 300, 1});
  const Matrix b_true = truth.speaker_loading * truth.speaker_loading.transpose();
  const Matrix b_hat = result.params.speaker_loading * result.params.speaker_loading.transpose();
  CHECK((b_hat - b_true).norm() / b_true.norm() < 0.15);

  // Targets outscore nontargets on fresh data from the same model.
  auto fresh = synth_plda_corpus(truth, settings(30, {6, 6}, 43)).corpus;
  double target = 0, nontarget = 0;
  int nt = 0, nn = 0;
  for (std::size_t a = 0; a < fresh.speakers().size(); ++a) {
    Matrix enroll = fresh.speaker_matrix(fresh.speakers()[a]).leftCols(5);
    for (std::size_t b = 0; b < fresh.speakers().size(); ++b) {
      Vector test = fresh.speaker_matrix(fresh.speakers()[b]).col(5);
      double s = plda_score(result.params, enroll, test);
      (a == b ? target : nontarget) += s;
      (a == b ? nt : nn) += 1;
    }
  }
  CHECK(target / nt > nontarget / nn);
}

TEST_CASE("plda file round-trip and errors") {
  PldaParams q = random_plda_truth(4, 2, 1, 5);
  q.mean = Vector::LinSpaced(4, -1, 1);
  auto path = (std::filesystem::temp_directory_path() / "grbmspk_test.plda").string();
  save_plda(q, path);
  PldaParams back = load_plda(path);
  CHECK(back.mean == q.mean);
  CHECK(back.speaker_loading == q.speaker_loading);
  CHECK(back.channel_loading == q.channel_loading);
  CHECK(back.residual_variance == q.residual_variance);
  std::filesystem::remove(path);

  std::vector<IVectorRecord> rs{{"a", "s", 1, Vector::Ones(2)}, {"b", "s", 1, Vector::Zero(2)}, {"c", "t", 1, Vector::Ones(2)}};
  CHECK_THROWS_AS(plda_train(IVectorCorpus(rs), {1, 0, 5, 0}), ValidationError);
  CHECK_THROWS_AS(plda_score(q, Matrix::Zero(3, 1), Vector::Zero(4)), DimensionError);
}
