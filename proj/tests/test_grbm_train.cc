// grbmspk/tests/test_grbm_train.cc

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
#include "grbmspk/grbm_train.h"
#include "grbmspk/synthgen.h"
#include "oracles.h"

using namespace grbm;

namespace {

// Central differences of the enumerated log-likelihood for one tensor.
template <typename Get>
Matrix finite_difference(const GrbmParams &params, const Matrix &x, Get get, double h = 1e-5) {
  GrbmParams probe = params;
  const Eigen::Index size = get(probe).size();
  Matrix out(get(probe).rows(), get(probe).cols());
  for (Eigen::Index k = 0; k < size; ++k) {
    GrbmParams up = params, down = params;
    get(up)(k) += h;
    get(down)(k) -= h;
    out(k) = static_cast<double>((oracle::brute_log_likelihood(up, x) - oracle::brute_log_likelihood(down, x)) /
                                 (2 * h));
  }
  return out;
}

double rel_err(const Matrix &a, const Matrix &b) {
  return (a - b).norm() / std::max(b.norm(), 1e-8);
}

IVectorCorpus small_corpus(std::uint64_t seed, int speakers = 12) {
  GrbmParams truth = random_truth(4, 2, 1, seed, 3.0, 1.5);
  SynthSettings s;
  s.n_speakers = speakers;
  s.per_speaker = {2, 4};
  s.seed = seed;
  return synth_corpus(truth, s).corpus;
}

}  // namespace

TEST_CASE("analytic gradient matches finite differences of the exact likelihood") {
  Rng rng(200);
  for (int inst = 0; inst < 20; ++inst) {
    auto p = rng.uniform_int(1, 3), ds = rng.uniform_int(1, 2), dc = rng.uniform_int(1, 2);
    int n = static_cast<int>(rng.uniform_int(1, 3));
    GrbmParams q = oracle::random_params(rng, p, ds, dc, 0.5);
    Matrix x = oracle::random_matrix(rng, p, n);
    GradientAccumulator g = positive_gradient(q, SpeakerData(x));
    g -= exact_negative_gradient(q, n);
    CHECK(rel_err(g.visible_bias, finite_difference(q, x, [](GrbmParams &t) -> Vector & { return t.visible_bias; })) < 1e-5);
    CHECK(rel_err(g.speaker_bias, finite_difference(q, x, [](GrbmParams &t) -> Vector & { return t.speaker_bias; })) < 1e-5);
    CHECK(rel_err(g.channel_bias, finite_difference(q, x, [](GrbmParams &t) -> Vector & { return t.channel_bias; })) < 1e-5);
    CHECK(rel_err(g.speaker_loading, finite_difference(q, x, [](GrbmParams &t) -> Matrix & { return t.speaker_loading; })) < 1e-5);
    CHECK(rel_err(g.channel_loading, finite_difference(q, x, [](GrbmParams &t) -> Matrix & { return t.channel_loading; })) < 1e-5);
    CHECK(rel_err(g.log_variance, finite_difference(q, x, [](GrbmParams &t) -> Vector & { return t.log_variance; })) < 1e-5);
  }
}

TEST_CASE("positive gradient: single-vector form and permutation invariance") {
  Rng rng(210);
  GrbmParams q = oracle::random_params(rng, 3, 2, 2);
  Matrix x1 = oracle::random_matrix(rng, 3, 1);
  auto g1 = positive_gradient(q, SpeakerData(x1));
  Vector ps = posterior_speaker(q, SpeakerData(x1));
  Matrix expect = x1.col(0).cwiseProduct(q.inv_variance()) * ps.transpose();
  CHECK((g1.speaker_loading - expect).cwiseAbs().maxCoeff() < 1e-15);

  Matrix x = oracle::random_matrix(rng, 3, 4);
  Matrix perm(3, 4);
  perm << x.col(2), x.col(0), x.col(3), x.col(1);
  auto a = positive_gradient(q, SpeakerData(x)), b = positive_gradient(q, SpeakerData(perm));
  a -= b;
  CHECK(a.norm() < 1e-12);
}

TEST_CASE("cd: degenerate noise gives a deterministic reconstruction") {
  GrbmParams q = GrbmParams::zeros(2, 2, 1);
  q.speaker_loading << 1, 2, 3, 4;
  q.channel_loading << 0.5, -0.5;
  q.visible_bias << 0.1, 0.2;
  q.speaker_bias << 80, -80;
  q.channel_bias << 80;
  q.log_variance.setConstant(std::log(1e-14));
  Matrix x = Matrix::Zero(2, 3);
  Rng a(1), b(2);
  auto ra = negative_phase_cd(q, SpeakerData(x), 3, a);
  auto rb = negative_phase_cd(q, SpeakerData(x), 3, b);
  // One step from X = 0 lands on b + F s + G c with s = (1, 0), c = 1.
  Rng c(3);
  auto one = negative_phase_cd(q, SpeakerData(x), 1, c);
  Vector mean = q.visible_bias + q.speaker_loading.col(0) + q.channel_loading.col(0);
  for (int n = 0; n < 3; ++n) CHECK((one.reconstruction.vectors().col(n) - mean).norm() < 1e-6);
  // Later steps saturate as well, so the chain no longer depends on the stream.
  CHECK((ra.reconstruction.vectors() - rb.reconstruction.vectors()).norm() < 1e-6);
  CHECK_THROWS_AS(negative_phase_cd(q, SpeakerData(x), 0, a), ValidationError);
}

TEST_CASE("cd-1 on the zero model: mean f gradient is N/2") {
  GrbmParams zero = GrbmParams::zeros(2, 2, 1);
  Matrix x = Matrix::Zero(2, 3);
  Rng rng(220);
  const int chains = 100000;
  Vector sum = Vector::Zero(2), sum2 = Vector::Zero(2);
  for (int k = 0; k < chains; ++k) {
    auto r = negative_phase_cd(zero, SpeakerData(x), 1, rng);
    sum += r.gradient.speaker_bias;
    sum2 += r.gradient.speaker_bias.cwiseAbs2();
  }
  // Every reconstruction has posterior 1/2 under the zero model.
  Vector mean = sum / chains;
  CHECK((mean.array() - 1.5).abs().maxCoeff() < 1e-12);
  CHECK((sum2 / chains - mean.cwiseAbs2()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("long cd chains approach the exact negative phase") {
  Rng rng(230);
  GrbmParams q = oracle::random_params(rng, 2, 2, 1, 0.3);
  Matrix start = Matrix::Constant(2, 2, 3.0);  // far from typical model draws
  const auto exact = exact_negative_gradient(q, 2);
  const int chains = 2000;
  Vector sum = Vector::Zero(2), sum2 = Vector::Zero(2);
  for (int k = 0; k < chains; ++k) {
    auto r = negative_phase_cd(q, SpeakerData(start), 500, rng);
    sum += r.gradient.speaker_bias;
    sum2 += r.gradient.speaker_bias.cwiseAbs2();
  }
  Vector mean = sum / chains;
  Vector se = ((sum2 / chains - mean.cwiseAbs2()).cwiseMax(0.0) / chains).cwiseSqrt();
  INFO("cd mean " << mean.transpose() << " exact " << exact.speaker_bias.transpose() << " se "
                   << se.transpose());
  CHECK(((mean - exact.speaker_bias).cwiseAbs().array() <= 4 * se.array() + 1e-9).all());
}

TEST_CASE("sgd step without momentum or decay is exactly lr times the gradient") {
  Rng rng(240);
  GrbmParams q = oracle::random_params(rng, 3, 2, 2);
  GradientAccumulator g = GradientAccumulator::zeros_like(q);
  g.speaker_loading = oracle::random_matrix(rng, 3, 2);
  g.log_variance = oracle::random_matrix(rng, 3, 1);
  g.visible_bias = oracle::random_matrix(rng, 3, 1);
  TrainConfig cfg;
  cfg.momentum = 0;
  cfg.learning_rate = 0.1;
  GradientAccumulator v = GradientAccumulator::zeros_like(q);
  GrbmParams stepped = q;
  sgd_momentum_step(stepped, v, g, cfg);
  CHECK(stepped.speaker_loading == q.speaker_loading + 0.1 * g.speaker_loading);
  CHECK(stepped.visible_bias == q.visible_bias + 0.1 * g.visible_bias);
  CHECK(stepped.channel_loading == q.channel_loading);
  CHECK(stepped.log_variance == q.log_variance);

  cfg.learn_sigma = true;
  cfg.weight_decay = 0.5;
  cfg.momentum = 0.5;
  GrbmParams s2 = q;
  GradientAccumulator v2 = GradientAccumulator::zeros_like(q);
  sgd_momentum_step(s2, v2, g, cfg);
  CHECK(s2.log_variance == q.log_variance + 0.1 * g.log_variance);
  CHECK((s2.channel_loading - (q.channel_loading - 0.05 * q.channel_loading)).norm() < 1e-15);
  CHECK(s2.visible_bias == q.visible_bias + 0.1 * g.visible_bias);
  GrbmParams s3 = s2;
  sgd_momentum_step(s3, v2, g, cfg);
  Matrix v_expect = 0.5 * (0.1 * g.speaker_loading - 0.05 * q.speaker_loading) +
                    0.1 * (g.speaker_loading - 0.5 * s2.speaker_loading);
  CHECK((s3.speaker_loading - s2.speaker_loading - v_expect).norm() < 1e-14);
}

TEST_CASE("train: zero learning rate leaves the initialisation") {
  auto corpus = small_corpus(1);
  TrainConfig cfg;
  cfg.learning_rate = 0;
  cfg.epochs = 3;
  cfg.seed = 5;
  auto result = train(corpus, 2, 1, cfg);
  Rng init_rng = Rng(5).derive(0);
  GrbmParams init = init_params(4, 2, 1, cfg, init_rng);
  CHECK(result.params.speaker_loading == init.speaker_loading);
  CHECK(result.params.channel_loading == init.channel_loading);
  CHECK(result.params.visible_bias == init.visible_bias);
  CHECK(result.report.epochs.size() == 3);
}

TEST_CASE("train: one speaker, one batch, no momentum equals a hand-stepped update") {
  Rng rng(250);
  Matrix x = oracle::random_matrix(rng, 3, 4);
  std::vector<IVectorRecord> rs;
  for (int n = 0; n < 4; ++n) rs.push_back({"v" + std::to_string(n), "s", 1.0, x.col(n)});
  IVectorCorpus corpus(rs);
  TrainConfig cfg;
  cfg.momentum = 0;
  cfg.epochs = 1;
  cfg.seed = 9;
  cfg.learning_rate = 0.05;
  cfg.init_weight_std = 0.3;
  auto result = train(corpus, 2, 2, cfg);

  Rng init_rng = Rng(9).derive(0);
  GrbmParams q = init_params(3, 2, 2, cfg, init_rng);
  SpeakerData data(x);
  GradientAccumulator g = positive_gradient(q, data);
  Rng chain = Rng(9).derive(2).derive(1).derive(0);
  g -= negative_phase_cd(q, data, 1, chain).gradient;
  g *= 1.0 / 4.0;
  CHECK((result.params.speaker_loading - (q.speaker_loading + 0.05 * g.speaker_loading)).norm() < 1e-15);
  CHECK((result.params.channel_loading - (q.channel_loading + 0.05 * g.channel_loading)).norm() < 1e-15);
  CHECK((result.params.visible_bias - (q.visible_bias + 0.05 * g.visible_bias)).norm() < 1e-15);
  CHECK((result.params.speaker_bias - (q.speaker_bias + 0.05 * g.speaker_bias)).norm() < 1e-15);
  CHECK(result.params.log_variance == q.log_variance);
}

TEST_CASE("train: thread count and resumption do not change results") {
  auto corpus = small_corpus(2, 30);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_speakers = 7;
  cfg.seed = 3;
  cfg.learning_rate = 0.05;
  auto one = train(corpus, 2, 1, cfg);
  cfg.threads = 3;
  auto three = train(corpus, 2, 1, cfg);
  CHECK(one.params.speaker_loading == three.params.speaker_loading);
  CHECK(one.params.visible_bias == three.params.visible_bias);

  cfg.threads = 1;
  cfg.epochs = 2;
  auto first = train(corpus, 2, 1, cfg);
  auto path = (std::filesystem::temp_directory_path() / "grbmspk_ckpt.grbm").string();
  save_checkpoint(first.final_state, path);
  TrainHooks hooks;
  hooks.resume = load_checkpoint(path);
  CHECK(hooks.resume->epoch == 2);
  auto second = train(corpus, 2, 1, cfg, std::nullopt, hooks);
  CHECK(second.params.speaker_loading == one.params.speaker_loading);
  CHECK(second.params.channel_loading == one.params.channel_loading);
  CHECK(second.report.epochs.front().epoch == 3);
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".opt");
}

TEST_CASE("train: cross-validation keeps the best epoch") {
  GrbmParams truth = random_truth(6, 3, 1, 4, 4.0, 2.0);
  SynthSettings s;
  s.n_speakers = 40;
  s.per_speaker = {4, 4};
  s.seed = 10;
  auto corpus = synth_corpus(truth, s).corpus;
  s.n_speakers = 10;
  s.per_speaker = {6, 6};
  s.seed = 11;
  auto cv_all = synth_corpus(truth, s).corpus;
  std::vector<IVectorRecord> m, t;
  for (std::size_t i = 0; i < cv_all.size(); ++i) (i % 6 < 3 ? m : t).push_back(cv_all[i]);
  CrossValidationSets cv{IVectorCorpus(m), IVectorCorpus(t)};

  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.seed = 1;
  std::vector<GrbmParams> snapshots;
  TrainHooks hooks;
  hooks.on_epoch = [&](int, const GrbmParams &p) { snapshots.push_back(p); };
  auto result = train(corpus, 3, 1, cfg, cv, hooks);
  REQUIRE(snapshots.size() == 7);
  int best = 1;
  double best_dcf = 1e300;
  for (const auto &e : result.report.epochs) {
    REQUIRE(e.cv_min_dcf);
    if (*e.cv_min_dcf < best_dcf) {
      best_dcf = *e.cv_min_dcf;
      best = e.epoch;
    }
  }
  CHECK(result.report.best_epoch == best);
  CHECK(result.params.speaker_loading == snapshots[static_cast<std::size_t>(best)].speaker_loading);
  CHECK(cv_min_dcf(result.params, cv) == best_dcf);

  std::string report = format_train_report(result.report, {{"seed", "1"}});
  CHECK(report.rfind("# seed=1\nepoch,recon_err,cv_mindcf,grad_norm,seconds\n", 0) == 0);
}

TEST_CASE("train: errors") {
  TrainConfig cfg;
  IVectorCorpus empty(std::vector<IVectorRecord>{}, 3);
  CHECK_THROWS_AS(train(empty, 2, 1, cfg), ValidationError);
  cfg.batch_speakers = 0;
  CHECK_THROWS_AS(train(small_corpus(3), 2, 1, cfg), ValidationError);

  std::vector<IVectorRecord> rs{{"a", "s", 1.0, Vector::Constant(2, 1e200)}, {"b", "s", 1.0, Vector::Constant(2, -1e200)}};
  TrainConfig ok;
  ok.epochs = 1;
  CHECK_THROWS_WITH_AS(train(IVectorCorpus(rs), 1, 1, ok), doctest::Contains("non-finite gradient"), NumericError);
}

TEST_CASE("default hyperparameters") {
  TrainConfig c;
  CHECK(c.learning_rate == 0.01);
  CHECK(c.momentum == 0.5);
  CHECK(c.weight_decay == 0.0);
  CHECK(c.batch_speakers == 256);
  CHECK(c.epochs == 40);
  CHECK(c.init_weight_std == 0.01);
  CHECK_FALSE(c.learn_sigma);
  PldaTrainOptions p;
  CHECK(p.em_iters == 20);
}
