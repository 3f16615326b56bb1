// grbmspk/grbm_train.cc

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

#include "grbmspk/grbm_train.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "grbmspk/binary_io.h"
#include "grbmspk/eval.h"
#include "grbmspk/numeric.h"
#include "grbmspk/scoring.h"
#include "grbmspk/text_format.h"

namespace grbm {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ValidationError("learning_rate must be a finite non-negative number");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ValidationError("weight_decay must be >= 0");
  if (batch_speakers < 1) throw ValidationError("batch_speakers must be >= 1");
  if (epochs < 0) throw ValidationError("epochs must be >= 0");
  if (cd_steps < 1) throw ValidationError("cd_steps must be >= 1");
  if (!(init_weight_std >= 0.0)) throw ValidationError("init_weight_std must be >= 0");
  if (eval_every < 1) throw ValidationError("eval_every must be >= 1");
  if (threads < 1) throw ValidationError("threads must be >= 1");
}

// ---------------------------------------------------------------------------

GradientAccumulator GradientAccumulator::zeros_like(const GrbmParams &params) {
  GradientAccumulator g;
  g.visible_bias = Vector::Zero(params.dim_p());
  g.speaker_bias = Vector::Zero(params.dim_s());
  g.channel_bias = Vector::Zero(params.dim_c());
  g.speaker_loading = Matrix::Zero(params.dim_p(), params.dim_s());
  g.channel_loading = Matrix::Zero(params.dim_p(), params.dim_c());
  g.log_variance = Vector::Zero(params.dim_p());
  return g;
}

GradientAccumulator &GradientAccumulator::operator+=(const GradientAccumulator &o) {
  visible_bias += o.visible_bias;
  speaker_bias += o.speaker_bias;
  channel_bias += o.channel_bias;
  speaker_loading += o.speaker_loading;
  channel_loading += o.channel_loading;
  log_variance += o.log_variance;
  vector_count += o.vector_count;
  return *this;
}

GradientAccumulator &GradientAccumulator::operator-=(const GradientAccumulator &o) {
  visible_bias -= o.visible_bias;
  speaker_bias -= o.speaker_bias;
  channel_bias -= o.channel_bias;
  speaker_loading -= o.speaker_loading;
  channel_loading -= o.channel_loading;
  log_variance -= o.log_variance;
  return *this;
}

GradientAccumulator &GradientAccumulator::operator*=(double scale) {
  visible_bias *= scale;
  speaker_bias *= scale;
  channel_bias *= scale;
  speaker_loading *= scale;
  channel_loading *= scale;
  log_variance *= scale;
  return *this;
}

double GradientAccumulator::norm() const {
  return std::sqrt(visible_bias.squaredNorm() + speaker_bias.squaredNorm() +
                   channel_bias.squaredNorm() + speaker_loading.squaredNorm() +
                   channel_loading.squaredNorm() + log_variance.squaredNorm());
}

bool GradientAccumulator::all_finite() const {
  return visible_bias.allFinite() && speaker_bias.allFinite() && channel_bias.allFinite() &&
         speaker_loading.allFinite() && channel_loading.allFinite() && log_variance.allFinite();
}

// ---------------------------------------------------------------------------

GrbmParams init_params(Eigen::Index dim_p, Eigen::Index dim_s, Eigen::Index dim_c,
                       const TrainConfig &config, Rng &rng) {
  if (dim_p < 1 || dim_s < 1 || dim_c < 0) throw ValidationError("init_params: invalid dimensions");
  GrbmParams params = GrbmParams::zeros(dim_p, dim_s, dim_c);
  for (Eigen::Index k = 0; k < params.speaker_loading.size(); ++k)
    params.speaker_loading(k) = config.init_weight_std * rng.normal();
  for (Eigen::Index k = 0; k < params.channel_loading.size(); ++k)
    params.channel_loading(k) = config.init_weight_std * rng.normal();
  return params;
}

GradientAccumulator positive_gradient(const GrbmParams &params, const SpeakerData &data) {
  check_dim(data.dim(), params.dim_p(), "positive_gradient");
  const double n = static_cast<double>(data.count());
  const Vector inv_var = params.inv_variance();
  const Vector ps = posterior_speaker(params, data);
  const Matrix pc = posterior_channel_all(params, data);
  const Vector scaled_sum = data.sum().cwiseProduct(inv_var);
  const Matrix scaled = inv_var.asDiagonal() * data.vectors();
  const Matrix centred = data.vectors().colwise() - params.visible_bias;

  GradientAccumulator g;
  g.speaker_loading = scaled_sum * ps.transpose();
  g.speaker_bias = n * ps;
  g.channel_loading = scaled * pc.transpose();
  g.channel_bias = pc.rowwise().sum();
  g.visible_bias = (data.sum() - n * params.visible_bias).cwiseProduct(inv_var);
  // Per coordinate i: 0.5 sum_n (x_ni - b_i)^2 / s_i^2 - xbar_i / s_i^2 (F ps)_i
  //                   - sum_n x_ni / s_i^2 (G pc_n)_i.
  g.log_variance = 0.5 * centred.cwiseAbs2().rowwise().sum().cwiseProduct(inv_var) -
                   scaled_sum.cwiseProduct(params.speaker_loading * ps) -
                   scaled.cwiseProduct(params.channel_loading * pc).rowwise().sum();
  g.vector_count = n;
  return g;
}

CdResult negative_phase_cd(const GrbmParams &params, const SpeakerData &data, int cd_steps, Rng &rng) {
  if (cd_steps < 1) throw ValidationError("negative_phase_cd: cd_steps must be >= 1");
  SpeakerData current = data;
  for (int step = 0; step < cd_steps; ++step) {
    LatentState latent = sample_latent(params, current, rng);
    current = sample_visible(params, latent, rng);
  }
  GradientAccumulator g = positive_gradient(params, current);
  return {std::move(g), std::move(current)};
}

GradientAccumulator exact_negative_gradient(const GrbmParams &params, int n_order,
                                            const EnumerationLimits &limits) {
  if (n_order < 1) throw ValidationError("exact_negative_gradient: n_order must be >= 1");
  const Matrix log_integrals = config_log_integrals(params, limits);
  const Eigen::Index n_s = log_integrals.rows(), n_c = log_integrals.cols();
  const double n = static_cast<double>(n_order);
  const Vector inv_var = params.inv_variance();

  // P(s) proportional to (sum_c I(s, c))^N and P(c | s) proportional to I(s, c).
  Vector log_row_sum(n_s);
  for (Eigen::Index i = 0; i < n_s; ++i) {
    double max = log_integrals.row(i).maxCoeff();
    log_row_sum(i) = max + std::log((log_integrals.row(i).array() - max).exp().sum());
  }
  Vector log_ps = n * log_row_sum;
  log_ps.array() -= log_ps.maxCoeff();
  Vector prob_s = log_ps.array().exp();
  prob_s /= prob_s.sum();

  GradientAccumulator g = GradientAccumulator::zeros_like(params);
  for (Eigen::Index i = 0; i < n_s; ++i) {
    if (prob_s(i) == 0.0) continue;
    const Vector s = bits_of(static_cast<std::uint64_t>(i), params.dim_s());
    const Vector speaker_shift = params.speaker_loading * s;
    for (Eigen::Index k = 0; k < n_c; ++k) {
      double w = n * prob_s(i) * std::exp(log_integrals(i, k) - log_row_sum(i));
      if (w == 0.0) continue;
      const Vector c = bits_of(static_cast<std::uint64_t>(k), params.dim_c());
      const Vector m = speaker_shift + params.channel_loading * c;
      const Vector mean_scaled = (params.visible_bias + m).cwiseProduct(inv_var);
      g.speaker_bias += w * s;
      g.channel_bias += w * c;
      g.visible_bias += w * m.cwiseProduct(inv_var);
      g.speaker_loading += w * mean_scaled * s.transpose();
      g.channel_loading += w * mean_scaled * c.transpose();
      g.log_variance.array() +=
          w * (0.5 - (params.visible_bias.array() + 0.5 * m.array()) * m.array() * inv_var.array());
    }
  }
  g.vector_count = n;
  return g;
}

void sgd_momentum_step(GrbmParams &params, GradientAccumulator &velocity,
                       const GradientAccumulator &gradient, const TrainConfig &config) {
  const double lr = config.learning_rate, mom = config.momentum, wd = config.weight_decay;
  velocity.visible_bias = mom * velocity.visible_bias + lr * gradient.visible_bias;
  velocity.speaker_bias = mom * velocity.speaker_bias + lr * gradient.speaker_bias;
  velocity.channel_bias = mom * velocity.channel_bias + lr * gradient.channel_bias;
  velocity.speaker_loading =
      mom * velocity.speaker_loading + lr * (gradient.speaker_loading - wd * params.speaker_loading);
  velocity.channel_loading =
      mom * velocity.channel_loading + lr * (gradient.channel_loading - wd * params.channel_loading);
  if (config.learn_sigma) velocity.log_variance = mom * velocity.log_variance + lr * gradient.log_variance;

  params.visible_bias += velocity.visible_bias;
  params.speaker_bias += velocity.speaker_bias;
  params.channel_bias += velocity.channel_bias;
  params.speaker_loading += velocity.speaker_loading;
  params.channel_loading += velocity.channel_loading;
  if (config.learn_sigma) params.log_variance += velocity.log_variance;
}

// ---------------------------------------------------------------------------

std::string format_train_report(const TrainReport &report,
                                const std::vector<std::pair<std::string, std::string>> &header) {
  std::string out;
  for (const auto &[k, v] : header) out += "# " + k + "=" + v + "\n";
  out += "epoch,recon_err,cv_mindcf,grad_norm,seconds\n";
  for (const auto &e : report.epochs) {
    out += std::to_string(e.epoch) + "," + text::format_double(e.recon_err) + "," +
           (e.cv_min_dcf ? text::format_double(*e.cv_min_dcf) : std::string()) + "," +
           text::format_double(e.grad_norm) + "," + text::format_double(e.seconds) + "\n";
  }
  return out;
}

namespace {

void write_accumulator(std::ostream &os, const GradientAccumulator &g) {
  io::write_vector(os, g.visible_bias);
  io::write_vector(os, g.speaker_bias);
  io::write_vector(os, g.channel_bias);
  io::write_vector(os, g.log_variance);
  io::write_matrix_row_major(os, g.speaker_loading);
  io::write_matrix_row_major(os, g.channel_loading);
}

}  // namespace

void save_checkpoint(const TrainState &state, const std::string &path) {
  save_grbm(state.params, path);
  std::ofstream os(path + ".opt", std::ios::binary);
  if (!os) throw Error("cannot write " + path + ".opt");
  io::write_magic(os, "GOPT");
  io::write_u32(os, 1);
  io::write_u32(os, static_cast<std::uint32_t>(state.epoch));
  write_accumulator(os, state.velocity);
  if (!os) throw Error("write failed: " + path + ".opt");
}

TrainState load_checkpoint(const std::string &path) {
  TrainState state;
  state.params = load_grbm(path);
  std::ifstream is(path + ".opt", std::ios::binary);
  if (!is) throw ValidationError("cannot open " + path + ".opt");
  io::expect_magic(is, "GOPT", path + ".opt");
  if (io::read_u32(is) != 1) throw ValidationError(path + ".opt: unsupported version");
  state.epoch = static_cast<int>(io::read_u32(is));
  const GrbmParams &p = state.params;
  GradientAccumulator &v = state.velocity;
  v.visible_bias = io::read_vector(is, p.dim_p());
  v.speaker_bias = io::read_vector(is, p.dim_s());
  v.channel_bias = io::read_vector(is, p.dim_c());
  v.log_variance = io::read_vector(is, p.dim_p());
  v.speaker_loading = io::read_matrix_row_major(is, p.dim_p(), p.dim_s());
  v.channel_loading = io::read_matrix_row_major(is, p.dim_p(), p.dim_c());
  return state;
}

std::vector<SpeakerData> speaker_data(const IVectorCorpus &corpus) {
  std::vector<SpeakerData> out;
  out.reserve(corpus.speakers().size());
  for (const auto &spk : corpus.speakers()) out.emplace_back(corpus.speaker_matrix(spk));
  return out;
}

double normalized_log_likelihood(const GrbmParams &params, const std::vector<SpeakerData> &speakers,
                                 const EnumerationLimits &limits) {
  std::map<Eigen::Index, LogPartition> partitions;
  double total = 0.0, count = 0.0;
  for (const auto &data : speakers) {
    auto it = partitions.find(data.count());
    if (it == partitions.end())
      it = partitions.emplace(data.count(), log_partition_exact(params, static_cast<int>(data.count()), limits))
               .first;
    total += log_marginal(params, data, it->second);
    count += static_cast<double>(data.count());
  }
  return total / count;
}

double cv_min_dcf(const GrbmParams &params, const CrossValidationSets &cv, double fa_cost) {
  IVectorCorpus model = project_corpus_f(params, cv.model);
  IVectorCorpus test = project_corpus_f(params, cv.test);
  auto trials = build_trials(model, test);
  ScoreFile scores = score_trials(trials, model, test, cosine_scorer(true), "cosnorm");
  return compute_metrics(scores, fa_cost).min_dcf;
}

namespace {

struct SpeakerContribution {
  GradientAccumulator gradient;
  double squared_error = 0.0;
};

SpeakerContribution speaker_contribution(const GrbmParams &params, const SpeakerData &data,
                                         int cd_steps, Rng rng) {
  GradientAccumulator g = positive_gradient(params, data);
  CdResult neg = negative_phase_cd(params, data, cd_steps, rng);
  g -= neg.gradient;
  double err = (data.vectors() - neg.reconstruction.vectors()).squaredNorm();
  return {std::move(g), err};
}

const char *first_non_finite(const GradientAccumulator &g) {
  if (!g.visible_bias.allFinite()) return "visible_bias";
  if (!g.speaker_bias.allFinite()) return "speaker_bias";
  if (!g.channel_bias.allFinite()) return "channel_bias";
  if (!g.speaker_loading.allFinite()) return "speaker_loading";
  if (!g.channel_loading.allFinite()) return "channel_loading";
  if (!g.log_variance.allFinite()) return "log_variance";
  return "none";
}

}  // namespace

TrainResult train(const IVectorCorpus &corpus, Eigen::Index dim_s, Eigen::Index dim_c,
                  const TrainConfig &config, const std::optional<CrossValidationSets> &cv,
                  const TrainHooks &hooks) {
  config.validate();
  const std::vector<SpeakerData> speakers = speaker_data(corpus);
  if (speakers.empty()) throw ValidationError("train: corpus has no labeled speakers");

  const Rng master(config.seed);
  TrainState state;
  if (hooks.resume) {
    state = *hooks.resume;
    check_dim(state.params.dim_p(), corpus.dim(), "train: resumed model");
  } else {
    Rng init_rng = master.derive(0);
    state.params = init_params(corpus.dim(), dim_s, dim_c, config, init_rng);
    state.velocity = GradientAccumulator::zeros_like(state.params);
  }
  if (hooks.on_epoch) hooks.on_epoch(state.epoch, state.params);

  TrainResult result{state.params, {}, state};
  double best_dcf = std::numeric_limits<double>::infinity();
  const std::size_t n_speakers = speakers.size();
  const std::size_t batch_size = std::min<std::size_t>(config.batch_speakers, n_speakers);
  const int first_epoch = state.epoch + 1, last_epoch = state.epoch + config.epochs;

  for (int epoch = first_epoch; epoch <= last_epoch; ++epoch) {
    auto start = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(n_speakers);
    for (std::size_t k = 0; k < n_speakers; ++k) order[k] = k;
    Rng shuffle_rng = master.derive(1).derive(static_cast<std::uint64_t>(epoch));
    for (std::size_t k = n_speakers; k > 1; --k)
      std::swap(order[k - 1], order[static_cast<std::size_t>(
                                  shuffle_rng.uniform_int(0, static_cast<std::int64_t>(k) - 1))]);
    const Rng chain_root = master.derive(2).derive(static_cast<std::uint64_t>(epoch));

    double squared_error = 0.0, vector_total = 0.0, grad_norm_sum = 0.0;
    int n_batches = 0;
    for (std::size_t begin = 0; begin < n_speakers; begin += batch_size) {
      const std::size_t end = std::min(begin + batch_size, n_speakers);
      std::vector<SpeakerContribution> parts(end - begin);
      auto work = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t k = lo; k < hi; ++k) {
          std::size_t spk = order[begin + k];
          parts[k] = speaker_contribution(state.params, speakers[spk], config.cd_steps,
                                          chain_root.derive(spk));
        }
      };
      const std::size_t n_threads = std::min<std::size_t>(config.threads, parts.size());
      if (n_threads <= 1) {
        work(0, parts.size());
      } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (parts.size() + n_threads - 1) / n_threads;
        for (std::size_t t = 0; t < n_threads; ++t) {
          std::size_t lo = t * chunk, hi = std::min(parts.size(), lo + chunk);
          if (lo < hi) pool.emplace_back(work, lo, hi);
        }
        for (auto &th : pool) th.join();
      }
      // Reduction in batch order, independent of the thread count.
      GradientAccumulator batch = GradientAccumulator::zeros_like(state.params);
      for (const auto &part : parts) {
        batch += part.gradient;
        squared_error += part.squared_error;
      }
      vector_total += batch.vector_count;
      batch *= 1.0 / batch.vector_count;
      if (!batch.all_finite()) {
        std::ostringstream msg;
        msg << "train: non-finite gradient in " << first_non_finite(batch) << " at epoch " << epoch
            << ", batch " << n_batches << " (learning_rate " << config.learning_rate << ")";
        throw NumericError(msg.str());
      }
      grad_norm_sum += batch.norm();
      sgd_momentum_step(state.params, state.velocity, batch, config);
      ++n_batches;
    }
    state.epoch = epoch;

    EpochStats stats;
    stats.epoch = epoch;
    stats.recon_err = squared_error / (vector_total * static_cast<double>(corpus.dim()));
    stats.grad_norm = grad_norm_sum / n_batches;
    if (cv && ((epoch - first_epoch + 1) % config.eval_every == 0 || epoch == last_epoch)) {
      stats.cv_min_dcf = cv_min_dcf(state.params, *cv);
      if (*stats.cv_min_dcf < best_dcf) {
        best_dcf = *stats.cv_min_dcf;
        result.params = state.params;
        result.report.best_epoch = epoch;
      }
    }
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.report.epochs.push_back(stats);
    if (hooks.on_epoch) hooks.on_epoch(epoch, state.params);
  }
  if (!cv) {
    result.params = state.params;
    result.report.best_epoch = state.epoch;
  } else if (result.report.epochs.empty()) {
    result.params = state.params;
    result.report.best_epoch = state.epoch;
  }
  result.final_state = state;
  return result;
}

}  // namespace grbm
