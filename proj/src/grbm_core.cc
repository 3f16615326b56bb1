// grbmspk/grbm_core.cc

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

#include "grbmspk/grbm_core.h"

#include <cmath>
#include <fstream>
#include <numbers>
#include <vector>

#include "grbmspk/binary_io.h"
#include "grbmspk/numeric.h"

namespace grbm {

GrbmParams GrbmParams::zeros(Eigen::Index p, Eigen::Index dim_s, Eigen::Index dim_c) {
  GrbmParams params;
  params.visible_bias = Vector::Zero(p);
  params.speaker_bias = Vector::Zero(dim_s);
  params.channel_bias = Vector::Zero(dim_c);
  params.speaker_loading = Matrix::Zero(p, dim_s);
  params.channel_loading = Matrix::Zero(p, dim_c);
  params.log_variance = Vector::Zero(p);
  return params;
}

void GrbmParams::validate() const {
  const Eigen::Index p = dim_p();
  check_dim(log_variance.size(), p, "log_variance");
  check_dim(speaker_loading.rows(), p, "speaker_loading rows");
  check_dim(channel_loading.rows(), p, "channel_loading rows");
  check_dim(speaker_loading.cols(), dim_s(), "speaker_loading cols");
  check_dim(channel_loading.cols(), dim_c(), "channel_loading cols");
  if (!visible_bias.allFinite() || !speaker_bias.allFinite() || !channel_bias.allFinite() ||
      !speaker_loading.allFinite() || !channel_loading.allFinite() || !log_variance.allFinite())
    throw NumericError("GRBM parameters contain non-finite values");
}

SpeakerData::SpeakerData(Matrix vectors) : vectors_(std::move(vectors)) {
  if (vectors_.cols() < 1) throw ValidationError("SpeakerData needs at least one vector");
  sum_ = vectors_.rowwise().sum();
}

void check_enumerable(const GrbmParams &params, const EnumerationLimits &limits) {
  if (params.dim_s() > limits.max_factor_dim || params.dim_c() > limits.max_factor_dim ||
      params.dim_s() + params.dim_c() > limits.max_total_bits)
    throw CapacityError("exact enumeration refused: dim_s=" + std::to_string(params.dim_s()) +
                        ", dim_c=" + std::to_string(params.dim_c()) + " exceed the cap (" +
                        std::to_string(limits.max_factor_dim) + " per factor, " +
                        std::to_string(limits.max_total_bits) + " total)");
}

Vector bits_of(std::uint64_t index, Eigen::Index bits) {
  Vector v(bits);
  for (Eigen::Index j = 0; j < bits; ++j) v(j) = static_cast<double>((index >> j) & 1u);
  return v;
}

double energy(const GrbmParams &params, const Vector &x, const Vector &s, const Vector &c) {
  check_dim(x.size(), params.dim_p(), "energy: x");
  check_dim(s.size(), params.dim_s(), "energy: s");
  check_dim(c.size(), params.dim_c(), "energy: c");
  const Vector inv_var = params.inv_variance();
  const Vector diff = x - params.visible_bias;
  const Vector mean_shift = params.speaker_loading * s + params.channel_loading * c;
  return 0.5 * diff.cwiseProduct(diff).dot(inv_var) - params.speaker_bias.dot(s) -
         params.channel_bias.dot(c) - x.cwiseProduct(inv_var).dot(mean_shift);
}

double energy_total(const GrbmParams &params, const SpeakerData &data, const LatentState &latent) {
  check_dim(latent.count(), data.count(), "energy_total: channel count");
  double total = 0.0;
  for (Eigen::Index n = 0; n < data.count(); ++n)
    total += energy(params, data.vectors().col(n), latent.speaker, latent.channel.col(n));
  return total;
}

Vector posterior_speaker(const GrbmParams &params, const SpeakerData &data) {
  check_dim(data.dim(), params.dim_p(), "posterior_speaker");
  const double n = static_cast<double>(data.count());
  Vector act = n * params.speaker_bias +
               params.speaker_loading.transpose() * data.sum().cwiseProduct(params.inv_variance());
  return sigmoid(act);
}

Vector posterior_channel(const GrbmParams &params, const Vector &x) {
  check_dim(x.size(), params.dim_p(), "posterior_channel");
  Vector act = params.channel_bias +
               params.channel_loading.transpose() * x.cwiseProduct(params.inv_variance());
  return sigmoid(act);
}

Matrix posterior_channel_all(const GrbmParams &params, const SpeakerData &data) {
  check_dim(data.dim(), params.dim_p(), "posterior_channel_all");
  Matrix act = params.channel_loading.transpose() *
               (params.inv_variance().asDiagonal() * data.vectors());
  act.colwise() += params.channel_bias;
  return act.unaryExpr([](double a) { return sigmoid(a); });
}

SpeakerData sample_visible(const GrbmParams &params, const LatentState &latent, Rng &rng) {
  check_dim(latent.speaker.size(), params.dim_s(), "sample_visible: s");
  check_dim(latent.channel.rows(), params.dim_c(), "sample_visible: c");
  const Eigen::Index p = params.dim_p();
  const Vector sigma = (0.5 * params.log_variance.array()).exp();
  const Vector speaker_mean = params.visible_bias + params.speaker_loading * latent.speaker;
  Matrix x(p, latent.count());
  for (Eigen::Index n = 0; n < latent.count(); ++n) {
    Vector mean = speaker_mean + params.channel_loading * latent.channel.col(n);
    for (Eigen::Index i = 0; i < p; ++i) x(i, n) = mean(i) + sigma(i) * rng.normal();
  }
  return SpeakerData(std::move(x));
}

LatentState sample_latent(const GrbmParams &params, const SpeakerData &data, Rng &rng) {
  LatentState latent;
  const Vector ps = posterior_speaker(params, data);
  latent.speaker.resize(ps.size());
  for (Eigen::Index j = 0; j < ps.size(); ++j) latent.speaker(j) = ps(j) > rng.uniform() ? 1.0 : 0.0;
  const Matrix pc = posterior_channel_all(params, data);
  latent.channel.resize(pc.rows(), pc.cols());
  for (Eigen::Index n = 0; n < pc.cols(); ++n)
    for (Eigen::Index j = 0; j < pc.rows(); ++j)
      latent.channel(j, n) = pc(j, n) > rng.uniform() ? 1.0 : 0.0;
  return latent;
}

Matrix config_log_integrals(const GrbmParams &params, const EnumerationLimits &limits) {
  check_enumerable(params, limits);
  const Eigen::Index p = params.dim_p();
  const std::uint64_t n_s = std::uint64_t{1} << params.dim_s();
  const std::uint64_t n_c = std::uint64_t{1} << params.dim_c();
  const Vector inv_var = params.inv_variance();
  // Gaussian normaliser (2 pi)^{p/2} prod_i sigma_i, shared by every config.
  const double log_norm = 0.5 * static_cast<double>(p) * std::log(2.0 * std::numbers::pi) +
                          0.5 * params.log_variance.sum();

  std::vector<Vector> channel_shift(n_c);
  std::vector<double> channel_bias_term(n_c);
  for (std::uint64_t k = 0; k < n_c; ++k) {
    Vector c = bits_of(k, params.dim_c());
    channel_shift[k] = params.channel_loading * c;
    channel_bias_term[k] = params.channel_bias.dot(c);
  }
  Matrix out(static_cast<Eigen::Index>(n_s), static_cast<Eigen::Index>(n_c));
  for (std::uint64_t i = 0; i < n_s; ++i) {
    Vector s = bits_of(i, params.dim_s());
    Vector speaker_shift = params.speaker_loading * s;
    double speaker_term = params.speaker_bias.dot(s);
    for (std::uint64_t k = 0; k < n_c; ++k) {
      // exp(d'h + (b/sigma^2)' W h + 0.5 |W h / sigma|^2) with m = W h.
      double quad = 0.0;
      for (Eigen::Index r = 0; r < p; ++r) {
        double m = speaker_shift(r) + channel_shift[k](r);
        quad += (params.visible_bias(r) + 0.5 * m) * m * inv_var(r);
      }
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          log_norm + speaker_term + channel_bias_term[k] + quad;
    }
  }
  return out;
}

namespace {

// N * log sum_c I(s, c) for every speaker configuration s.
Vector speaker_config_log_weights(const Matrix &log_integrals, int n_order) {
  Vector w(log_integrals.rows());
  std::vector<double> row(static_cast<std::size_t>(log_integrals.cols()));
  for (Eigen::Index i = 0; i < log_integrals.rows(); ++i) {
    for (Eigen::Index k = 0; k < log_integrals.cols(); ++k) row[k] = log_integrals(i, k);
    w(i) = n_order * log_sum_exp(row);
  }
  return w;
}

std::uint64_t sample_categorical(const Vector &log_weights, Rng &rng) {
  const double max = log_weights.maxCoeff();
  Vector w = (log_weights.array() - max).exp();
  double target = rng.uniform() * w.sum();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    acc += w(i);
    if (target < acc) return static_cast<std::uint64_t>(i);
  }
  return static_cast<std::uint64_t>(w.size() - 1);
}

}  // namespace

LogPartition log_partition_exact(const GrbmParams &params, int n_order,
                                 const EnumerationLimits &limits) {
  if (n_order < 1) throw ValidationError("log_partition_exact: n_order must be >= 1");
  Matrix log_integrals = config_log_integrals(params, limits);
  Vector w = speaker_config_log_weights(log_integrals, n_order);
  return {n_order, log_sum_exp(std::span<const double>(w.data(), w.size()))};
}

double log_unnormalized_marginal(const GrbmParams &params, const SpeakerData &data) {
  check_dim(data.dim(), params.dim_p(), "log_marginal");
  const Vector inv_var = params.inv_variance();
  Matrix centred = data.vectors().colwise() - params.visible_bias;
  double quad = (centred.array().square().colwise() * inv_var.array()).sum();

  const double n = static_cast<double>(data.count());
  Vector speaker_act =
      n * params.speaker_bias + params.speaker_loading.transpose() * data.sum().cwiseProduct(inv_var);
  Matrix channel_act = params.channel_loading.transpose() * (inv_var.asDiagonal() * data.vectors());
  channel_act.colwise() += params.channel_bias;

  double hidden = 0.0;
  for (Eigen::Index i = 0; i < speaker_act.size(); ++i) hidden += softplus(speaker_act(i));
  for (Eigen::Index k = 0; k < channel_act.size(); ++k) hidden += softplus(channel_act(k));
  return -0.5 * quad + hidden;
}

double log_marginal(const GrbmParams &params, const SpeakerData &data, const LogPartition &log_z) {
  if (log_z.n_order != data.count())
    throw ValidationError("log_marginal: partition function is for N=" +
                          std::to_string(log_z.n_order) + " but data has N=" +
                          std::to_string(data.count()));
  return log_unnormalized_marginal(params, data) - log_z.log_z;
}

double log_joint(const GrbmParams &params, const SpeakerData &data, const LatentState &latent,
                 const LogPartition &log_z) {
  if (log_z.n_order != data.count())
    throw ValidationError("log_joint: partition function order does not match data");
  return -energy_total(params, data, latent) - log_z.log_z;
}

GeneratedSpeaker generate_speaker(const GrbmParams &params, int n_vectors, Rng &rng,
                                  const GenerateOptions &options) {
  if (n_vectors < 1) throw ValidationError("generate_speaker: n_vectors must be >= 1");
  bool exact = true;
  try {
    check_enumerable(params, options.limits);
  } catch (const CapacityError &) {
    if (!options.allow_gibbs_fallback) throw;
    exact = false;
  }

  LatentState latent;
  if (exact) {
    // P_N(s, C) is proportional to prod_n I(s, c_n): draw s from its marginal
    // (sum_c I(s, c))^N, then every c_n independently given s.
    Matrix log_integrals = config_log_integrals(params, options.limits);
    std::uint64_t s_index =
        sample_categorical(speaker_config_log_weights(log_integrals, n_vectors), rng);
    latent.speaker = bits_of(s_index, params.dim_s());
    latent.channel.resize(params.dim_c(), n_vectors);
    Vector row = log_integrals.row(static_cast<Eigen::Index>(s_index)).transpose();
    for (int n = 0; n < n_vectors; ++n)
      latent.channel.col(n) = bits_of(sample_categorical(row, rng), params.dim_c());
  } else {
    latent.speaker.resize(params.dim_s());
    latent.channel.resize(params.dim_c(), n_vectors);
    for (Eigen::Index j = 0; j < latent.speaker.size(); ++j)
      latent.speaker(j) = rng.uniform() < 0.5 ? 1.0 : 0.0;
    for (Eigen::Index k = 0; k < latent.channel.size(); ++k)
      latent.channel(k) = rng.uniform() < 0.5 ? 1.0 : 0.0;
    for (int sweep = 0; sweep < options.gibbs_burn_in; ++sweep)
      latent = sample_latent(params, sample_visible(params, latent, rng), rng);
  }
  SpeakerData data = sample_visible(params, latent, rng);
  return {std::move(latent), std::move(data)};
}

// ---------------------------------------------------------------------------

namespace {
constexpr std::uint32_t kGrbmVersion = 1;
}

void write_grbm(const GrbmParams &params, std::ostream &os) {
  params.validate();
  io::write_magic(os, "GRBM");
  io::write_u32(os, kGrbmVersion);
  io::write_u32(os, static_cast<std::uint32_t>(params.dim_p()));
  io::write_u32(os, static_cast<std::uint32_t>(params.dim_s()));
  io::write_u32(os, static_cast<std::uint32_t>(params.dim_c()));
  io::write_vector(os, params.visible_bias);
  io::write_vector(os, params.speaker_bias);
  io::write_vector(os, params.channel_bias);
  io::write_vector(os, params.log_variance);
  io::write_matrix_row_major(os, params.speaker_loading);
  io::write_matrix_row_major(os, params.channel_loading);
}

GrbmParams read_grbm(std::istream &is, const std::string &what) {
  io::expect_magic(is, "GRBM", what);
  std::uint32_t version = io::read_u32(is);
  if (version != kGrbmVersion)
    throw ValidationError(what + ": unsupported GRBM version " + std::to_string(version));
  Eigen::Index p = io::read_u32(is), ds = io::read_u32(is), dc = io::read_u32(is);
  GrbmParams params;
  params.visible_bias = io::read_vector(is, p);
  params.speaker_bias = io::read_vector(is, ds);
  params.channel_bias = io::read_vector(is, dc);
  params.log_variance = io::read_vector(is, p);
  params.speaker_loading = io::read_matrix_row_major(is, p, ds);
  params.channel_loading = io::read_matrix_row_major(is, p, dc);
  params.validate();
  return params;
}

void save_grbm(const GrbmParams &params, const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path);
  write_grbm(params, os);
  if (!os) throw Error("write failed: " + path);
}

GrbmParams load_grbm(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open " + path);
  return read_grbm(is, path);
}

}  // namespace grbm
