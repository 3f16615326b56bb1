// grbmspk/synthgen.cc

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

#include "grbmspk/synthgen.h"

#include <cstdio>
#include <sstream>

#include "grbmspk/binary_io.h"
#include "grbmspk/text_format.h"

namespace grbm {

namespace {

std::string speaker_name(int k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "spk%05d", k);
  return buf;
}

std::string vector_name(const std::string &speaker, int n) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "_%03d", n);
  return speaker + buf;
}

void check_settings(const SynthSettings &s) {
  if (s.n_speakers < 1) throw ValidationError("synth: n_speakers must be >= 1");
  if (s.per_speaker.lo < 1 || s.per_speaker.hi < s.per_speaker.lo)
    throw ValidationError("synth: invalid vectors-per-speaker range " + std::to_string(s.per_speaker.lo) +
                          ":" + std::to_string(s.per_speaker.hi));
  if (!(s.duration_seconds >= 0.0)) throw ValidationError("synth: duration must be >= 0");
}

void append_records(std::vector<IVectorRecord> &records, int speaker, const Matrix &vectors,
                    double duration) {
  const std::string spk = speaker_name(speaker);
  for (Eigen::Index n = 0; n < vectors.cols(); ++n)
    records.push_back({vector_name(spk, static_cast<int>(n)), spk, duration, vectors.col(n)});
}

std::string manifest_text(const std::string &kind, const std::string &hash, const SynthSettings &s,
                          std::size_t n_vectors) {
  std::ostringstream os;
  os << "# kind=" << kind << "\n"
     << "# truth_hash=" << hash << "\n"
     << "# seed=" << s.seed << "\n"
     << "# speakers=" << s.n_speakers << "\n"
     << "# per_speaker=" << s.per_speaker.lo << ":" << s.per_speaker.hi << "\n"
     << "# duration=" << text::format_double(s.duration_seconds) << "\n"
     << "# vectors=" << n_vectors << "\n";
  return os.str();
}

}  // namespace

SynthResult synth_corpus(const GrbmParams &truth, const SynthSettings &settings,
                         const GenerateOptions &options) {
  truth.validate();
  check_settings(settings);
  const Rng root(settings.seed);
  std::vector<IVectorRecord> records;
  for (int k = 0; k < settings.n_speakers; ++k) {
    Rng rng = root.derive(static_cast<std::uint64_t>(k));
    int n = static_cast<int>(rng.uniform_int(settings.per_speaker.lo, settings.per_speaker.hi));
    GeneratedSpeaker spk = generate_speaker(truth, n, rng, options);
    append_records(records, k, spk.data.vectors(), settings.duration_seconds);
  }
  const std::size_t count = records.size();
  return {IVectorCorpus(std::move(records), truth.dim_p()),
          manifest_text("grbm", grbm_hash(truth), settings, count)};
}

SynthResult synth_plda_corpus(const PldaParams &truth, const SynthSettings &settings) {
  truth.validate();
  check_settings(settings);
  const Rng root(settings.seed);
  const Vector noise_std = truth.residual_variance.cwiseSqrt();
  std::vector<IVectorRecord> records;
  for (int k = 0; k < settings.n_speakers; ++k) {
    Rng rng = root.derive(static_cast<std::uint64_t>(k));
    int n = static_cast<int>(rng.uniform_int(settings.per_speaker.lo, settings.per_speaker.hi));
    Vector hs(truth.speaker_dim());
    for (auto &v : hs) v = rng.normal();
    const Vector centre = truth.mean + truth.speaker_loading * hs;
    Matrix vectors(truth.dim(), n);
    for (int i = 0; i < n; ++i) {
      Vector hc(truth.channel_dim());
      for (auto &v : hc) v = rng.normal();
      Vector x = centre + truth.channel_loading * hc;
      for (Eigen::Index d = 0; d < x.size(); ++d) x(d) += noise_std(d) * rng.normal();
      vectors.col(i) = x;
    }
    append_records(records, k, vectors, settings.duration_seconds);
  }
  const std::size_t count = records.size();
  return {IVectorCorpus(std::move(records), truth.dim()),
          manifest_text("plda", plda_hash(truth), settings, count)};
}

GrbmParams random_truth(Eigen::Index p, Eigen::Index dim_s, Eigen::Index dim_c, std::uint64_t seed,
                        double speaker_scale, double channel_scale) {
  if (p < 1 || dim_s < 1 || dim_c < 0 || dim_s + dim_c > p)
    throw ValidationError("random_truth: need 1 <= dim_s and dim_s + dim_c <= p");
  Rng rng(seed);
  Matrix gauss(p, dim_s + dim_c);
  for (Eigen::Index k = 0; k < gauss.size(); ++k) gauss(k) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(gauss);
  const Matrix q = qr.householderQ() * Matrix::Identity(p, dim_s + dim_c);

  GrbmParams t = GrbmParams::zeros(p, dim_s, dim_c);
  t.speaker_loading = speaker_scale * q.leftCols(dim_s);
  t.channel_loading = channel_scale * q.rightCols(dim_c);
  // With orthogonal columns, |F s + G c|^2 = sum_j s_j |F_j|^2 + sum_j c_j |G_j|^2,
  // so b = -(sum of columns) / 2 makes every configuration integral equal and
  // then f = g = 0 and E[x] = 0.
  t.visible_bias = -0.5 * (t.speaker_loading.rowwise().sum() + t.channel_loading.rowwise().sum());
  t.speaker_bias = (-(t.speaker_loading.transpose() * t.visible_bias) -
                    0.5 * t.speaker_loading.colwise().squaredNorm().transpose());
  t.channel_bias = (-(t.channel_loading.transpose() * t.visible_bias) -
                    0.5 * t.channel_loading.colwise().squaredNorm().transpose());
  return t;
}

PldaParams random_plda_truth(Eigen::Index p, Eigen::Index q_s, Eigen::Index q_c, std::uint64_t seed,
                             double speaker_scale, double channel_scale) {
  if (p < 1 || q_s < 0 || q_c < 0) throw ValidationError("random_plda_truth: invalid dimensions");
  Rng rng(seed);
  PldaParams t;
  t.mean = Vector::Zero(p);
  t.speaker_loading.resize(p, q_s);
  for (Eigen::Index k = 0; k < t.speaker_loading.size(); ++k)
    t.speaker_loading(k) = speaker_scale * rng.normal();
  t.channel_loading.resize(p, q_c);
  for (Eigen::Index k = 0; k < t.channel_loading.size(); ++k)
    t.channel_loading(k) = channel_scale * rng.normal();
  t.residual_variance = Vector::Ones(p);
  return t;
}

std::string grbm_hash(const GrbmParams &params) {
  std::ostringstream os;
  write_grbm(params, os);
  return io::content_hash(os.str());
}

std::string plda_hash(const PldaParams &params) {
  std::ostringstream os;
  io::write_vector(os, params.mean);
  io::write_matrix_row_major(os, params.speaker_loading);
  io::write_matrix_row_major(os, params.channel_loading);
  io::write_vector(os, params.residual_variance);
  return io::content_hash(os.str());
}

}  // namespace grbm
