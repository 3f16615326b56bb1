// grbmspk/ivector_data.cc

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

#include "grbmspk/ivector_data.h"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "grbmspk/binary_io.h"
#include "grbmspk/text_format.h"

namespace grbm {

IVectorCorpus::IVectorCorpus(std::vector<IVectorRecord> records, Eigen::Index dim)
    : dim_(records.empty() ? dim : records.front().values.size()),
      records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const IVectorRecord &r = records_[i];
    if (r.values.size() != dim_)
      throw DimensionError("record " + std::to_string(i) + " ('" + r.vector_id +
                           "') has dimension " + std::to_string(r.values.size()) +
                           ", corpus dimension is " + std::to_string(dim_));
    if (!r.values.allFinite())
      throw ValidationError("record '" + r.vector_id + "' has a non-finite value");
    if (!(r.duration_seconds >= 0.0) || !std::isfinite(r.duration_seconds))
      throw ValidationError("record '" + r.vector_id + "' has an invalid duration");
    if (!id_index_.emplace(r.vector_id, i).second)
      throw ValidationError("duplicate vector_id '" + r.vector_id + "'");
    if (r.speaker_id) {
      auto [it, inserted] = speaker_index_.try_emplace(*r.speaker_id);
      if (inserted) speaker_order_.push_back(*r.speaker_id);
      it->second.push_back(i);
    }
  }
}

const std::vector<std::size_t> &IVectorCorpus::speaker_records(const std::string &speaker) const {
  auto it = speaker_index_.find(speaker);
  if (it == speaker_index_.end()) throw ValidationError("unknown speaker '" + speaker + "'");
  return it->second;
}

bool IVectorCorpus::has_speaker(const std::string &speaker) const {
  return speaker_index_.count(speaker) > 0;
}

Matrix IVectorCorpus::speaker_matrix(const std::string &speaker) const {
  const auto &idx = speaker_records(speaker);
  Matrix m(dim_, static_cast<Eigen::Index>(idx.size()));
  for (std::size_t n = 0; n < idx.size(); ++n) m.col(n) = records_[idx[n]].values;
  return m;
}

std::optional<std::size_t> IVectorCorpus::find(const std::string &vector_id) const {
  auto it = id_index_.find(vector_id);
  if (it == id_index_.end()) return std::nullopt;
  return it->second;
}

Matrix IVectorCorpus::as_matrix() const {
  Matrix m(dim_, static_cast<Eigen::Index>(records_.size()));
  for (std::size_t n = 0; n < records_.size(); ++n) m.col(n) = records_[n].values;
  return m;
}

// ---------------------------------------------------------------------------
// CSV and binary formats.

IVectorCorpus parse_corpus_csv(const std::string &text, const std::string &source) {
  auto rows = text::lines(text);
  while (!rows.empty() && text::trim(rows.back()).empty()) rows.pop_back();
  if (rows.empty()) throw ValidationError(source + ": empty corpus");

  auto header = text::split(rows[0], ',');
  if (header.size() < 4 || text::trim(header[0]) != "vector_id" ||
      text::trim(header[1]) != "speaker_id" || text::trim(header[2]) != "duration")
    throw ValidationError(source + ": header must be vector_id,speaker_id,duration,v0,...");
  const std::size_t dim = header.size() - 3;
  for (std::size_t k = 0; k < dim; ++k)
    if (text::trim(header[3 + k]) != "v" + std::to_string(k))
      throw ValidationError(source + ": header column " + std::to_string(3 + k) +
                            " must be v" + std::to_string(k));

  std::vector<IVectorRecord> records;
  for (std::size_t line = 1; line < rows.size(); ++line) {
    if (text::trim(rows[line]).empty()) continue;
    auto fields = text::split(rows[line], ',');
    std::string where = source + ":" + std::to_string(line + 1);
    if (fields.size() != dim + 3)
      throw DimensionError(where + ": row has dimension " +
                           std::to_string(fields.size() < 3 ? 0 : fields.size() - 3) +
                           ", expected " + std::to_string(dim));
    IVectorRecord r;
    r.vector_id = std::string(text::trim(fields[0]));
    if (r.vector_id.empty()) throw ValidationError(where + ": empty vector_id");
    auto spk = text::trim(fields[1]);
    if (!spk.empty()) r.speaker_id = std::string(spk);
    auto dur = text::parse_double(fields[2]);
    if (!dur) throw ValidationError(where + ": bad duration '" + std::string(fields[2]) + "'");
    r.duration_seconds = *dur;
    r.values.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < dim; ++k) {
      auto v = text::parse_double(fields[3 + k]);
      if (!v) throw ValidationError(where + ": bad value '" + std::string(fields[3 + k]) + "'");
      if (!std::isfinite(*v)) throw ValidationError(where + ": non-finite value");
      r.values(static_cast<Eigen::Index>(k)) = *v;
    }
    records.push_back(std::move(r));
  }
  if (records.empty()) throw ValidationError(source + ": empty corpus");
  return IVectorCorpus(std::move(records));
}

std::string format_corpus_csv(const IVectorCorpus &corpus) {
  std::string out = "vector_id,speaker_id,duration";
  for (Eigen::Index k = 0; k < corpus.dim(); ++k) out += ",v" + std::to_string(k);
  out += '\n';
  for (const auto &r : corpus.records()) {
    out += r.vector_id;
    out += ',';
    out += r.speaker_id.value_or("");
    out += ',';
    out += text::format_double(r.duration_seconds);
    for (Eigen::Index k = 0; k < r.values.size(); ++k) {
      out += ',';
      out += text::format_double(r.values(k));
    }
    out += '\n';
  }
  return out;
}

namespace {

constexpr std::uint32_t kIvecVersion = 1;

IVectorCorpus read_corpus_binary(std::istream &is, const std::string &path) {
  io::expect_magic(is, "IVEC", path);
  std::uint32_t version = io::read_u32(is);
  if (version != kIvecVersion)
    throw ValidationError(path + ": unsupported IVEC version " + std::to_string(version));
  Eigen::Index dim = io::read_u32(is);
  std::uint64_t count = io::read_u64(is);
  if (count == 0) throw ValidationError(path + ": empty corpus");
  std::vector<IVectorRecord> records;
  records.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    IVectorRecord r;
    r.vector_id = io::read_string(is);
    std::string spk = io::read_string(is);
    if (!spk.empty()) r.speaker_id = std::move(spk);
    r.duration_seconds = io::read_f64(is);
    r.values = io::read_vector(is, dim);
    records.push_back(std::move(r));
  }
  return IVectorCorpus(std::move(records));
}

}  // namespace

IVectorCorpus load_corpus(const std::string &path, CorpusFormat format) {
  if (format == CorpusFormat::kCsv) return parse_corpus_csv(io::read_file(path), path);
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open " + path);
  return read_corpus_binary(is, path);
}

IVectorCorpus load_corpus_auto(const std::string &path) {
  return load_corpus(path, io::peek_magic(path) == "IVEC" ? CorpusFormat::kBinary
                                                          : CorpusFormat::kCsv);
}

void save_corpus(const IVectorCorpus &corpus, const std::string &path, CorpusFormat format) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path);
  if (format == CorpusFormat::kCsv) {
    os << format_corpus_csv(corpus);
  } else {
    io::write_magic(os, "IVEC");
    io::write_u32(os, kIvecVersion);
    io::write_u32(os, static_cast<std::uint32_t>(corpus.dim()));
    io::write_u64(os, corpus.size());
    for (const auto &r : corpus.records()) {
      io::write_string(os, r.vector_id);
      io::write_string(os, r.speaker_id.value_or(""));
      io::write_f64(os, r.duration_seconds);
      io::write_vector(os, r.values);
    }
  }
  if (!os) throw Error("write failed: " + path);
}

// ---------------------------------------------------------------------------

IVectorCorpus filter_by_duration(const IVectorCorpus &corpus, double min_seconds) {
  std::vector<IVectorRecord> kept;
  for (const auto &r : corpus.records())
    if (!(r.duration_seconds < min_seconds)) kept.push_back(r);
  return IVectorCorpus(std::move(kept), corpus.dim());
}

CorpusPartition partition_by_count(const IVectorCorpus &corpus, const PartitionConfig &config) {
  const auto &tr = config.train_range, &ev = config.eval_range;
  if (tr.lo > tr.hi || ev.lo > ev.hi) throw ValidationError("partition: empty count range");
  if (config.enroll_per_speaker < 1)
    throw ValidationError("partition: enroll_per_speaker must be >= 1");
  auto overlaps = [](CountRange a, CountRange b) { return a.lo <= b.hi && b.lo <= a.hi; };
  if (overlaps(tr, ev)) throw ValidationError("partition: train and eval ranges overlap");
  if (tr.hi > config.cv_min || ev.hi > config.cv_min)
    throw ValidationError("partition: cross-validation range (> cv_min) overlaps another range");

  std::vector<IVectorRecord> train, model, test, model_cv, test_cv;
  for (const auto &spk : corpus.speakers()) {
    const auto &idx = corpus.speaker_records(spk);
    int count = static_cast<int>(idx.size());
    auto split = [&](std::vector<IVectorRecord> &enroll, std::vector<IVectorRecord> &probe) {
      for (std::size_t n = 0; n < idx.size(); ++n)
        (static_cast<int>(n) < config.enroll_per_speaker ? enroll : probe)
            .push_back(corpus[idx[n]]);
    };
    if (tr.contains(count)) {
      for (auto i : idx) train.push_back(corpus[i]);
    } else if (ev.contains(count)) {
      split(model, test);
    } else if (count > config.cv_min) {
      split(model_cv, test_cv);
    }
  }
  const auto dim = corpus.dim();
  return {IVectorCorpus(std::move(train), dim), IVectorCorpus(std::move(model), dim),
          IVectorCorpus(std::move(test), dim), IVectorCorpus(std::move(model_cv), dim),
          IVectorCorpus(std::move(test_cv), dim)};
}

// ---------------------------------------------------------------------------
// Whitening and projection.

std::pair<Vector, Matrix> corpus_moments(const IVectorCorpus &corpus) {
  Matrix x = corpus.as_matrix();
  const double n = static_cast<double>(x.cols());
  Vector mean = x.rowwise().sum() / n;
  x.colwise() -= mean;
  Matrix cov = x * x.transpose() / n;
  return {mean, cov};
}

WhiteningTransform fit_whitening(const IVectorCorpus &corpus) {
  if (corpus.size() < 2) throw ValidationError("fit_whitening: need at least 2 records");
  auto [mean, cov] = corpus_moments(corpus);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericError("fit_whitening: eigendecomposition failed");
  const Vector &lambda = eig.eigenvalues();
  double smallest = lambda.minCoeff(), largest = lambda.maxCoeff();
  if (!(smallest > 1e-12 * std::max(largest, 1e-300))) {
    std::ostringstream msg;
    msg << "fit_whitening: covariance is rank deficient (smallest eigenvalue " << smallest << ")";
    throw NumericError(msg.str());
  }
  const Matrix &v = eig.eigenvectors();
  Matrix transform = v * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
  return {mean, transform};
}

IVectorCorpus apply_whitening(const WhiteningTransform &whitening, const IVectorCorpus &corpus) {
  check_dim(corpus.dim(), whitening.mean.size(), "apply_whitening");
  Matrix x = corpus.as_matrix();
  x.colwise() -= whitening.mean;
  return with_values(corpus, whitening.transform * x);
}

void save_whitening(const WhiteningTransform &whitening, const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path);
  io::write_magic(os, "WHTN");
  io::write_u32(os, 1);
  io::write_u32(os, static_cast<std::uint32_t>(whitening.mean.size()));
  io::write_vector(os, whitening.mean);
  io::write_matrix_row_major(os, whitening.transform);
}

WhiteningTransform load_whitening(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open " + path);
  io::expect_magic(is, "WHTN", path);
  if (io::read_u32(is) != 1) throw ValidationError(path + ": unsupported WHTN version");
  Eigen::Index dim = io::read_u32(is);
  WhiteningTransform w;
  w.mean = io::read_vector(is, dim);
  w.transform = io::read_matrix_row_major(is, dim, dim);
  return w;
}

IVectorCorpus unit_sphere_project(const IVectorCorpus &corpus) {
  Matrix x = corpus.as_matrix();
  for (Eigen::Index n = 0; n < x.cols(); ++n) {
    double norm = x.col(n).norm();
    if (!(norm > 0.0))
      throw ValidationError("unit_sphere_project: zero-norm record '" +
                            corpus[static_cast<std::size_t>(n)].vector_id + "'");
    x.col(n) /= norm;
  }
  return with_values(corpus, x);
}

IVectorCorpus with_values(const IVectorCorpus &corpus, const Matrix &values) {
  check_dim(values.cols(), static_cast<Eigen::Index>(corpus.size()), "with_values");
  std::vector<IVectorRecord> out = corpus.records();
  for (std::size_t n = 0; n < out.size(); ++n) out[n].values = values.col(n);
  return IVectorCorpus(std::move(out), values.rows());
}

}  // namespace grbm
