// grbmspk/ivector_data.h

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

#ifndef GRBMSPK_IVECTOR_DATA_H_
#define GRBMSPK_IVECTOR_DATA_H_

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "grbmspk/common.h"

namespace grbm {

struct IVectorRecord {
  std::string vector_id;
  std::optional<std::string> speaker_id;  // absent for unlabeled vectors
  double duration_seconds = 0.0;
  Vector values;
};

/// A set of i-vectors of a common dimension, indexed by speaker.
///
/// Speakers are kept in order of first appearance so that everything derived
/// from a corpus (partitions, trial lists, batches) follows file order.
class IVectorCorpus {
 public:
  IVectorCorpus() = default;

  /// Validates dimensions, finiteness and id uniqueness. `dim` is required
  /// only when `records` is empty.
  explicit IVectorCorpus(std::vector<IVectorRecord> records, Eigen::Index dim = 0);

  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  const std::vector<IVectorRecord> &records() const { return records_; }
  const IVectorRecord &operator[](std::size_t i) const { return records_[i]; }

  /// Speaker ids in first-appearance order.
  const std::vector<std::string> &speakers() const { return speaker_order_; }

  /// Record indices of one speaker, in file order. Throws for unknown ids.
  const std::vector<std::size_t> &speaker_records(const std::string &speaker) const;

  bool has_speaker(const std::string &speaker) const;

  /// Vectors of one speaker as columns of a p x N matrix.
  Matrix speaker_matrix(const std::string &speaker) const;

  /// Index of a vector id, if present.
  std::optional<std::size_t> find(const std::string &vector_id) const;

  /// All vectors as columns.
  Matrix as_matrix() const;

 private:
  Eigen::Index dim_ = 0;
  std::vector<IVectorRecord> records_;
  std::vector<std::string> speaker_order_;
  std::map<std::string, std::vector<std::size_t>> speaker_index_;
  std::map<std::string, std::size_t> id_index_;
};

enum class CorpusFormat { kCsv, kBinary };

IVectorCorpus load_corpus(const std::string &path, CorpusFormat format);
IVectorCorpus parse_corpus_csv(const std::string &text, const std::string &source = "<string>");
void save_corpus(const IVectorCorpus &corpus, const std::string &path, CorpusFormat format);
std::string format_corpus_csv(const IVectorCorpus &corpus);

/// Picks the format from the file's magic bytes.
IVectorCorpus load_corpus_auto(const std::string &path);

/// Drops records strictly shorter than `min_seconds`.
IVectorCorpus filter_by_duration(const IVectorCorpus &corpus, double min_seconds);

struct CountRange {
  int lo = 0;
  int hi = 0;
  bool contains(int n) const { return n >= lo && n <= hi; }
};

struct PartitionConfig {
  CountRange train_range{3, 10};
  CountRange eval_range{11, 15};
  int cv_min = 15;
  int enroll_per_speaker = 5;
};

struct CorpusPartition {
  IVectorCorpus train;
  IVectorCorpus model;
  IVectorCorpus test;
  IVectorCorpus model_cv;
  IVectorCorpus test_cv;
};

/// Routes each labeled speaker by its vector count. Speakers whose count falls
/// in no range, and unlabeled records, are dropped.
CorpusPartition partition_by_count(const IVectorCorpus &corpus,
                                   const PartitionConfig &config = {});

struct WhiteningTransform {
  Vector mean;
  Matrix transform;
};

/// Symmetric inverse square root of the (1/n) sample covariance.
WhiteningTransform fit_whitening(const IVectorCorpus &corpus);
IVectorCorpus apply_whitening(const WhiteningTransform &whitening, const IVectorCorpus &corpus);
void save_whitening(const WhiteningTransform &whitening, const std::string &path);
WhiteningTransform load_whitening(const std::string &path);

/// Scales every record to unit Euclidean norm.
IVectorCorpus unit_sphere_project(const IVectorCorpus &corpus);

/// Builds a corpus from a new set of values with the same labels.
IVectorCorpus with_values(const IVectorCorpus &corpus, const Matrix &values);

/// (sample mean, 1/n sample covariance) over all records.
std::pair<Vector, Matrix> corpus_moments(const IVectorCorpus &corpus);

}  // namespace grbm

#endif  // GRBMSPK_IVECTOR_DATA_H_
