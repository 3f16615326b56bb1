// grbmspk/scoring.cc

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

#include "grbmspk/scoring.h"

#include <cmath>
#include <fstream>
#include <map>
#include <memory>

#include "grbmspk/binary_io.h"
#include "grbmspk/numeric.h"
#include "grbmspk/text_format.h"

namespace grbm {

PartitionTriplet exact_partition_triplet(const GrbmParams &params, int n_enroll,
                                         const EnumerationLimits &limits) {
  return {log_partition_exact(params, n_enroll, limits), log_partition_exact(params, 1, limits),
          log_partition_exact(params, n_enroll + 1, limits)};
}

double score_llr(const GrbmParams &params, const SpeakerData &enrollment, const Vector &test,
                 const std::optional<PartitionTriplet> &partition) {
  check_dim(enrollment.dim(), params.dim_p(), "score_llr: enrollment");
  check_dim(test.size(), params.dim_p(), "score_llr: test");
  const double n = static_cast<double>(enrollment.count());
  const Vector inv_var = params.inv_variance();
  const Matrix &loading = params.speaker_loading;
  const Vector &bias = params.speaker_bias;
  Vector enroll_act = n * bias + loading.transpose() * enrollment.sum().cwiseProduct(inv_var);
  Vector test_act = bias + loading.transpose() * test.cwiseProduct(inv_var);
  double score = 0.0;
  for (Eigen::Index i = 0; i < bias.size(); ++i)
    score += softplus(enroll_act(i) + test_act(i)) - softplus(enroll_act(i)) - softplus(test_act(i));
  if (partition) {
    if (partition->enroll.n_order != enrollment.count() || partition->single.n_order != 1 ||
        partition->joint.n_order != enrollment.count() + 1)
      throw ValidationError("score_llr: partition triplet does not match enrollment size");
    score += partition->enroll.log_z + partition->single.log_z - partition->joint.log_z;
  }
  return score;
}

Vector project_f(const GrbmParams &params, const Vector &x) {
  check_dim(x.size(), params.dim_p(), "project_f");
  Vector y = params.speaker_loading.transpose() * x;
  double norm = y.norm();
  double scale = params.speaker_loading.norm() * x.norm();
  if (!(norm > 1e-12 * scale) || !(norm > 0.0))
    throw NumericError("project_f: projection onto the speaker subspace vanishes");
  return y / norm;
}

IVectorCorpus project_corpus_f(const GrbmParams &params, const IVectorCorpus &corpus) {
  check_dim(corpus.dim(), params.dim_p(), "project_corpus_f");
  Matrix out(params.dim_s(), static_cast<Eigen::Index>(corpus.size()));
  for (std::size_t n = 0; n < corpus.size(); ++n) {
    try {
      out.col(static_cast<Eigen::Index>(n)) = project_f(params, corpus[n].values);
    } catch (const NumericError &) {
      throw NumericError("project_f: projection of '" + corpus[n].vector_id + "' vanishes");
    }
  }
  return with_values(corpus, out);
}

namespace {

void require_unit(const Vector &v, const char *what) {
  if (std::abs(v.norm() - 1.0) > 1e-9)
    throw ValidationError(std::string(what) + ": expected a unit vector");
}

// Mean enrollment vector, validated.
Vector enrollment_mean(const Matrix &enrollment, const Vector &test) {
  if (enrollment.cols() < 1) throw ValidationError("cosine scoring: empty enrollment");
  check_dim(test.size(), enrollment.rows(), "cosine scoring: test");
  for (Eigen::Index n = 0; n < enrollment.cols(); ++n) require_unit(enrollment.col(n), "cosine enrollment");
  require_unit(test, "cosine test");
  Vector mean = enrollment.rowwise().mean();
  if (!(mean.norm() > 1e-12)) throw NumericError("cosine scoring: mean enrollment vector has zero norm");
  return mean;
}

}  // namespace

double score_cosine(const Matrix &enrollment, const Vector &test) {
  Vector mean = enrollment_mean(enrollment, test);
  return test.dot(mean) / mean.norm();
}

double score_cosine_normalized(const Matrix &enrollment, const Vector &test) {
  Vector mean = enrollment_mean(enrollment, test);
  double norm = mean.norm();
  // ||y_sp|| relative to the mean enrollment norm: equal for exact unit
  // vectors, and exactly 1 for a single enrollment vector.
  double spread = norm / enrollment.colwise().norm().mean();
  return test.dot(mean) / norm / spread;
}

double score_plda_projected(const GrbmParams &grbm, const PldaParams &plda_f,
                            const Matrix &enrollment, const Vector &test) {
  Matrix y(grbm.dim_s(), enrollment.cols());
  for (Eigen::Index n = 0; n < enrollment.cols(); ++n) y.col(n) = project_f(grbm, enrollment.col(n));
  return plda_score(plda_f, y, project_f(grbm, test));
}

// ---------------------------------------------------------------------------

ScoreFile score_trials(const std::vector<Trial> &trials, const IVectorCorpus &model_corpus,
                       const IVectorCorpus &test_corpus, const ScorerFactory &factory,
                       const std::string &scorer_name) {
  ScoreFile out;
  out.scorer = scorer_name;
  out.entries.reserve(trials.size());
  const Trial *current = nullptr;
  EnrollmentScorer scorer;
  for (const auto &trial : trials) {
    if (trial.enrollment_ids.empty())
      throw ValidationError("trial for '" + trial.model_speaker_id + "' has no enrollment vectors");
    if (!current || current->model_speaker_id != trial.model_speaker_id ||
        current->enrollment_ids != trial.enrollment_ids) {
      Matrix enroll(model_corpus.dim(), static_cast<Eigen::Index>(trial.enrollment_ids.size()));
      for (std::size_t n = 0; n < trial.enrollment_ids.size(); ++n) {
        auto idx = model_corpus.find(trial.enrollment_ids[n]);
        if (!idx) throw ValidationError("unknown enrollment vector '" + trial.enrollment_ids[n] + "'");
        enroll.col(static_cast<Eigen::Index>(n)) = model_corpus[*idx].values;
      }
      scorer = factory(enroll);
      current = &trial;
    }
    auto idx = test_corpus.find(trial.test_vector_id);
    if (!idx) throw ValidationError("unknown test vector '" + trial.test_vector_id + "'");
    double score = scorer(test_corpus[*idx].values);
    if (!std::isfinite(score))
      throw NumericError("non-finite score for trial " + trial.model_speaker_id + "/" +
                         trial.test_vector_id);
    out.entries.push_back({trial.model_speaker_id, trial.test_vector_id, score, trial.label});
  }
  return out;
}

void require_uniform_enrollment(const std::vector<Trial> &trials) {
  for (const auto &t : trials)
    if (t.enrollment_ids.size() != trials.front().enrollment_ids.size())
      throw ValidationError(
          "LLR without exact partition functions requires every model to have the same number "
          "of enrollment vectors (the log Z_N Z_1 / Z_{N+1} term only cancels at fixed N); "
          "model '" + t.model_speaker_id + "' has " + std::to_string(t.enrollment_ids.size()) +
          ", expected " + std::to_string(trials.front().enrollment_ids.size()));
}

ScorerFactory llr_scorer(const GrbmParams &params, bool exact_partition,
                         const EnumerationLimits &limits) {
  auto shared = std::make_shared<const GrbmParams>(params);
  auto cache = std::make_shared<std::map<Eigen::Index, PartitionTriplet>>();
  return [shared, cache, exact_partition, limits](const Matrix &enrollment) -> EnrollmentScorer {
    const GrbmParams &p = *shared;
    check_dim(enrollment.rows(), p.dim_p(), "llr scorer");
    const Eigen::Index n = enrollment.cols();
    const Vector inv_var = p.inv_variance();
    Vector enroll_act = static_cast<double>(n) * p.speaker_bias +
                        p.speaker_loading.transpose() * enrollment.rowwise().sum().cwiseProduct(inv_var);
    double constant = 0.0;
    for (Eigen::Index i = 0; i < enroll_act.size(); ++i) constant -= softplus(enroll_act(i));
    if (exact_partition) {
      auto it = cache->find(n);
      if (it == cache->end())
        it = cache->emplace(n, exact_partition_triplet(p, static_cast<int>(n), limits)).first;
      constant += it->second.enroll.log_z + it->second.single.log_z - it->second.joint.log_z;
    }
    return [shared, enroll_act, constant, inv_var](const Vector &test) {
      const GrbmParams &q = *shared;
      Vector test_act = q.speaker_bias + q.speaker_loading.transpose() * test.cwiseProduct(inv_var);
      double score = constant;
      for (Eigen::Index i = 0; i < test_act.size(); ++i)
        score += softplus(enroll_act(i) + test_act(i)) - softplus(test_act(i));
      return score;
    };
  };
}

ScorerFactory cosine_scorer(bool normalized) {
  return [normalized](const Matrix &enrollment) -> EnrollmentScorer {
    return [enrollment, normalized](const Vector &test) {
      return normalized ? score_cosine_normalized(enrollment, test) : score_cosine(enrollment, test);
    };
  };
}

ScorerFactory plda_scorer(const PldaParams &params) {
  auto shared = std::make_shared<const PldaParams>(params);
  return [shared](const Matrix &enrollment) -> EnrollmentScorer {
    return [shared, enrollment](const Vector &test) { return plda_score(*shared, enrollment, test); };
  };
}

// ---------------------------------------------------------------------------
// Fusion.

namespace {

struct FusionData {
  Matrix features;  // trials x (systems + 1); last column is the constant 1
  Vector target;    // 1 for target, 0 for nontarget
  Vector weight;    // class-balanced
};

FusionData fusion_data(const std::vector<ScoreFile> &systems) {
  if (systems.empty()) throw ValidationError("fusion: no systems");
  for (std::size_t k = 1; k < systems.size(); ++k) check_same_trials(systems[0], systems[k]);
  const auto &ref = systems[0].entries;
  const Eigen::Index n = static_cast<Eigen::Index>(ref.size());
  const Eigen::Index k = static_cast<Eigen::Index>(systems.size());
  FusionData d{Matrix(n, k + 1), Vector(n), Vector(n)};
  double n_target = 0, n_nontarget = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index s = 0; s < k; ++s) d.features(i, s) = systems[s].entries[i].score;
    d.features(i, k) = 1.0;
    const auto &label = ref[i].label;
    if (!label) throw ValidationError("fusion: trial " + std::to_string(i) + " is unlabeled");
    d.target(i) = *label == TrialLabel::kTarget ? 1.0 : 0.0;
    (d.target(i) > 0 ? n_target : n_nontarget) += 1;
  }
  if (n_target == 0 || n_nontarget == 0)
    throw ValidationError("fusion: training trials must contain both targets and nontargets");
  for (Eigen::Index i = 0; i < n; ++i) d.weight(i) = d.target(i) > 0 ? 0.5 / n_target : 0.5 / n_nontarget;
  return d;
}

double objective(const FusionData &d, const Vector &theta) {
  Vector act = d.features * theta;
  double total = 0.0;
  for (Eigen::Index i = 0; i < act.size(); ++i)
    // -log sigmoid(a) = softplus(-a); -log(1 - sigmoid(a)) = softplus(a).
    total += d.weight(i) * (d.target(i) > 0 ? softplus(-act(i)) : softplus(act(i)));
  return total;
}

Vector to_theta(const FusionWeights &w) {
  Vector theta(static_cast<Eigen::Index>(w.weights.size()) + 1);
  for (std::size_t k = 0; k < w.weights.size(); ++k) theta(static_cast<Eigen::Index>(k)) = w.weights[k];
  theta(theta.size() - 1) = w.offset;
  return theta;
}

FusionWeights from_theta(const Vector &theta) {
  FusionWeights w;
  for (Eigen::Index k = 0; k + 1 < theta.size(); ++k) w.weights.push_back(theta(k));
  w.offset = theta(theta.size() - 1);
  return w;
}

}  // namespace

double fusion_objective(const FusionWeights &weights, const std::vector<ScoreFile> &systems) {
  FusionData d = fusion_data(systems);
  check_dim(static_cast<Eigen::Index>(weights.weights.size()), d.features.cols() - 1, "fusion weights");
  return objective(d, to_theta(weights));
}

FusionWeights fuse_train(const std::vector<ScoreFile> &systems, const FusionOptions &options) {
  FusionData d = fusion_data(systems);
  const Eigen::Index dim = d.features.cols();
  Vector theta = Vector::Zero(dim);
  double current = objective(d, theta);
  for (int it = 0; it < options.max_iterations; ++it) {
    Vector act = d.features * theta;
    Vector resid(act.size()), curv(act.size());
    for (Eigen::Index i = 0; i < act.size(); ++i) {
      double p = sigmoid(act(i));
      resid(i) = d.weight(i) * (p - d.target(i));
      curv(i) = d.weight(i) * p * (1.0 - p);
    }
    Vector grad = d.features.transpose() * resid;
    if (grad.lpNorm<Eigen::Infinity>() < 1e-14) break;
    Matrix hess = d.features.transpose() * curv.asDiagonal() * d.features;
    hess.diagonal().array() += 1e-12 * (1.0 + hess.diagonal().maxCoeff());
    Vector step = -hess.ldlt().solve(grad);
    if (!step.allFinite() || step.dot(grad) >= 0.0) step = -grad;

    // Backtracking line search on the objective.
    double t = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      Vector trial = theta + t * step;
      double value = objective(d, trial);
      if (value <= current + 1e-4 * t * step.dot(grad)) {
        improved = value < current;
        theta = trial;
        current = value;
        break;
      }
    }
    if (!improved) break;
  }
  return from_theta(theta);
}

ScoreFile fuse_apply(const FusionWeights &weights, const std::vector<ScoreFile> &systems) {
  if (systems.size() != weights.weights.size())
    throw ValidationError("fuse_apply: " + std::to_string(systems.size()) + " systems but " +
                          std::to_string(weights.weights.size()) + " weights");
  if (systems.empty()) throw ValidationError("fuse_apply: no systems");
  for (std::size_t k = 1; k < systems.size(); ++k) check_same_trials(systems[0], systems[k]);
  ScoreFile out;
  out.scorer = "fusion";
  std::string hashes;
  for (const auto &s : systems) hashes += s.model_hash + ";";
  out.model_hash = io::content_hash(hashes + format_fusion_weights(weights));
  out.entries = systems[0].entries;
  for (std::size_t i = 0; i < out.entries.size(); ++i) {
    double score = weights.offset;
    for (std::size_t k = 0; k < systems.size(); ++k) score += weights.weights[k] * systems[k].entries[i].score;
    out.entries[i].score = score;
  }
  return out;
}

std::string format_fusion_weights(const FusionWeights &weights) {
  std::string out = "offset " + text::format_double(weights.offset) + "\n";
  for (double w : weights.weights) out += "weight " + text::format_double(w) + "\n";
  return out;
}

FusionWeights parse_fusion_weights(const std::string &content) {
  FusionWeights w;
  bool has_offset = false;
  for (auto line : text::lines(content)) {
    line = text::trim(line);
    if (line.empty() || line.front() == '#') continue;
    auto space = line.find(' ');
    if (space == std::string_view::npos) throw ValidationError("fusion weights: malformed line");
    auto key = line.substr(0, space);
    auto value = text::parse_double(line.substr(space + 1));
    if (!value) throw ValidationError("fusion weights: bad number");
    if (key == "offset") {
      w.offset = *value;
      has_offset = true;
    } else if (key == "weight") {
      w.weights.push_back(*value);
    } else {
      throw ValidationError("fusion weights: unknown key '" + std::string(key) + "'");
    }
  }
  if (!has_offset || w.weights.empty()) throw ValidationError("fusion weights: incomplete file");
  return w;
}

void save_fusion_weights(const FusionWeights &weights, const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path);
  os << format_fusion_weights(weights);
}

FusionWeights load_fusion_weights(const std::string &path) {
  return parse_fusion_weights(io::read_file(path));
}

}  // namespace grbm
