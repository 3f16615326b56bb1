// grbmspk/trials.h

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

#ifndef GRBMSPK_TRIALS_H_
#define GRBMSPK_TRIALS_H_

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace grbm {

enum class TrialLabel { kTarget, kNontarget };

/// Enrollment set of one model speaker compared against one test vector.
struct Trial {
  std::string model_speaker_id;
  std::vector<std::string> enrollment_ids;
  std::string test_vector_id;
  std::optional<TrialLabel> label;
};

struct ScoreEntry {
  std::string model_speaker_id;
  std::string test_vector_id;
  double score = 0.0;
  std::optional<TrialLabel> label;
};

/// Scores for a trial list, in trial order, plus provenance metadata.
///
/// CSV form: '# key=value' comment lines (scorer, model_hash, then any
/// settings), a header row, then `model_speaker_id,test_vector_id,score[,label]`.
struct ScoreFile {
  std::string scorer;
  std::string model_hash;
  std::vector<std::pair<std::string, std::string>> settings;
  std::vector<ScoreEntry> entries;

  bool fully_labeled() const;
};

std::string format_score_csv(const ScoreFile &file);
ScoreFile parse_score_csv(const std::string &text, const std::string &source = "<string>");
void save_scores(const ScoreFile &file, const std::string &path);
ScoreFile load_scores(const std::string &path);

/// Throws ValidationError unless both files list the same trials in the same order.
void check_same_trials(const ScoreFile &a, const ScoreFile &b);

const char *label_name(TrialLabel label);

}  // namespace grbm

#endif  // GRBMSPK_TRIALS_H_
