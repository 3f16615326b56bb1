// grbmspk/trials.cc

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

#include "grbmspk/trials.h"

#include <cmath>
#include <fstream>

#include "grbmspk/binary_io.h"
#include "grbmspk/common.h"
#include "grbmspk/text_format.h"

namespace grbm {

const char *label_name(TrialLabel label) {
  return label == TrialLabel::kTarget ? "target" : "nontarget";
}

bool ScoreFile::fully_labeled() const {
  for (const auto &e : entries)
    if (!e.label) return false;
  return !entries.empty();
}

std::string format_score_csv(const ScoreFile &file) {
  bool any_label = false;
  for (const auto &e : file.entries) any_label = any_label || e.label.has_value();
  std::string out;
  out += "# scorer=" + file.scorer + "\n";
  out += "# model_hash=" + file.model_hash + "\n";
  for (const auto &[k, v] : file.settings) out += "# " + k + "=" + v + "\n";
  out += any_label ? "model_speaker_id,test_vector_id,score,label\n"
                   : "model_speaker_id,test_vector_id,score\n";
  for (const auto &e : file.entries) {
    if (!std::isfinite(e.score))
      throw NumericError("non-finite score for trial " + e.model_speaker_id + "/" + e.test_vector_id);
    out += e.model_speaker_id + "," + e.test_vector_id + "," + text::format_double(e.score);
    if (any_label) out += std::string(",") + (e.label ? label_name(*e.label) : "");
    out += '\n';
  }
  return out;
}

ScoreFile parse_score_csv(const std::string &content, const std::string &source) {
  ScoreFile file;
  bool seen_header = false;
  std::size_t line_no = 0;
  for (auto line : text::lines(content)) {
    ++line_no;
    auto trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    std::string where = source + ":" + std::to_string(line_no);
    if (trimmed.front() == '#') {
      auto kv = text::trim(trimmed.substr(1));
      auto eq = kv.find('=');
      if (eq == std::string_view::npos) continue;
      std::string key(text::trim(kv.substr(0, eq))), value(text::trim(kv.substr(eq + 1)));
      if (key == "scorer")
        file.scorer = value;
      else if (key == "model_hash")
        file.model_hash = value;
      else
        file.settings.emplace_back(key, value);
      continue;
    }
    if (!seen_header) {
      if (!trimmed.starts_with("model_speaker_id,test_vector_id,score"))
        throw ValidationError(where + ": expected score file header");
      seen_header = true;
      continue;
    }
    auto fields = text::split(trimmed, ',');
    if (fields.size() != 3 && fields.size() != 4)
      throw ValidationError(where + ": expected 3 or 4 fields");
    ScoreEntry e;
    e.model_speaker_id = std::string(text::trim(fields[0]));
    e.test_vector_id = std::string(text::trim(fields[1]));
    auto score = text::parse_double(fields[2]);
    if (!score || !std::isfinite(*score)) throw ValidationError(where + ": bad score");
    e.score = *score;
    if (fields.size() == 4) {
      auto lab = text::trim(fields[3]);
      if (lab == "target")
        e.label = TrialLabel::kTarget;
      else if (lab == "nontarget")
        e.label = TrialLabel::kNontarget;
      else if (!lab.empty())
        throw ValidationError(where + ": label must be 'target' or 'nontarget'");
    }
    file.entries.push_back(std::move(e));
  }
  if (!seen_header) throw ValidationError(source + ": missing score file header");
  return file;
}

void save_scores(const ScoreFile &file, const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path);
  os << format_score_csv(file);
  if (!os) throw Error("write failed: " + path);
}

ScoreFile load_scores(const std::string &path) { return parse_score_csv(io::read_file(path), path); }

void check_same_trials(const ScoreFile &a, const ScoreFile &b) {
  if (a.entries.size() != b.entries.size())
    throw ValidationError("score files cover different trial counts (" +
                          std::to_string(a.entries.size()) + " vs " +
                          std::to_string(b.entries.size()) + ")");
  for (std::size_t i = 0; i < a.entries.size(); ++i)
    if (a.entries[i].model_speaker_id != b.entries[i].model_speaker_id ||
        a.entries[i].test_vector_id != b.entries[i].test_vector_id)
      throw ValidationError("score files disagree at trial " + std::to_string(i) + " (" +
                            a.entries[i].model_speaker_id + "/" + a.entries[i].test_vector_id +
                            " vs " + b.entries[i].model_speaker_id + "/" +
                            b.entries[i].test_vector_id + ")");
}

}  // namespace grbm
