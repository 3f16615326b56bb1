// grbmspk/synthgen.h

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

#ifndef GRBMSPK_SYNTHGEN_H_
#define GRBMSPK_SYNTHGEN_H_

#include <cstdint>
#include <string>

#include "grbmspk/grbm_core.h"
#include "grbmspk/ivector_data.h"
#include "grbmspk/plda.h"

namespace grbm {

struct SynthSettings {
  int n_speakers = 100;
  CountRange per_speaker{5, 5};
  std::uint64_t seed = 0;
  double duration_seconds = 30.0;
};

struct SynthResult {
  IVectorCorpus corpus;
  std::string manifest;  // '# key=value' text
};

/// Speaker k gets stream seed.derive(k): its vector count is drawn uniformly
/// from the range, then its data from generate_speaker. Speakers are named
/// spk00000, vectors spk00000_000.
SynthResult synth_corpus(const GrbmParams &truth, const SynthSettings &settings,
                         const GenerateOptions &options = {});

/// x = mean + V h_s + U h_c + e with the same naming and stream layout.
SynthResult synth_plda_corpus(const PldaParams &truth, const SynthSettings &settings);

/// Truth model with orthonormal directions scaled to `speaker_scale` (F) and
/// `channel_scale` (G), unit variances, and biases chosen so that every
/// hidden configuration is a priori equally likely and the data mean is zero.
/// Needs dim_s + dim_c <= p.
GrbmParams random_truth(Eigen::Index p, Eigen::Index dim_s, Eigen::Index dim_c, std::uint64_t seed,
                        double speaker_scale = 8.0, double channel_scale = 8.0);

/// Gaussian V, U with the given entry scales, zero mean, unit residual.
PldaParams random_plda_truth(Eigen::Index p, Eigen::Index q_s, Eigen::Index q_c, std::uint64_t seed,
                             double speaker_scale = 1.0, double channel_scale = 0.5);

/// Content hash of the serialised model.
std::string grbm_hash(const GrbmParams &params);
std::string plda_hash(const PldaParams &params);

}  // namespace grbm

#endif  // GRBMSPK_SYNTHGEN_H_
