// grbmspk/rng.h

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

#ifndef GRBMSPK_RNG_H_
#define GRBMSPK_RNG_H_

#include <cstdint>

namespace grbm {

/// Counter-based 64-bit generator. The n-th output is a pure function of
/// (key, n), so independent streams are derived by hashing a task index into
/// the key rather than by advancing a shared state.
///
/// Distributions are implemented here instead of using <random> so that the
/// draws are bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1).
  double uniform();

  /// Standard normal (Box-Muller).
  double normal();

  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Independent stream for task `index`; does not consume from *this.
  Rng derive(std::uint64_t index) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace grbm

#endif  // GRBMSPK_RNG_H_
