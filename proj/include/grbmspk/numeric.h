// grbmspk/numeric.h

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

#ifndef GRBMSPK_NUMERIC_H_
#define GRBMSPK_NUMERIC_H_

#include <span>

#include "grbmspk/common.h"

namespace grbm {

/// log(1 + e^a), finite for every finite a.
double softplus(double a);

/// 1 / (1 + e^-a) in the form that never exponentiates a positive number.
double sigmoid(double a);

/// log(sum_i e^{v_i}); returns -inf for an empty input.
double log_sum_exp(std::span<const double> values);

/// Elementwise versions.
Vector softplus(const Vector &a);
Vector sigmoid(const Vector &a);

}  // namespace grbm

#endif  // GRBMSPK_NUMERIC_H_
