// grbmspk/common.h

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

#ifndef GRBMSPK_COMMON_H_
#define GRBMSPK_COMMON_H_

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace grbm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of two operands disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Bad input data or arguments (malformed files, violated preconditions).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A computation produced NaN/Inf or hit a singular system.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Exact enumeration refused because the hidden layer is too large.
class CapacityError : public Error {
 public:
  using Error::Error;
};

inline void check_dim(Eigen::Index got, Eigen::Index want, const char *what) {
  if (got != want)
    throw DimensionError(std::string(what) + ": dimension " +
                         std::to_string(got) + " does not match expected " +
                         std::to_string(want));
}

}  // namespace grbm

#endif  // GRBMSPK_COMMON_H_
