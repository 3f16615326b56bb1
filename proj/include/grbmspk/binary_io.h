// grbmspk/binary_io.h

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

#ifndef GRBMSPK_BINARY_IO_H_
#define GRBMSPK_BINARY_IO_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "grbmspk/common.h"

namespace grbm::io {

// Little-endian primitives shared by every binary file format.
void write_magic(std::ostream &os, std::string_view magic);
void expect_magic(std::istream &is, std::string_view magic, const std::string &what);
void write_u32(std::ostream &os, std::uint32_t v);
void write_u64(std::ostream &os, std::uint64_t v);
void write_f64(std::ostream &os, double v);
void write_string(std::ostream &os, const std::string &s);  // u32 length + bytes
void write_vector(std::ostream &os, const Vector &v);
void write_matrix_row_major(std::ostream &os, const Matrix &m);

std::uint32_t read_u32(std::istream &is);
std::uint64_t read_u64(std::istream &is);
double read_f64(std::istream &is);
std::string read_string(std::istream &is);
Vector read_vector(std::istream &is, Eigen::Index n);
Matrix read_matrix_row_major(std::istream &is, Eigen::Index rows, Eigen::Index cols);

/// Reads the first four bytes of a file, or "" if it is shorter.
std::string peek_magic(const std::string &path);

std::string read_file(const std::string &path);

/// FNV-1a 64-bit over raw bytes, as 16 hex digits.
std::string content_hash(std::string_view bytes);
std::string file_hash(const std::string &path);

}  // namespace grbm::io

#endif  // GRBMSPK_BINARY_IO_H_
