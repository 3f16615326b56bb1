// grbmspk/binary_io.cc

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

#include "grbmspk/binary_io.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

namespace grbm::io {

namespace {

template <typename T>
void write_le(std::ostream &os, T v) {
  std::array<char, sizeof(T)> buf;
  std::memcpy(buf.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(buf.begin(), buf.end());
  os.write(buf.data(), buf.size());
}

template <typename T>
T read_le(std::istream &is) {
  std::array<char, sizeof(T)> buf;
  if (!is.read(buf.data(), buf.size()))
    throw ValidationError("unexpected end of binary file");
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(buf.begin(), buf.end());
  T v;
  std::memcpy(&v, buf.data(), sizeof(T));
  return v;
}

}  // namespace

void write_magic(std::ostream &os, std::string_view magic) {
  os.write(magic.data(), magic.size());
}

void expect_magic(std::istream &is, std::string_view magic, const std::string &what) {
  std::string got(magic.size(), '\0');
  if (!is.read(got.data(), got.size()) || got != magic)
    throw ValidationError(what + ": bad magic, expected '" + std::string(magic) + "'");
}

void write_u32(std::ostream &os, std::uint32_t v) { write_le(os, v); }
void write_u64(std::ostream &os, std::uint64_t v) { write_le(os, v); }
void write_f64(std::ostream &os, double v) { write_le(os, v); }

void write_string(std::ostream &os, const std::string &s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), s.size());
}

void write_vector(std::ostream &os, const Vector &v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) write_f64(os, v(i));
}

void write_matrix_row_major(std::ostream &os, const Matrix &m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_f64(os, m(r, c));
}

std::uint32_t read_u32(std::istream &is) { return read_le<std::uint32_t>(is); }
std::uint64_t read_u64(std::istream &is) { return read_le<std::uint64_t>(is); }
double read_f64(std::istream &is) { return read_le<double>(is); }

std::string read_string(std::istream &is) {
  std::uint32_t n = read_u32(is);
  std::string s(n, '\0');
  if (n > 0 && !is.read(s.data(), n))
    throw ValidationError("unexpected end of binary file in string");
  return s;
}

Vector read_vector(std::istream &is, Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = read_f64(is);
  return v;
}

Matrix read_matrix_row_major(std::istream &is, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = read_f64(is);
  return m;
}

std::string peek_magic(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open " + path);
  std::string magic(4, '\0');
  if (!is.read(magic.data(), 4)) return "";
  return magic;
}

std::string read_file(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_hash(const std::string &path) { return content_hash(read_file(path)); }

}  // namespace grbm::io
