// grbmspk/tests/test_foundation.cc

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

#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "grbmspk/binary_io.h"
#include "grbmspk/numeric.h"
#include "grbmspk/rng.h"
#include "grbmspk/text_format.h"

using namespace grbm;

TEST_CASE("rng streams are reproducible and independent") {
  Rng a(42), b(42), c(43);
  for (int k = 0; k < 100; ++k) {
    auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
  }
  Rng root(9);
  Rng d0 = root.derive(0), d0b = root.derive(0), d1 = root.derive(1);
  CHECK(d0.next_u64() == d0b.next_u64());
  CHECK(d0.next_u64() != d1.next_u64());
  CHECK(root.counter() == 0);
}

TEST_CASE("rng uniform and normal moments") {
  Rng rng(1);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int k = 0; k < n; ++k) {
    double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    su += u;
    double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(std::abs(su / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(sn / n) < 4 / std::sqrt(double(n)));
  CHECK(std::abs(sn2 / n - 1.0) < 4 * std::sqrt(2.0 / n));
  for (int k = 0; k < 1000; ++k) {
    auto v = rng.uniform_int(3, 5);
    CHECK((v >= 3 && v <= 5));
  }
}

TEST_CASE("softplus and sigmoid are finite and accurate at extremes") {
  for (double a : {-700.0, -50.0, -1.0, 0.0, 1.0, 50.0, 700.0}) {
    CHECK(std::isfinite(softplus(a)));
    CHECK(std::isfinite(sigmoid(a)));
  }
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(softplus(700.0) == 700.0);
  CHECK(softplus(-700.0) > 0.0);
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(std::abs(sigmoid(50.0) - 1.0) < 1e-15);
  CHECK(sigmoid(-50.0) == doctest::Approx(std::exp(-50.0)).epsilon(1e-12));
  CHECK(sigmoid(3.0) + sigmoid(-3.0) == doctest::Approx(1.0).epsilon(1e-15));
  std::vector<double> v{1000.0, 1000.0};
  CHECK(log_sum_exp(v) == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("double formatting round-trips") {
  Rng rng(3);
  for (int k = 0; k < 1000; ++k) {
    double v = rng.normal() * std::pow(10.0, rng.uniform_int(-30, 30));
    auto back = text::parse_double(text::format_double(v));
    REQUIRE(back);
    CHECK(*back == v);
  }
  CHECK(!text::parse_double("1.5x"));
  CHECK(!text::parse_int("12a"));
  CHECK(text::split("a,,b", ',').size() == 3);
}

TEST_CASE("binary primitives round-trip little-endian") {
  std::stringstream ss;
  io::write_magic(ss, "TEST");
  io::write_u32(ss, 0x01020304u);
  io::write_f64(ss, -1.25);
  io::write_string(ss, "hello");
  Matrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  io::write_matrix_row_major(ss, m);
  const std::string bytes = ss.str();
  CHECK(static_cast<unsigned char>(bytes[4]) == 0x04);
  io::expect_magic(ss, "TEST", "stream");
  CHECK(io::read_u32(ss) == 0x01020304u);
  CHECK(io::read_f64(ss) == -1.25);
  CHECK(io::read_string(ss) == "hello");
  Matrix back = io::read_matrix_row_major(ss, 2, 3);
  CHECK(back == m);
  CHECK_THROWS(io::read_u32(ss));
  CHECK(io::content_hash("abc") == io::content_hash("abc"));
  CHECK(io::content_hash("abc") != io::content_hash("abd"));
  CHECK(io::content_hash("").size() == 16);
}
