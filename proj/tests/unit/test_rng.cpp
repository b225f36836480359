#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "gapsim/rng.hpp"

using gapsim::Philox4x32;
using gapsim::RandomStream;

TEST_CASE("philox known-answer vectors") {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  CHECK(Philox4x32::block(C{0, 0, 0, 0}, K{0, 0}) ==
        C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32::block(C{~0u, ~0u, ~0u, ~0u}, K{~0u, ~0u}) ==
        C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32::block(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                          K{0xa4093822u, 0x299f31d0u}) ==
        C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are reproducible and distinct") {
  RandomStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
    CHECK(x != d.next_u64());
    seen.insert(x);
  }
  CHECK(seen.size() == 100);
  CHECK(a.seed() == 42);
  CHECK(a.stream_id() == 7);
}

TEST_CASE("uniforms lie in the open unit interval with the right moments") {
  RandomStream rng(1, 0);
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sum_sq += u * u;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(sum_sq / n - mean * mean - 1.0 / 12.0) < 2e-3);
}

TEST_CASE("normals have unit variance and vanishing skew") {
  RandomStream rng(5, 3);
  const int n = 400000;
  double m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    m1 += z;
    m2 += z * z;
    m3 += z * z * z;
    m4 += z * z * z * z;
  }
  m1 /= n; m2 /= n; m3 /= n; m4 /= n;
  CHECK(std::abs(m1) < 4.0 / std::sqrt(n));
  CHECK(std::abs(m2 - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(m3) < 4.0 * std::sqrt(15.0 / n));
  CHECK(std::abs(m4 - 3.0) < 4.0 * std::sqrt(96.0 / n));
}

TEST_CASE("fill_normal matches repeated normal draws") {
  RandomStream a(9, 1), b(9, 1);
  std::vector<double> buf(11);
  a.fill_normal(buf);
  for (double x : buf) CHECK(x == b.normal());
}

TEST_CASE("substream ids separate retries from primary tasks") {
  CHECK(gapsim::substream_id(5, 0) == 5);
  CHECK(gapsim::substream_id(5, 1) != 5);
  CHECK(gapsim::substream_id(5, 1) != gapsim::substream_id(6, 1));
}
