// Copyright 2026 The ppgpr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <random>
#include <vector>

#include "ppgpr/sharing.hpp"

namespace ppgpr {
namespace {

TEST(Shr, ThreeElementWorkedExample) {
  FixedPointCodec c(5, 3);
  const double x[] = {0.625, 0.375, 0.375};
  const Word r[] = {6, 9, 6};
  const Word want[] = {31, 26, 29};
  for (int i = 0; i < 3; ++i) {
    auto [s0, s1] = shr_element(c.params(), c.encode(x[i]), r[i]);
    EXPECT_EQ(s0.value, r[i]);
    EXPECT_EQ(s1.value, want[i]);
    EXPECT_EQ(s1.party, 1);
  }
}

TEST(Shr, ZeroWithFixedMask) {
  RingParams p(5, 3);
  auto [s0, s1] = shr_element(p, 0, 5);
  EXPECT_EQ(s0.value, Word{5});
  EXPECT_EQ(s1.value, Word{27});
}

TEST(Rec, Examples) {
  FixedPointCodec c(5, 3);
  const Word v = rec(c.params(), {0, 6}, {1, 31});
  EXPECT_EQ(v, Word{5});
  EXPECT_DOUBLE_EQ(c.decode(v), 0.625);
  EXPECT_EQ(rec(c.params(), {0, 0}, {1, 0}), Word{0});
}

TEST(Rec, RejectsTwoSharesOfOneParty) {
  RingParams p(5, 3);
  EXPECT_THROW(rec(p, {0, 1}, {0, 2}), ProtocolError);
  SharedMatrix a(1, 1, 1), b(1, 1, 1);
  EXPECT_THROW(rec_matrix(p, a, b), ProtocolError);
}

TEST(Shr, GridRoundtripIndependentOfMask) {
  FixedPointCodec c(10, 3);
  Prg rng(5);
  for (int k = -512; k < 512; ++k) {
    const double x = k / 8.0;
    for (int t = 0; t < 4; ++t) {
      auto [s0, s1] = shr(c, x, rng);
      ASSERT_EQ(rec(c.params(), s0, s1), c.encode(x));
    }
  }
}

TEST(Shr, RoundtripOnManyRandomValues) {
  FixedPointCodec c(128, 26);
  Prg rng(9);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-1e9, 1e9);
  for (int i = 0; i < 100000; ++i) {
    const double x = u(gen);
    auto [s0, s1] = shr(c, x, rng);
    ASSERT_EQ(rec(c.params(), s0, s1), c.encode(x));
  }
}

TEST(Shr, FirstShareIsUniformOnEightBitRing) {
  FixedPointCodec c(8, 2);
  Prg rng(123);
  std::vector<double> counts(256, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    auto [s0, s1] = shr(c, 1.25, rng);
    counts[static_cast<std::size_t>(s0.value)] += 1;
  }
  double chi2 = 0;
  const double expected = draws / 256.0;
  for (double k : counts) chi2 += (k - expected) * (k - expected) / expected;
  boost::math::chi_squared dist(255);
  const double p = 1.0 - boost::math::cdf(dist, chi2);
  EXPECT_GT(p, 0.01) << "chi2=" << chi2;
}

TEST(Local, AddAndPublicOps) {
  FixedPointCodec c(64, 26);
  const auto& p = c.params();
  Prg rng(2);
  auto [a0, a1] = shr(c, 3.0, rng);
  auto [b0, b1] = shr(c, 4.0, rng);
  EXPECT_DOUBLE_EQ(c.decode(rec(p, local_add(p, a0, b0), local_add(p, a1, b1))), 7.0);

  const Share c0 = local_add_public(p, a0, c.encode(2.0));
  const Share c1 = local_add_public(p, a1, c.encode(2.0));
  EXPECT_NE(c0.value, a0.value);
  EXPECT_EQ(c1.value, a1.value);
  EXPECT_DOUBLE_EQ(c.decode(rec(p, c0, c1)), 5.0);

  const Word one = c.encode(1.0);
  const Share t0 = local_truncate(p, local_scale_public(p, a0, one), 26);
  const Share t1 = local_truncate(p, local_scale_public(p, a1, one), 26);
  EXPECT_LE(std::abs(c.decode(rec(p, t0, t1)) - 3.0), c.quantum());
}

TEST(Local, LinearityIsExactBeforeTruncation) {
  FixedPointCodec c(32, 8);
  const auto& p = c.params();
  Prg rng(77);
  for (int i = 0; i < 1000; ++i) {
    const Word x = rng.next_element(p), y = rng.next_element(p), k = rng.next_element(p);
    auto [x0, x1] = shr_ring(p, x, rng);
    auto [y0, y1] = shr_ring(p, y, rng);
    ASSERT_EQ(rec(p, local_add(p, x0, y0), local_add(p, x1, y1)), ring_add(p, x, y));
    ASSERT_EQ(rec(p, local_scale_public(p, x0, k), local_scale_public(p, x1, k)), ring_mul(p, x, k));
  }
}

TEST(Local, ShareTruncationOffByAtMostOne) {
  FixedPointCodec c(128, 26);
  const auto& p = c.params();
  Prg rng(4);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 20000; ++i) {
    const double x = u(gen);
    auto [s0, s1] = shr(c, x, rng);
    const Word t = rec(p, local_truncate(p, s0, 10), local_truncate(p, s1, 10));
    const SignedWord want = to_signed(p, c.encode(x)) >> 10;
    const SignedWord got = to_signed(p, t);
    ASSERT_LE(got - want, 1);
    ASSERT_GE(got - want, -1);
  }
}

TEST(Matrix, ShareOpsReconstruct) {
  FixedPointCodec c(128, 20);
  const auto& p = c.params();
  Prg rng(8);
  std::vector<double> a = {1, 2, 3, 4, 5, 6}, b = {-1, 0.5, 2, 0, 1, -3};
  auto [a0, a1] = shr_matrix(c, 2, 3, a, rng);
  auto [b0, b1] = shr_matrix(c, 2, 3, b, rng);
  auto s = reveal(c, add(p, a0, b0), add(p, a1, b1));
  for (int i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(s[i], a[i] + b[i]);
  auto d = reveal(c, sub(p, a0, b0), sub(p, a1, b1));
  for (int i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(d[i], a[i] - b[i]);
  auto t = reveal(c, transpose(a0), transpose(a1));
  EXPECT_DOUBLE_EQ(t[1], 4.0);
  auto rs = reveal(c, row_sums(p, a0), row_sums(p, a1));
  EXPECT_DOUBLE_EQ(rs[0], 6.0);
  EXPECT_DOUBLE_EQ(rs[1], 15.0);
  auto sc = reveal(c, scale_public(c, a0, 0.5), scale_public(c, a1, 0.5));
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(sc[i], a[i] / 2, c.quantum());
  EXPECT_THROW(add(p, a0, transpose(b0)), std::invalid_argument);
}

TEST(Serialization, MatrixRoundtripAcrossWidths) {
  for (int bits : {8, 64, 65, 128}) {
    RingParams p(bits, 0);
    Prg rng(bits);
    SharedMatrix m(1, 3, 4);
    for (auto& v : m.values) v = rng.next_element(p);
    std::vector<std::uint64_t> words;
    put_matrix(p, m, words);
    EXPECT_EQ(words.size(), 2 + 12 * static_cast<std::size_t>(p.words_per_element()));
    std::size_t off = 0;
    SharedMatrix back = get_matrix(p, 1, words, off);
    EXPECT_EQ(off, words.size());
    EXPECT_EQ(back.rows, 3u);
    EXPECT_EQ(back.values, m.values);
  }
}

}  // namespace
}  // namespace ppgpr
