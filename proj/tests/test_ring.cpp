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

#include <cmath>
#include <random>

#include "ppgpr/ring.hpp"

namespace ppgpr {
namespace {

TEST(Encode, WorkedExampleOnFiveBitRing) {
  FixedPointCodec c(5, 3);
  EXPECT_EQ(c.encode(1.125123), Word{9});
  EXPECT_EQ(c.encode(0.0), Word{0});
  EXPECT_EQ(c.encode(-0.125), Word{31});
}

TEST(Decode, WorkedExampleOnFiveBitRing) {
  FixedPointCodec c(5, 3);
  EXPECT_DOUBLE_EQ(c.decode(11), 1.375);
  EXPECT_DOUBLE_EQ(c.decode(0), 0.0);
  EXPECT_DOUBLE_EQ(c.decode(31), -0.125);
}

TEST(Encode, RoundsHalfAwayFromZero) {
  FixedPointCodec c(16, 0);
  EXPECT_EQ(c.encode(0.5), Word{1});
  EXPECT_EQ(c.encode(-0.5), c.params().wrap(~Word{0}));
  EXPECT_EQ(c.encode(1.49), Word{1});
  EXPECT_EQ(c.encode(2.5), Word{3});
}

TEST(Encode, RejectsOutOfRange) {
  FixedPointCodec c(5, 3);  // representable range [-2, 2)
  EXPECT_NO_THROW(c.encode(-2.0));
  EXPECT_NO_THROW(c.encode(1.875));
  EXPECT_THROW(c.encode(2.0), RangeError);
  EXPECT_THROW(c.encode(-2.1), RangeError);
  EXPECT_THROW(c.encode(NAN), RangeError);
  EXPECT_THROW(c.encode(INFINITY), RangeError);
}

TEST(RingParams, Validation) {
  EXPECT_THROW(FixedPointCodec(129, 10), ConfigError);
  EXPECT_THROW(FixedPointCodec(16, 16), ConfigError);
  EXPECT_THROW(FixedPointCodec(16, -1), ConfigError);
  EXPECT_NO_THROW(FixedPointCodec(64, 26));
  EXPECT_NO_THROW(FixedPointCodec(128, 26));
}

TEST(RingOps, FiveBitExamples) {
  RingParams p(5, 3);
  EXPECT_EQ(ring_add(p, 30, 5), Word{3});
  EXPECT_EQ(ring_mul(p, 9, 9), Word{17});
  EXPECT_EQ(ring_add(p, 13, 0), Word{13});
}

TEST(RingOps, ExhaustiveAgainstIntegerOracleOnEightBits) {
  RingParams p(8, 0);
  for (unsigned a = 0; a < 256; ++a) {
    for (unsigned b = 0; b < 256; ++b) {
      ASSERT_EQ(ring_add(p, a, b), Word{(a + b) % 256});
      ASSERT_EQ(ring_sub(p, a, b), Word{(a + 256 - b) % 256});
      ASSERT_EQ(ring_mul(p, a, b), Word{(a * b) % 256});
    }
  }
}

TEST(RingOps, LawsOnRandomSamples) {
  std::mt19937_64 rng(7);
  for (int bits : {13, 64, 100, 128}) {
    RingParams p(bits, 0);
    for (int i = 0; i < 2000; ++i) {
      const Word a = p.wrap((Word{rng()} << 64) | rng()), b = p.wrap((Word{rng()} << 64) | rng()),
                 c = p.wrap((Word{rng()} << 64) | rng());
      ASSERT_EQ(ring_add(p, a, b), ring_add(p, b, a));
      ASSERT_EQ(ring_mul(p, a, b), ring_mul(p, b, a));
      ASSERT_EQ(ring_add(p, ring_add(p, a, b), c), ring_add(p, a, ring_add(p, b, c)));
      ASSERT_EQ(ring_mul(p, ring_mul(p, a, b), c), ring_mul(p, a, ring_mul(p, b, c)));
      ASSERT_EQ(ring_sub(p, ring_add(p, a, b), b), a);
      ASSERT_EQ(ring_add(p, a, ring_neg(p, a)), Word{0});
    }
  }
}

TEST(Truncate, Examples) {
  FixedPointCodec c(16, 3);
  const auto& p = c.params();
  EXPECT_EQ(truncate(p, ring_mul(p, c.encode(1.5), c.encode(2.0))), c.encode(3.0));
  EXPECT_EQ(truncate(p, 0), Word{0});
  EXPECT_EQ(truncate(p, from_signed(p, -8 * 8)), c.encode(-1.0));
}

TEST(Truncate, ProductErrorWithinOneQuantum) {
  std::mt19937_64 rng(11);
  FixedPointCodec c(64, 26);
  const auto& p = c.params();
  // The raw product must fit at scale 2^{2 l_f}: |a b| < 2^{l - 2 l_f - 1} = 2048.
  std::uniform_real_distribution<double> u(-45, 45);
  for (int i = 0; i < 20000; ++i) {
    const double a = u(rng), b = u(rng);
    const Word ea = c.encode(a), eb = c.encode(b);
    const double got = c.decode(truncate(p, ring_mul(p, ea, eb)));
    const double exact = c.decode(ea) * c.decode(eb);
    ASSERT_LE(std::abs(got - exact), c.quantum()) << a << " * " << b;
    ASSERT_LE(std::abs(got - a * b), c.quantum() + (std::abs(a) + std::abs(b)) * c.quantum());
  }
}

TEST(Codec, GridRoundtripIsExact) {
  FixedPointCodec c(12, 4);
  for (int k = -2048; k < 2048; ++k) {
    const double x = std::ldexp(static_cast<double>(k), -4);
    ASSERT_EQ(c.decode(c.encode(x)), x);
  }
}

TEST(Codec, QuantizationErrorAtMostHalfQuantum) {
  std::mt19937_64 rng(3);
  for (auto [l, lf] : {std::pair{64, 26}, std::pair{128, 26}, std::pair{24, 8}}) {
    FixedPointCodec c(l, lf);
    const double bound = std::min<double>(static_cast<double>(c.range_bound()), 1e6);
    std::uniform_real_distribution<double> u(-bound, bound);
    for (int i = 0; i < 20000; ++i) {
      const double x = u(rng);
      ASSERT_LE(std::abs(c.decode(c.encode(x)) - x), c.quantum() / 2 * (1 + 1e-9));
    }
  }
}

TEST(Codec, SignedReadingRoundtripsOnSixteenBits) {
  RingParams p(16, 0);
  for (unsigned e = 0; e < (1u << 16); ++e) {
    const SignedWord s = to_signed(p, e);
    ASSERT_GE(s, -32768);
    ASSERT_LT(s, 32768);
    ASSERT_EQ(from_signed(p, s), Word{e});
  }
}

}  // namespace
}  // namespace ppgpr
