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

#include <cmath>
#include <filesystem>
#include <set>

#include "ppgpr/offline.hpp"
#include "ppgpr/protocols.hpp"
#include "ppgpr/session.hpp"
#include "test_util.hpp"

namespace ppgpr {
namespace {

using testing::default_options;
using testing::Pair;
using testing::share;

ExpParams small_ring_exp(int lf) {
  ExpParams e;
  e.u_min = -2.0;
  e.r_max = std::floor((lf / 1.4426950408889634 - 2.0) * 4) / 4;
  return e;
}

double chi_squared_p(const std::vector<double>& counts, double expected) {
  double chi2 = 0;
  for (double k : counts) chi2 += (k - expected) * (k - expected) / expected;
  boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  return 1.0 - boost::math::cdf(dist, chi2);
}

TEST(Beaver, TriplesSatisfyProductRelation) {
  for (auto ring : {RingParams(16, 4), RingParams(64, 20), RingParams(128, 26)}) {
    ExpParams e = ring.bits == 16 ? small_ring_exp(4) : ExpParams{};
    if (ring.bits == 64) e = small_ring_exp(20);
    Dealer d(FixedPointCodec(ring), e, 3);
    auto [t0, t1] = d.gen_beaver(500, 7);
    EXPECT_EQ(t0.seq, 7u);
    EXPECT_EQ(t1.party, 1);
    for (std::size_t i = 0; i < 500; ++i) {
      const Word a = ring_add(ring, t0.a[i], t1.a[i]), b = ring_add(ring, t0.b[i], t1.b[i]);
      ASSERT_EQ(ring_add(ring, t0.c[i], t1.c[i]), ring_mul(ring, a, b));
    }
  }
}

TEST(Beaver, AValuesUniformOnSixteenBitRing) {
  RingParams ring(16, 4);
  Dealer d(FixedPointCodec(ring), small_ring_exp(4), 17);
  auto [t0, t1] = d.gen_beaver(10000);
  // 256 bins over the top byte keeps the expected count per bin near 39.
  std::vector<double> counts(256, 0);
  for (std::size_t i = 0; i < t0.size(); ++i) {
    counts[static_cast<std::size_t>(ring_add(ring, t0.a[i], t1.a[i]) >> 8)] += 1;
  }
  EXPECT_GT(chi_squared_p(counts, 10000.0 / 256), 0.01);
}

TEST(MatrixTriple, OneByOneIsScalarTriple) {
  RingParams ring(128, 26);
  Dealer d(FixedPointCodec(ring), ExpParams{}, 5);
  auto [m0, m1] = d.gen_matrix_triple(1, 1, 1);
  const Word a = ring_add(ring, m0.A.values[0], m1.A.values[0]);
  const Word b = ring_add(ring, m0.B.values[0], m1.B.values[0]);
  EXPECT_EQ(ring_add(ring, m0.C.values[0], m1.C.values[0]), ring_mul(ring, a, b));
}

TEST(MatrixTriple, TwoByTwoMatchesPlaintextProduct) {
  RingParams ring(64, 20);
  Dealer d(FixedPointCodec(ring), small_ring_exp(20), 5);
  auto [m0, m1] = d.gen_matrix_triple(2, 2, 2);
  auto A = rec_matrix(ring, m0.A, m1.A), B = rec_matrix(ring, m0.B, m1.B), C = rec_matrix(ring, m0.C, m1.C);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      const std::uint64_t want = static_cast<std::uint64_t>(A(i, 0)) * static_cast<std::uint64_t>(B(0, j)) +
                                 static_cast<std::uint64_t>(A(i, 1)) * static_cast<std::uint64_t>(B(1, j));
      EXPECT_EQ(static_cast<std::uint64_t>(C(i, j)), want);
    }
  EXPECT_THROW(d.gen_matrix_triple(2, 2, 0), std::invalid_argument);
}

TEST(ExpMask, ZeroAndOne) {
  FixedPointCodec c(128, 26);
  Dealer d(c, ExpParams{}, 9);
  const long double r[] = {0.0L, 1.0L};
  auto [m0, m1] = d.gen_exp_mask_explicit(r);
  const auto& p = c.params();
  EXPECT_EQ(rec(p, {0, m0.r[0]}, {1, m1.r[0]}), Word{0});
  EXPECT_EQ(rec(p, {0, m0.r[1]}, {1, m1.r[1]}), c.encode(1.0));
  const int g = d.mask_bits();
  EXPECT_EQ(c.decode_at(rec(p, {0, m0.emr[0]}, {1, m1.emr[0]}), g), 1.0);
  EXPECT_LE(std::abs(c.decode_at(rec(p, {0, m0.emr[1]}, {1, m1.emr[1]}), g) - std::exp(-1.0)),
            std::ldexp(1.0, -27));
}

TEST(ExpMask, AllMasksPositiveAtTwentyNineBits) {
  FixedPointCodec c(64, 29);
  ExpParams e;
  e.u_min = -4;
  e.r_max = 16;
  Dealer d(c, e, 2);
  auto [m0, m1] = d.gen_exp_mask(20000);
  for (std::size_t i = 0; i < m0.size(); ++i) {
    const SignedWord r = to_signed(c.params(), ring_add(c.params(), m0.r[i], m1.r[i]));
    ASSERT_GE(r, -(SignedWord{16} << 29));
    ASSERT_LT(r, SignedWord{16} << 29);
    ASSERT_GE(to_signed(c.params(), ring_add(c.params(), m0.emr[i], m1.emr[i])), 1);
  }
  // Extremes of the grid.
  const long double ends[] = {-16.0L, 16.0L - std::ldexp(1.0L, -29)};
  auto [x0, x1] = d.gen_exp_mask_explicit(ends);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_GE(to_signed(c.params(), ring_add(c.params(), x0.emr[i], x1.emr[i])), 1);
  }
}

TEST(ExpMask, GridValuesUniform) {
  FixedPointCodec c(24, 8);
  ExpParams e;
  e.u_min = -4;
  e.r_max = 1.5;  // 768 grid points
  Dealer d(c, e, 31);
  ASSERT_EQ(d.r_grid_half_width(), 384);
  auto [m0, m1] = d.gen_exp_mask(76800);
  std::vector<double> counts(768, 0);
  for (std::size_t i = 0; i < m0.size(); ++i) {
    const SignedWord r = to_signed(c.params(), ring_add(c.params(), m0.r[i], m1.r[i]));
    ASSERT_GE(r, -384);
    ASSERT_LT(r, 384);
    counts[static_cast<std::size_t>(r + 384)] += 1;
  }
  EXPECT_GT(chi_squared_p(counts, 100.0), 0.01);
}

TEST(ExpMask, InvalidParametersRejected) {
  ExpParams e;
  e.r_max = 30;
  EXPECT_THROW(Dealer(FixedPointCodec(64, 26), e, 1), ConfigError);
}

TEST(Sources, PoolUnderrunIsAnError) {
  RingParams ring(128, 26);
  Dealer d(FixedPointCodec(ring), ExpParams{}, 4);
  auto [p0, p1] = pregenerate(d, {MaterialRequest{MaterialKind::kBeaver, 0, {3, 0, 0}}});
  PoolSource src(ring, 0, p0);
  EXPECT_EQ(src.beaver(3).size(), 3u);
  EXPECT_THROW(src.beaver(3), OfflineUnderrun);
}

TEST(Sources, MismatchedRequestRejected) {
  RingParams ring(128, 26);
  Dealer d(FixedPointCodec(ring), ExpParams{}, 4);
  auto [p0, p1] = pregenerate(d, {MaterialRequest{MaterialKind::kBeaver, 0, {3, 0, 0}}});
  PoolSource src(ring, 0, p0);
  EXPECT_THROW(src.exp_mask(3), ProtocolError);
}

TEST(Sources, PersistedFilesReplayIdentically) {
  auto opt = default_options();
  FixedPointCodec c(opt.ring);
  const auto dir = std::filesystem::temp_directory_path() / "ppgpr_offline_test";
  std::filesystem::create_directories(dir);
  opt.persist_files = {(dir / "s0.bin").string(), (dir / "s1.bin").string()};
  Pair x = share(c, 1, 4, {-0.5, -1.0, -2.0, -3.0}), y = share(c, 1, 4, {1, 2, 3, 4}, 5);
  auto body = [&](Party& P) {
    auto e = pp_exp(P, x[P.id()]);
    return ss_mul(P, e, y[P.id()]);
  };
  auto first = run_session(opt, body);
  SessionOptions replay = default_options();
  replay.offline_files = opt.persist_files;
  replay.dealer_seed = 999;  // unused when replaying
  auto second = run_session(replay, body);
  EXPECT_EQ(first.out[0].values, second.out[0].values);
  EXPECT_EQ(first.out[1].values, second.out[1].values);

  // A replay that needs more material than was recorded underruns.
  EXPECT_THROW(run_session(replay,
                           [&](Party& P) {
                             body(P);
                             return body(P);
                           }),
               OfflineUnderrun);
  std::filesystem::remove_all(dir);
}

TEST(Session, AssistantOnlyReceivesSizedRequests) {
  auto opt = default_options();
  opt.record_transcripts = true;
  FixedPointCodec c(opt.ring);
  Pair x = share(c, 2, 2, {-0.5, -1.0, -2.0, -3.0});
  auto res = run_session(opt, [&](Party& P) {
    auto e = pp_exp(P, x[P.id()]);
    return ss_matmul(P, e, ss_mul(P, e, e));
  });
  EXPECT_EQ(res.dealer_requests, 3u);
  std::set<std::uint64_t> seqs;
  for (const auto& log : res.dealer_transcripts) {
    ASSERT_FALSE(log.empty());
    for (const auto& e : log) {
      if (e.outgoing) {
        EXPECT_EQ(e.message.tag, kOfflineResponseTag);
        continue;
      }
      // Incoming messages are requests of five public words: kind, seq, dims.
      EXPECT_EQ(e.message.tag, kOfflineRequestTag);
      ASSERT_EQ(e.message.payload.size(), 5u);
      auto rq = MaterialRequest::parse(e.message.payload);
      if (rq.kind != MaterialKind::kDone) seqs.insert(rq.seq);
    }
  }
  EXPECT_EQ(seqs.size(), 3u);
}

}  // namespace
}  // namespace ppgpr
