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

// Interactive protocols on shares: Beaver products, distances, reciprocal,
// square root and the masked exponentiation.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ppgpr/errors.hpp"
#include "ppgpr/offline.hpp"
#include "ppgpr/params.hpp"
#include "ppgpr/party.hpp"
#include "ppgpr/ring.hpp"
#include "ppgpr/sharing.hpp"

namespace ppgpr {

// Fractional bits used inside the reciprocal and square-root iterations.
// Wide rings carry extra precision there; the result is rescaled to l_f.
inline int work_frac_bits(const RingParams& r) {
  if (r.bits <= 64) return r.frac_bits;
  return std::max(r.frac_bits, std::min(44, (r.bits - kTruncationHeadroomBits) / 2));
}

namespace detail {

// C = A (m x n) * B (n x k) over the ring.
inline std::vector<Word> ring_matmul(const RingParams& p, const std::vector<Word>& a,
                                     const std::vector<Word>& b, std::size_t m, std::size_t n,
                                     std::size_t k) {
  std::vector<Word> c(m * k, 0);
  for (std::size_t i = 0; i < m; ++i) {
    Word* row = c.data() + i * k;
    for (std::size_t t = 0; t < n; ++t) {
      const Word x = a[i * n + t];
      if (x == 0) continue;
      const Word* brow = b.data() + t * k;
      for (std::size_t j = 0; j < k; ++j) row[j] += x * brow[j];
    }
  }
  for (auto& v : c) v = p.wrap(v);
  return c;
}

}  // namespace detail

// Collects independent products and evaluates all of them in one exchange.
class MulRound {
 public:
  explicit MulRound(Party& p) : p_(p) {}

  // Elementwise product; the raw product is truncated by `shift` bits
  // (default l_f).
  std::size_t hadamard(SharedMatrix x, SharedMatrix y, int shift = -1) {
    require_same_shape(x, y, "hadamard");
    jobs_.push_back({false, std::move(x), std::move(y), resolve(shift), std::nullopt, {}});
    return jobs_.size() - 1;
  }

  std::size_t matmul(SharedMatrix u, SharedMatrix v, int shift = -1,
                     std::optional<MatrixTriple> triple = std::nullopt) {
    if (u.cols != v.rows || u.rows == 0 || u.cols == 0 || v.cols == 0) {
      throw std::invalid_argument("matmul: dimension mismatch " + std::to_string(u.rows) + "x" +
                                  std::to_string(u.cols) + " * " + std::to_string(v.rows) + "x" +
                                  std::to_string(v.cols));
    }
    jobs_.push_back({true, std::move(u), std::move(v), resolve(shift), std::move(triple), {}});
    return jobs_.size() - 1;
  }

  // Uses caller-provided scalar triples for the elementwise jobs.
  void use_triples(TripleBatch t) { triples_ = std::move(t); }

  void run() {
    const RingParams& R = p_.ring();
    const int j = p_.id();

    std::size_t total_h = 0;
    for (const auto& job : jobs_)
      if (!job.is_matmul) total_h += job.x.size();

    TripleBatch tb;
    if (total_h > 0) {
      tb = triples_ ? std::move(*triples_) : p_.offline().beaver(total_h);
      if (tb.size() != total_h) throw ProtocolError("triple batch has the wrong size");
      p_.consume(MaterialKind::kBeaver, tb.seq);
    }
    for (auto& job : jobs_) {
      if (!job.is_matmul) continue;
      if (!job.mt) job.mt = p_.offline().matrix_triple(job.x.rows, job.x.cols, job.y.cols);
      const auto& t = *job.mt;
      if (t.A.rows != job.x.rows || t.A.cols != job.x.cols || t.B.cols != job.y.cols) {
        throw ProtocolError("matrix triple has the wrong shape");
      }
      p_.consume(MaterialKind::kMatrixTriple, t.seq);
    }

    // Masked operands, job by job: first d = x - a, then e = y - b.
    std::vector<Word> mine;
    std::size_t off = 0;
    for (const auto& job : jobs_) {
      if (job.is_matmul) {
        const auto& t = *job.mt;
        for (std::size_t i = 0; i < job.x.size(); ++i)
          mine.push_back(ring_sub(R, job.x.values[i], t.A.values[i]));
        for (std::size_t i = 0; i < job.y.size(); ++i)
          mine.push_back(ring_sub(R, job.y.values[i], t.B.values[i]));
      } else {
        const std::size_t n = job.x.size();
        for (std::size_t i = 0; i < n; ++i) mine.push_back(ring_sub(R, job.x.values[i], tb.a[off + i]));
        for (std::size_t i = 0; i < n; ++i) mine.push_back(ring_sub(R, job.y.values[i], tb.b[off + i]));
        off += n;
      }
    }

    const std::vector<Word> theirs = p_.exchange(mine);
    std::vector<Word> opened(mine.size());
    for (std::size_t i = 0; i < mine.size(); ++i) opened[i] = ring_add(R, mine[i], theirs[i]);

    // [xy]_j = -j d e + [x]_j e + d [y]_j + [c]_j
    std::size_t pos = 0;
    off = 0;
    for (auto& job : jobs_) {
      if (job.is_matmul) {
        const auto& t = *job.mt;
        const std::size_t m = job.x.rows, n = job.x.cols, k = job.y.cols;
        std::vector<Word> D(opened.begin() + pos, opened.begin() + pos + m * n);
        pos += m * n;
        std::vector<Word> E(opened.begin() + pos, opened.begin() + pos + n * k);
        pos += n * k;
        auto xe = detail::ring_matmul(R, job.x.values, E, m, n, k);
        auto dy = detail::ring_matmul(R, D, job.y.values, m, n, k);
        std::vector<Word> de;
        if (j == 1) de = detail::ring_matmul(R, D, E, m, n, k);
        SharedMatrix z(j, m, k);
        for (std::size_t i = 0; i < m * k; ++i) {
          Word v = xe[i] + dy[i] + t.C.values[i];
          if (j == 1) v -= de[i];
          z.values[i] = truncate_share(R, j, R.wrap(v), job.shift);
        }
        job.out = std::move(z);
      } else {
        const std::size_t n = job.x.size();
        const Word* d = opened.data() + pos;
        const Word* e = opened.data() + pos + n;
        pos += 2 * n;
        SharedMatrix z(j, job.x.rows, job.x.cols);
        for (std::size_t i = 0; i < n; ++i) {
          Word v = job.x.values[i] * e[i] + d[i] * job.y.values[i] + tb.c[off + i];
          if (j == 1) v -= d[i] * e[i];
          z.values[i] = truncate_share(R, j, R.wrap(v), job.shift);
        }
        off += n;
        job.out = std::move(z);
      }
    }
    done_ = true;
  }

  SharedMatrix& result(std::size_t handle) {
    if (!done_) throw std::logic_error("MulRound::result before run");
    return jobs_.at(handle).out;
  }

 private:
  struct Job {
    bool is_matmul;
    SharedMatrix x, y;
    int shift;
    std::optional<MatrixTriple> mt;
    SharedMatrix out;
  };

  int resolve(int shift) const { return shift < 0 ? p_.ring().frac_bits : shift; }

  Party& p_;
  std::vector<Job> jobs_;
  std::optional<TripleBatch> triples_;
  bool done_ = false;
};

// ---- products --------------------------------------------------------------

inline SharedMatrix ss_mul(Party& P, const SharedMatrix& x, const SharedMatrix& y, int shift = -1) {
  auto sc = P.scope("ss_mul");
  MulRound r(P);
  auto h = r.hadamard(x, y, shift);
  r.run();
  return std::move(r.result(h));
}

inline SharedMatrix ss_mul(Party& P, const SharedMatrix& x, const SharedMatrix& y,
                           TripleBatch triple, int shift = -1) {
  auto sc = P.scope("ss_mul");
  MulRound r(P);
  r.use_triples(std::move(triple));
  auto h = r.hadamard(x, y, shift);
  r.run();
  return std::move(r.result(h));
}

inline Share ss_mul(Party& P, Share x, Share y) {
  SharedMatrix a(P.id(), 1, 1, {x.value}), b(P.id(), 1, 1, {y.value});
  return {P.id(), ss_mul(P, a, b).values[0]};
}

inline SharedMatrix ss_matmul(Party& P, const SharedMatrix& u, const SharedMatrix& v,
                              int shift = -1) {
  auto sc = P.scope("ss_matmul");
  MulRound r(P);
  auto h = r.matmul(u, v, shift);
  r.run();
  return std::move(r.result(h));
}

inline SharedMatrix ss_matmul(Party& P, const SharedMatrix& u, const SharedMatrix& v,
                              MatrixTriple triple, int shift = -1) {
  auto sc = P.scope("ss_matmul");
  MulRound r(P);
  auto h = r.matmul(u, v, shift, std::move(triple));
  r.run();
  return std::move(r.result(h));
}

// ---- local helpers ---------------------------------------------------------

// Public constant `c` (encoded at `frac` bits) in every entry.
inline SharedMatrix public_constant(const Party& P, std::size_t rows, std::size_t cols,
                                    long double c, int frac) {
  SharedMatrix out(P.id(), rows, cols);
  if (P.id() == 0) {
    const Word e = P.codec().encode_at(c, frac);
    std::fill(out.values.begin(), out.values.end(), e);
  }
  return out;
}

inline SharedMatrix public_identity(const Party& P, std::size_t n) {
  SharedMatrix out(P.id(), n, n);
  if (P.id() == 0) {
    const Word one = P.codec().encode(1.0L);
    for (std::size_t i = 0; i < n; ++i) out(i, i) = one;
  }
  return out;
}

// Multiply by a public real encoded at `frac` bits, then rescale by `frac`.
inline SharedMatrix scale_public_at(const Party& P, SharedMatrix a, long double c, int frac) {
  const auto& R = P.ring();
  const Word ce = P.codec().encode_at(c, frac);
  for (auto& v : a.values) v = truncate_share(R, a.party, ring_mul(R, v, ce), frac);
  return a;
}

inline SharedMatrix upscale(const RingParams& R, SharedMatrix a, int bits) {
  return bits == 0 ? a : scale_int(R, std::move(a), Word{1} << bits);
}

// Each row i of the result repeats entry i of the column vector `v`.
inline SharedMatrix broadcast_rows(const SharedMatrix& v, std::size_t cols) {
  SharedMatrix out(v.party, v.size(), cols);
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) out(i, j) = v.values[i];
  return out;
}

// Each row of the result repeats the row vector `v`.
inline SharedMatrix broadcast_cols(const SharedMatrix& v, std::size_t rows) {
  SharedMatrix out(v.party, rows, v.size());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < v.size(); ++j) out(i, j) = v.values[j];
  return out;
}

inline SharedMatrix reshape(SharedMatrix a, std::size_t rows, std::size_t cols) {
  if (rows * cols != a.size()) throw std::invalid_argument("reshape: size mismatch");
  a.rows = rows;
  a.cols = cols;
  return a;
}

// ---- distance --------------------------------------------------------------

// Squared Euclidean distances between the rows of X (n x d) and Y (m x d):
// |x|^2 + |y|^2 - 2 x.y, one round. With `same` set, Y is X and the
// diagonal is set to zero.
inline SharedMatrix ss_dist(Party& P, const SharedMatrix& X, const SharedMatrix& Y,
                            bool same = false) {
  if (X.cols != Y.cols) {
    throw std::invalid_argument("ss_dist: feature dimensions differ (" + std::to_string(X.cols) +
                                " vs " + std::to_string(Y.cols) + ")");
  }
  auto sc = P.scope("ss_dist");
  const auto& R = P.ring();
  MulRound r(P);
  auto hx = r.hadamard(X, X);
  std::optional<std::size_t> hy;
  if (!same) hy = r.hadamard(Y, Y);
  auto hg = r.matmul(X, transpose(Y));
  r.run();
  const SharedMatrix nx = row_sums(R, r.result(hx));
  const SharedMatrix ny = same ? nx : row_sums(R, r.result(*hy));
  const SharedMatrix& G = r.result(hg);
  SharedMatrix D(P.id(), X.rows, Y.rows);
  for (std::size_t i = 0; i < X.rows; ++i)
    for (std::size_t k = 0; k < Y.rows; ++k)
      D(i, k) = R.wrap(nx.values[i] + ny.values[k] - 2 * G(i, k));
  if (same)
    for (std::size_t i = 0; i < X.rows; ++i) D(i, i) = 0;
  return D;
}

// ---- reciprocal and division -----------------------------------------------

// Affine start y0 = alpha - beta v minimizing max |1 - v y0| over [lo, hi].
inline std::pair<long double, long double> reciprocal_start(const DivisionConfig& c) {
  const long double a = c.domain_lo, b = c.domain_hi;
  const long double beta = 8.0L / ((a + b) * (a + b) + 4.0L * a * b);
  return {beta * (a + b), beta};
}

// Worst-case |1 - v y0| of the affine start over the domain.
inline long double reciprocal_start_error(const DivisionConfig& c) {
  auto [alpha, beta] = reciprocal_start(c);
  const long double a = c.domain_lo;
  return 1.0L - a * (alpha - beta * a);
}

// Shares of 1/v at work_frac_bits() fractional bits. The iteration is
// Newton's y <- y (1 + e) with e = 1 - v y; the Goldschmidt form squares e
// alongside y so each step costs one round.
inline SharedMatrix ss_reciprocal_work(Party& P, const SharedMatrix& v) {
  auto sc = P.scope("ss_reciprocal");
  const auto& R = P.ring();
  const auto& cfg = P.config().division;
  const int F = work_frac_bits(R);
  const int up = F - R.frac_bits;
  const std::size_t rows = v.rows, cols = v.cols;

  const SharedMatrix V = upscale(R, v, up);
  auto [alpha, beta] = reciprocal_start(cfg);
  SharedMatrix y = negate(R, scale_public_at(P, V, beta, F));
  y = add(R, y, public_constant(P, rows, cols, alpha, F));
  const SharedMatrix one = public_constant(P, rows, cols, 1.0L, F);
  const SharedMatrix two = public_constant(P, rows, cols, 2.0L, F);

  SharedMatrix e;
  {
    MulRound r(P);
    auto h = r.hadamard(V, y, F);
    r.run();
    e = sub(R, one, r.result(h));
  }
  for (int i = 0; i < cfg.goldschmidt_steps; ++i) {
    const bool last = i + 1 == cfg.goldschmidt_steps;
    MulRound r(P);
    auto hy = r.hadamard(y, add(R, one, e), F);
    std::optional<std::size_t> he;
    if (!last) he = r.hadamard(e, e, F);
    r.run();
    y = std::move(r.result(hy));
    if (he) e = std::move(r.result(*he));
  }
  for (int i = 0; i < cfg.newton_steps; ++i) {
    SharedMatrix t = ss_mul(P, V, y, F);
    y = ss_mul(P, y, sub(R, two, t), F);
  }
  return y;
}

inline SharedMatrix ss_reciprocal(Party& P, const SharedMatrix& v) {
  const auto& R = P.ring();
  return truncate_shares(R, ss_reciprocal_work(P, v), work_frac_bits(R) - R.frac_bits);
}

// Elementwise u / v.
inline SharedMatrix ss_div(Party& P, const SharedMatrix& u, const SharedMatrix& v) {
  require_same_shape(u, v, "ss_div");
  auto sc = P.scope("ss_div");
  SharedMatrix inv = ss_reciprocal_work(P, v);
  return ss_mul(P, u, inv, work_frac_bits(P.ring()));
}

// Every entry of u divided by the single shared value v (1 x 1).
inline SharedMatrix ss_div_scalar(Party& P, const SharedMatrix& u, const SharedMatrix& v) {
  if (v.size() != 1) throw std::invalid_argument("ss_div_scalar: divisor must be 1x1");
  auto sc = P.scope("ss_div");
  SharedMatrix inv = ss_reciprocal_work(P, v);
  SharedMatrix b(P.id(), u.rows, u.cols);
  std::fill(b.values.begin(), b.values.end(), inv.values[0]);
  return ss_mul(P, u, b, work_frac_bits(P.ring()));
}

// ---- square root -----------------------------------------------------------

// sqrt(x) = x / sqrt(x), with 1/sqrt(x) from Newton's z <- z (3 - x z^2) / 2
// started at the public z0 = 1/sqrt(domain_hi).
inline SharedMatrix ss_sqrt(Party& P, const SharedMatrix& x) {
  auto sc = P.scope("ss_sqrt");
  const auto& R = P.ring();
  const auto& cfg = P.config().sqrt;
  const int F = work_frac_bits(R);
  const int up = F - R.frac_bits;

  const SharedMatrix X = upscale(R, x, up);
  SharedMatrix z =
      public_constant(P, x.rows, x.cols, 1.0L / std::sqrt(static_cast<long double>(cfg.domain_hi)), F);
  for (int i = 0; i < cfg.iterations; ++i) {
    MulRound r1(P);
    auto hxz = r1.hadamard(X, z, F);
    auto hzz = r1.hadamard(z, z, F);
    r1.run();
    SharedMatrix xz3 = ss_mul(P, r1.result(hxz), r1.result(hzz), F);
    z = sub(R, add(R, z, truncate_shares(R, z, 1)), truncate_shares(R, xz3, 1));
  }
  SharedMatrix s = ss_mul(P, X, z, F);
  return truncate_shares(R, std::move(s), up);
}

// ---- exponentiation --------------------------------------------------------

// Masked exponentiation of inputs u in [u_min, 0]. One round: both servers
// open d = u + r, then scale their share of e^{-r} by the public e^{d}.
// The result has mask_bits + public_bits fractional bits.
inline SharedMatrix pp_exp_raw(Party& P, const SharedMatrix& u,
                               std::optional<ExpRangePolicy> policy = std::nullopt,
                               std::optional<ExpMaskBatch> masks = std::nullopt) {
  auto sc = P.scope("pp_exp");
  const auto& R = P.ring();
  const auto& ep = P.config().exp;
  const auto pol = policy.value_or(ep.policy);
  const auto [g, h] = ep.resolve(R);
  const int f = R.frac_bits;
  const std::size_t n = u.size();

  ExpMaskBatch m = masks ? std::move(*masks) : P.offline().exp_mask(n);
  if (m.size() != n) throw ProtocolError("exp mask batch has the wrong size");
  P.consume(MaterialKind::kExpMask, m.seq);

  std::vector<Word> mine(n);
  for (std::size_t i = 0; i < n; ++i) mine[i] = ring_add(R, u.values[i], m.r[i]);
  const std::vector<Word> theirs = P.exchange(mine);

  const long double scale_f = std::ldexp(1.0L, f);
  const SignedWord r_half =
      static_cast<SignedWord>(std::floor(static_cast<long double>(ep.r_max) * scale_f));
  const SignedWord lo = static_cast<SignedWord>(std::ceil(ep.u_min * scale_f)) - r_half;
  const SignedWord hi = r_half;  // exclusive

  SharedMatrix out(P.id(), u.rows, u.cols);
  for (std::size_t i = 0; i < n; ++i) {
    SignedWord d = to_signed(R, ring_add(R, mine[i], theirs[i]));
    if (d < lo || d >= hi) {
      if (pol == ExpRangePolicy::kStrict) {
        throw RangeError("pp_exp: input outside [u_min, 0] (opened exponent " +
                         std::to_string(static_cast<double>(d) / static_cast<double>(scale_f)) +
                         ")");
      }
      // Below the window e^d only shrinks, so the absolute error of C keeps
      // its in-window bound. Above it C would overflow.
      d = std::min(d, hi - 1);
    }
    const long double c =
        std::round(std::exp(static_cast<long double>(d) / scale_f) * std::ldexp(1.0L, h));
    const Word C = static_cast<Word>(static_cast<SignedWord>(c));
    out.values[i] = ring_mul(R, C, m.emr[i]);
  }
  return out;
}

// Shares of e^u at l_f fractional bits.
inline SharedMatrix pp_exp(Party& P, const SharedMatrix& u,
                           std::optional<ExpRangePolicy> policy = std::nullopt,
                           std::optional<ExpMaskBatch> masks = std::nullopt) {
  const auto [g, h] = P.config().exp.resolve(P.ring());
  SharedMatrix raw = pp_exp_raw(P, u, policy, std::move(masks));
  return truncate_shares(P.ring(), std::move(raw), g + h - P.ring().frac_bits);
}

}  // namespace ppgpr
