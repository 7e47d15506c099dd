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

// (2,2)-additive secret sharing over Z_{2^l} and the communication-free
// operations on shares.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ppgpr/errors.hpp"
#include "ppgpr/random.hpp"
#include "ppgpr/ring.hpp"

namespace ppgpr {

struct Share {
  int party = 0;
  Word value = 0;
};

// One party's additive share of a row-major matrix.
struct SharedMatrix {
  int party = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Word> values;

  SharedMatrix() = default;
  SharedMatrix(int p, std::size_t r, std::size_t c) : party(p), rows(r), cols(c), values(r * c) {}
  SharedMatrix(int p, std::size_t r, std::size_t c, std::vector<Word> v)
      : party(p), rows(r), cols(c), values(std::move(v)) {
    if (values.size() != rows * cols) throw std::invalid_argument("shape/value count mismatch");
  }

  std::size_t size() const { return values.size(); }
  Word& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  Word operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  Share at(std::size_t i, std::size_t j) const { return {party, (*this)(i, j)}; }
};

inline void require_same_shape(const SharedMatrix& a, const SharedMatrix& b, const char* what) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                std::to_string(a.rows) + "x" + std::to_string(a.cols) + " vs " +
                                std::to_string(b.rows) + "x" + std::to_string(b.cols));
  }
}

// Shr: share0 = r, share1 = x - r.
inline std::pair<Share, Share> shr_element(const RingParams& p, Word x, Word r) {
  return {Share{0, p.wrap(r)}, Share{1, ring_sub(p, x, r)}};
}

inline std::pair<Share, Share> shr(const FixedPointCodec& codec, long double x, Prg& rng) {
  const Word e = codec.encode(x);
  return shr_element(codec.params(), e, rng.next_element(codec.params()));
}

inline std::pair<Share, Share> shr_ring(const RingParams& p, Word e, Prg& rng) {
  return shr_element(p, p.wrap(e), rng.next_element(p));
}

inline Word rec(const RingParams& p, const Share& s0, const Share& s1) {
  if (s0.party == s1.party) {
    throw ProtocolError("rec: both shares belong to party " + std::to_string(s0.party));
  }
  return ring_add(p, s0.value, s1.value);
}

inline std::pair<SharedMatrix, SharedMatrix> shr_matrix(const FixedPointCodec& codec,
                                                        std::size_t rows, std::size_t cols,
                                                        std::span<const double> values, Prg& rng) {
  if (values.size() != rows * cols) throw std::invalid_argument("shr_matrix: size mismatch");
  SharedMatrix a(0, rows, cols), b(1, rows, cols);
  for (std::size_t k = 0; k < values.size(); ++k) {
    auto [s0, s1] = shr(codec, values[k], rng);
    a.values[k] = s0.value;
    b.values[k] = s1.value;
  }
  return {std::move(a), std::move(b)};
}

inline SharedMatrix rec_matrix(const RingParams& p, const SharedMatrix& a, const SharedMatrix& b) {
  require_same_shape(a, b, "rec");
  if (a.party == b.party) throw ProtocolError("rec: both shares belong to the same party");
  SharedMatrix out(-1, a.rows, a.cols);
  for (std::size_t k = 0; k < a.size(); ++k) out.values[k] = ring_add(p, a.values[k], b.values[k]);
  return out;
}

inline std::vector<double> decode_matrix(const FixedPointCodec& codec, const SharedMatrix& m) {
  std::vector<double> out(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) out[k] = codec.decode(m.values[k]);
  return out;
}

inline std::vector<double> reveal(const FixedPointCodec& codec, const SharedMatrix& a,
                                  const SharedMatrix& b) {
  return decode_matrix(codec, rec_matrix(codec.params(), a, b));
}

// ---- local operations ------------------------------------------------------

inline Share local_add(const RingParams& p, Share a, Share b) {
  return {a.party, ring_add(p, a.value, b.value)};
}

// Public constants enter through party 0 only.
inline Share local_add_public(const RingParams& p, Share a, Word c) {
  return {a.party, a.party == 0 ? ring_add(p, a.value, c) : a.value};
}

inline Share local_scale_public(const RingParams& p, Share a, Word c) {
  return {a.party, ring_mul(p, a.value, c)};
}

// Share-local truncation: party 0 shifts its share, party 1 shifts the
// negation of its share. The sum is within one unit of x / 2^shift unless
// the shares straddle the wrap point, which happens with probability about
// 2|x| / 2^l.
inline Word truncate_share(const RingParams& p, int party, Word s, int shift) {
  if (shift == 0) return s;
  if (party == 0) return p.wrap(s) >> shift;
  return ring_neg(p, ring_neg(p, s) >> shift);
}

inline Share local_truncate(const RingParams& p, Share a, int shift) {
  return {a.party, truncate_share(p, a.party, a.value, shift)};
}

inline SharedMatrix add(const RingParams& p, const SharedMatrix& a, const SharedMatrix& b) {
  require_same_shape(a, b, "add");
  SharedMatrix out(a.party, a.rows, a.cols);
  for (std::size_t k = 0; k < a.size(); ++k) out.values[k] = ring_add(p, a.values[k], b.values[k]);
  return out;
}

inline SharedMatrix sub(const RingParams& p, const SharedMatrix& a, const SharedMatrix& b) {
  require_same_shape(a, b, "sub");
  SharedMatrix out(a.party, a.rows, a.cols);
  for (std::size_t k = 0; k < a.size(); ++k) out.values[k] = ring_sub(p, a.values[k], b.values[k]);
  return out;
}

inline SharedMatrix negate(const RingParams& p, SharedMatrix a) {
  for (auto& v : a.values) v = ring_neg(p, v);
  return a;
}

inline SharedMatrix add_public(const RingParams& p, SharedMatrix a, Word c) {
  if (a.party == 0) {
    for (auto& v : a.values) v = ring_add(p, v, c);
  }
  return a;
}

inline SharedMatrix add_public(const RingParams& p, SharedMatrix a, std::span<const Word> c) {
  if (c.size() != a.size()) throw std::invalid_argument("add_public: size mismatch");
  if (a.party == 0) {
    for (std::size_t k = 0; k < a.size(); ++k) a.values[k] = ring_add(p, a.values[k], c[k]);
  }
  return a;
}

// Multiply by a public ring integer; no rescaling.
inline SharedMatrix scale_int(const RingParams& p, SharedMatrix a, Word c) {
  for (auto& v : a.values) v = ring_mul(p, v, c);
  return a;
}

inline SharedMatrix truncate_shares(const RingParams& p, SharedMatrix a, int shift) {
  for (auto& v : a.values) v = truncate_share(p, a.party, v, shift);
  return a;
}

// Multiply by a public real: scale by encode(c), then truncate by l_f.
inline SharedMatrix scale_public(const FixedPointCodec& codec, SharedMatrix a, double c) {
  const auto& p = codec.params();
  const Word ce = codec.encode(c);
  for (auto& v : a.values) v = truncate_share(p, a.party, ring_mul(p, v, ce), p.frac_bits);
  return a;
}

// Party 0 holds the public matrix, party 1 holds zeros.
inline SharedMatrix public_matrix(const FixedPointCodec& codec, int party, std::size_t rows,
                                  std::size_t cols, std::span<const double> values) {
  SharedMatrix out(party, rows, cols);
  if (party == 0) {
    for (std::size_t k = 0; k < out.size(); ++k) out.values[k] = codec.encode(values[k]);
  }
  return out;
}

inline SharedMatrix transpose(const SharedMatrix& a) {
  SharedMatrix out(a.party, a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
  return out;
}

inline SharedMatrix block(const SharedMatrix& a, std::size_t r0, std::size_t c0, std::size_t nr,
                          std::size_t nc) {
  if (r0 + nr > a.rows || c0 + nc > a.cols) throw std::out_of_range("block outside matrix");
  SharedMatrix out(a.party, nr, nc);
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nc; ++j) out(i, j) = a(r0 + i, c0 + j);
  return out;
}

inline void set_block(SharedMatrix& a, std::size_t r0, std::size_t c0, const SharedMatrix& b) {
  if (r0 + b.rows > a.rows || c0 + b.cols > a.cols) throw std::out_of_range("block outside matrix");
  for (std::size_t i = 0; i < b.rows; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) a(r0 + i, c0 + j) = b(i, j);
}

// Row sums, a rows x 1 result.
inline SharedMatrix row_sums(const RingParams& p, const SharedMatrix& a) {
  SharedMatrix out(a.party, a.rows, 1);
  for (std::size_t i = 0; i < a.rows; ++i) {
    Word s = 0;
    for (std::size_t j = 0; j < a.cols; ++j) s += a(i, j);
    out.values[i] = p.wrap(s);
  }
  return out;
}

// ---- serialization ---------------------------------------------------------
//
// Elements are written as ceil(l/64) little-endian 64-bit words each, low
// word first. A matrix is prefixed by its row and column counts.

inline void put_elements(const RingParams& p, std::span<const Word> src,
                         std::vector<std::uint64_t>& out) {
  const int w = p.words_per_element();
  out.reserve(out.size() + src.size() * w);
  for (Word v : src) {
    out.push_back(static_cast<std::uint64_t>(v));
    if (w == 2) out.push_back(static_cast<std::uint64_t>(v >> 64));
  }
}

inline std::vector<Word> get_elements(const RingParams& p, std::span<const std::uint64_t> src,
                                      std::size_t count) {
  const std::size_t w = static_cast<std::size_t>(p.words_per_element());
  if (src.size() < count * w) throw ProtocolError("payload too short for element count");
  std::vector<Word> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    Word v = src[k * w];
    if (w == 2) v |= static_cast<Word>(src[k * w + 1]) << 64;
    out[k] = p.wrap(v);
  }
  return out;
}

inline void put_matrix(const RingParams& p, const SharedMatrix& m,
                       std::vector<std::uint64_t>& out) {
  out.push_back(m.rows);
  out.push_back(m.cols);
  put_elements(p, m.values, out);
}

// Reads a matrix starting at `offset`, advancing it.
inline SharedMatrix get_matrix(const RingParams& p, int party, std::span<const std::uint64_t> src,
                               std::size_t& offset) {
  if (src.size() < offset + 2) throw ProtocolError("truncated matrix header");
  const std::size_t rows = src[offset], cols = src[offset + 1];
  offset += 2;
  const std::size_t n = rows * cols;
  auto vals = get_elements(p, src.subspan(offset), n);
  offset += n * static_cast<std::size_t>(p.words_per_element());
  return SharedMatrix(party, rows, cols, std::move(vals));
}

}  // namespace ppgpr
