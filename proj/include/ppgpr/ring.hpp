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

// Arithmetic on Z_{2^l} and the fixed-point encoding between reals and ring
// elements. Every ring element lives in one 128-bit machine word; rings
// narrower than the word are obtained by masking.

#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "ppgpr/errors.hpp"

namespace ppgpr {

__extension__ using Word = unsigned __int128;
__extension__ using SignedWord = __int128;

inline constexpr int kMaxRingBits = 128;

struct RingParams {
  int bits = 128;      // l
  int frac_bits = 26;  // l_f

  constexpr RingParams() = default;
  constexpr RingParams(int l, int lf) : bits(l), frac_bits(lf) {}

  void validate() const {
    if (bits < 2 || bits > kMaxRingBits) {
      throw ConfigError("ring width must be in [2, 128], got " +
                        std::to_string(bits));
    }
    if (frac_bits < 0 || frac_bits >= bits) {
      throw ConfigError("fractional bits must be in [0, l), got " +
                        std::to_string(frac_bits));
    }
  }

  constexpr Word mask() const {
    return bits == 128 ? ~Word{0} : ((Word{1} << bits) - 1);
  }
  constexpr Word wrap(Word x) const { return x & mask(); }

  // Bytes one element occupies on the wire (whole 64-bit words).
  constexpr int words_per_element() const { return (bits + 63) / 64; }

  friend constexpr bool operator==(const RingParams&, const RingParams&) = default;
};

// Wrapping arithmetic; the caller passes the ring explicitly so that the
// element itself stays a plain word.
inline Word ring_add(const RingParams& p, Word a, Word b) { return p.wrap(a + b); }
inline Word ring_sub(const RingParams& p, Word a, Word b) { return p.wrap(a - b); }
inline Word ring_mul(const RingParams& p, Word a, Word b) { return p.wrap(a * b); }
inline Word ring_neg(const RingParams& p, Word a) { return p.wrap(Word{0} - a); }

// Two's-complement reading of an l-bit element.
inline SignedWord to_signed(const RingParams& p, Word e) {
  e = p.wrap(e);
  if (p.bits == 128) return static_cast<SignedWord>(e);
  const Word half = Word{1} << (p.bits - 1);
  if (e >= half) return static_cast<SignedWord>(e) - (SignedWord{1} << p.bits);
  return static_cast<SignedWord>(e);
}

inline Word from_signed(const RingParams& p, SignedWord s) {
  return p.wrap(static_cast<Word>(s));
}

// Arithmetic right shift of the signed interpretation, rewrapped.
inline Word truncate(const RingParams& p, Word e, int shift) {
  return from_signed(p, to_signed(p, e) >> shift);
}
inline Word truncate(const RingParams& p, Word e) { return truncate(p, e, p.frac_bits); }

class FixedPointCodec {
 public:
  constexpr FixedPointCodec() = default;
  explicit FixedPointCodec(RingParams params) : params_(params) { params_.validate(); }
  FixedPointCodec(int l, int lf) : FixedPointCodec(RingParams{l, lf}) {}

  const RingParams& params() const { return params_; }
  int bits() const { return params_.bits; }
  int frac_bits() const { return params_.frac_bits; }

  // Half-width of the representable interval, 2^{l - l_f - 1}.
  long double range_bound() const {
    return std::ldexp(1.0L, params_.bits - params_.frac_bits - 1);
  }

  Word encode(long double x) const { return encode_at(x, params_.frac_bits); }

  // Encode at an arbitrary scale 2^{frac}; rounds half away from zero.
  Word encode_at(long double x, int frac) const {
    if (!std::isfinite(x)) throw RangeError("cannot encode non-finite value");
    const long double scaled = std::round(std::ldexp(x, frac));
    const long double limit = std::ldexp(1.0L, params_.bits - 1);
    if (scaled < -limit || scaled >= limit) {
      throw RangeError("value " + std::to_string(static_cast<double>(x)) +
                       " outside fixed-point range at scale 2^" + std::to_string(frac));
    }
    return from_signed(params_, static_cast<SignedWord>(scaled));
  }

  double decode(Word e) const { return decode_at(e, params_.frac_bits); }

  double decode_at(Word e, int frac) const {
    return static_cast<double>(
        std::ldexp(static_cast<long double>(to_signed(params_, e)), -frac));
  }

  // Quantum of the encoding, 2^{-l_f}.
  double quantum() const { return std::ldexp(1.0, -params_.frac_bits); }

  friend bool operator==(const FixedPointCodec&, const FixedPointCodec&) = default;

 private:
  RingParams params_{};
};

}  // namespace ppgpr
