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

#pragma once

#include <sodium.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string_view>

#include "ppgpr/ring.hpp"

namespace ppgpr {

namespace detail {

inline void ensure_sodium() {
  static const bool ok = sodium_init() >= 0;
  if (!ok) throw std::runtime_error("libsodium initialisation failed");
}

inline std::array<unsigned char, crypto_stream_chacha20_ietf_KEYBYTES> derive_key(
    std::uint64_t seed, std::string_view label) {
  ensure_sodium();
  std::array<unsigned char, crypto_stream_chacha20_ietf_KEYBYTES> key{};
  unsigned char material[8];
  for (int i = 0; i < 8; ++i) material[i] = static_cast<unsigned char>(seed >> (8 * i));
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, key.size());
  crypto_generichash_update(&st, material, sizeof material);
  crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(label.data()),
                            label.size());
  crypto_generichash_final(&st, key.data(), key.size());
  return key;
}

inline Word load_word(const unsigned char* p) {
  Word w = 0;
  for (int i = 15; i >= 0; --i) w = (w << 8) | p[i];
  return w;
}

}  // namespace detail

// Deterministic ChaCha20 keystream. One instance per owner; not thread-safe.
class Prg {
 public:
  explicit Prg(std::uint64_t seed, std::string_view label = "ppgpr")
      : key_(detail::derive_key(seed, label)) {}

  std::uint64_t next_u64() {
    unsigned char b[8];
    fill(b, sizeof b);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  Word next_word() {
    unsigned char b[16];
    fill(b, sizeof b);
    return detail::load_word(b);
  }

  // Uniform element of Z_{2^l}.
  Word next_element(const RingParams& p) { return p.wrap(next_word()); }

  // Uniform integer in [0, n), n > 0, by rejection.
  Word uniform_below(Word n) {
    if (n == 0) throw std::invalid_argument("uniform_below(0)");
    if ((n & (n - 1)) == 0) return next_word() & (n - 1);
    const Word limit = ~Word{0} - (~Word{0} % n);
    for (;;) {
      const Word w = next_word();
      if (w < limit) return w % n;
    }
  }

  void fill(unsigned char* out, std::size_t len) {
    while (len > 0) {
      if (pos_ == buf_.size()) refill();
      const std::size_t take = std::min(len, buf_.size() - pos_);
      std::memcpy(out, buf_.data() + pos_, take);
      pos_ += take;
      out += take;
      len -= take;
    }
  }

 private:
  void refill() {
    std::array<unsigned char, crypto_stream_chacha20_ietf_NONCEBYTES> nonce{};
    for (int i = 0; i < 8; ++i) nonce[i] = static_cast<unsigned char>(chunk_ >> (8 * i));
    buf_.fill(0);
    crypto_stream_chacha20_ietf_xor_ic(buf_.data(), buf_.data(), buf_.size(), nonce.data(), 0,
                                       key_.data());
    ++chunk_;
    pos_ = 0;
  }

  std::array<unsigned char, crypto_stream_chacha20_ietf_KEYBYTES> key_;
  std::array<unsigned char, 4096> buf_{};
  std::size_t pos_ = buf_.size();
  std::uint64_t chunk_ = 0;
};

// Random-access pseudorandom function used to share inputs element by
// element. The mask of (matrix, row, col) does not depend on who owns the
// element or in which order elements are shared.
class ElementPrf {
 public:
  explicit ElementPrf(std::uint64_t seed) : key_(detail::derive_key(seed, "ppgpr-share")) {}

  Word operator()(std::uint32_t matrix_id, std::uint64_t row, std::uint32_t col) const {
    std::array<unsigned char, crypto_stream_chacha20_ietf_NONCEBYTES> nonce{};
    for (int i = 0; i < 4; ++i) nonce[i] = static_cast<unsigned char>(matrix_id >> (8 * i));
    for (int i = 0; i < 8; ++i) nonce[4 + i] = static_cast<unsigned char>(row >> (8 * i));
    unsigned char block[64] = {};
    crypto_stream_chacha20_ietf_xor_ic(block, block, sizeof block, nonce.data(), col,
                                       key_.data());
    return detail::load_word(block);
  }

 private:
  std::array<unsigned char, crypto_stream_chacha20_ietf_KEYBYTES> key_;
};

}  // namespace ppgpr
