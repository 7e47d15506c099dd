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

// Public protocol parameters shared by the two computing servers and the
// assistant.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "ppgpr/errors.hpp"
#include "ppgpr/ring.hpp"

namespace ppgpr {

inline constexpr long double kLog2E = 1.442695040888963407359924681001892137L;

// Bits of headroom kept between the largest value that is truncated locally
// and the top of the ring.
inline constexpr int kTruncationHeadroomBits = 40;

enum class ExpRangePolicy {
  kStrict,  // abort when the revealed value proves u is outside [u_min, 0]
  kClamp,   // evaluate inputs below u_min as-is, clamp exponents above the window
};

struct ExpParams {
  double u_min = -4.0;  // inputs lie in [u_min, 0]
  double r_max = 14.0;  // masks are drawn from [-r_max, r_max)
  // Scales of the mask e^{-r} and of the public factor e^{d}. Zero selects
  // the default for the ring (see resolve()).
  int mask_frac_bits = 0;
  int public_frac_bits = 0;
  ExpRangePolicy policy = ExpRangePolicy::kStrict;

  struct Resolved {
    int mask_bits;
    int public_bits;
  };

  // With l <= 64 both scales equal l_f. Wider rings spend the spare bits on
  // precision, keeping kTruncationHeadroomBits free for the final rescale.
  Resolved resolve(const RingParams& ring) const {
    int g = mask_frac_bits, h = public_frac_bits;
    const int wide = std::max(ring.frac_bits, (ring.bits - kTruncationHeadroomBits) / 2);
    if (g == 0) g = ring.bits <= 64 ? ring.frac_bits : wide;
    if (h == 0) h = ring.bits <= 64 ? ring.frac_bits : wide;
    return {g, h};
  }
};

// Reciprocal by an affine initial guess, Goldschmidt steps (one round each)
// and Newton refinements (two rounds each). A full division also multiplies
// by the numerator, so
//   division_rounds = 1 + goldschmidt_steps + 2 * newton_steps + 1.
struct DivisionConfig {
  double domain_lo = 1.0 / 64.0;
  double domain_hi = 256.0;
  int goldschmidt_steps = 15;
  int newton_steps = 0;

  int reciprocal_rounds() const { return 1 + goldschmidt_steps + 2 * newton_steps; }
  int division_rounds() const { return reciprocal_rounds() + 1; }

  void validate() const {
    if (!(domain_lo > 0.0) || !(domain_hi > domain_lo)) {
      throw ConfigError("division domain must satisfy 0 < lo < hi");
    }
    if (goldschmidt_steps < 1 || newton_steps < 0) {
      throw ConfigError("division needs at least one Goldschmidt step");
    }
  }
};

// Inverse square root by Newton iterations z <- z (3 - x z^2) / 2 from a
// constant start, then one product with x.
struct SqrtConfig {
  double domain_hi = 64.0;
  int iterations = 16;

  int rounds() const { return 2 * iterations + 1; }
};

}  // namespace ppgpr
