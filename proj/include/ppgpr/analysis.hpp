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

// Checks of the exponentiation parameters, exact leakage enumeration for the
// masked exponent, and closed-form round counts.

#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "ppgpr/errors.hpp"
#include "ppgpr/params.hpp"
#include "ppgpr/ring.hpp"

namespace ppgpr {

struct ExpParamsReport {
  bool accepted = false;
  double required_frac_bits = 0;  // (r_max - u_min) * log2(e)
  double underflow_slack_bits = 0;  // l_f - required_frac_bits, must be >= 0
  double overflow_slack_bits = 0;   // (l - 1) / 2 - l_f, must be > 0
  std::string reason;
};

// Accepts iff (r_max - u_min) log2(e) <= l_f < (l - 1) / 2.
inline ExpParamsReport validate_exp_params(const ExpParams& exp, const RingParams& ring) {
  ExpParamsReport rep;
  rep.required_frac_bits = static_cast<double>((exp.r_max - exp.u_min) * kLog2E);
  rep.underflow_slack_bits = ring.frac_bits - rep.required_frac_bits;
  rep.overflow_slack_bits = (ring.bits - 1) / 2.0 - ring.frac_bits;
  if (!(exp.u_min <= 0.0)) {
    rep.reason = "u_min must be <= 0";
  } else if (!(exp.r_max > 0.0)) {
    rep.reason = "r_max must be > 0";
  } else if (rep.underflow_slack_bits < 0) {
    rep.reason = "e^{u_min - r_max} underflows at l_f fractional bits";
  } else if (rep.overflow_slack_bits <= 0) {
    rep.reason = "l_f must be below (l - 1) / 2";
  } else {
    rep.accepted = true;
  }
  return rep;
}

inline void require_valid_exp_params(const ExpParams& exp, const RingParams& ring) {
  auto rep = validate_exp_params(exp, ring);
  if (!rep.accepted) throw ConfigError("invalid exponentiation parameters: " + rep.reason);
  auto [g, h] = exp.resolve(ring);
  if (g < ring.frac_bits || h < 0 || g + h > ring.bits - 2) {
    throw ConfigError("exponentiation scales do not fit the ring");
  }
}

// ---- leakage ---------------------------------------------------------------

using Rational = boost::rational<std::int64_t>;

struct LeakageReport {
  std::int64_t m_u = 0;
  std::int64_t m_r = 0;
  Rational p_secure;           // closed form (m_r - m_u + 1) / m_r
  Rational expected_leakage;   // closed form (m_u + m_r - 1) / (m_u m_r)
  Rational enumerated_p_secure;
  Rational enumerated_leakage;
  Rational enumerated_exact_exposure;  // probability that d pins u down
  bool agrees = false;
};

// u uniform on {0..m_u-1}, r uniform on {0..m_r-1}, the adversary sees
// d = u + r. For every d the posterior support of u is counted exactly.
inline LeakageReport leakage_enumerate(std::int64_t m_u, std::int64_t m_r) {
  if (m_u < 1 || m_r < 1) throw std::invalid_argument("grid sizes must be positive");
  if (m_u > m_r) throw std::invalid_argument("leakage enumeration requires m_u <= m_r");
  if (m_u > 10000 || m_r > 10000) throw std::invalid_argument("grid too large to enumerate");

  LeakageReport rep;
  rep.m_u = m_u;
  rep.m_r = m_r;
  rep.p_secure = Rational(m_r - m_u + 1, m_r);
  rep.expected_leakage = Rational(m_u + m_r - 1, m_u * m_r);

  const std::int64_t total = m_u * m_r;
  // Support size of u given d, for d = 0 .. m_u + m_r - 2.
  std::vector<std::int64_t> support(static_cast<std::size_t>(m_u + m_r - 1), 0);
  for (std::int64_t u = 0; u < m_u; ++u)
    for (std::int64_t r = 0; r < m_r; ++r) ++support[static_cast<std::size_t>(u + r)];

  // Partial sums of 1/s have denominators up to lcm(1..m_u), so they are
  // accumulated in arbitrary precision.
  using boost::multiprecision::cpp_rational;
  cpp_rational secure(0), leak(0), exact(0);
  for (std::int64_t u = 0; u < m_u; ++u) {
    for (std::int64_t r = 0; r < m_r; ++r) {
      const std::int64_t s = support[static_cast<std::size_t>(u + r)];
      const cpp_rational p(1, total);
      leak += p / s;
      if (s == m_u) secure += p;
      if (s == 1) exact += p;
    }
  }
  auto narrow = [](const cpp_rational& q) {
    return Rational(boost::multiprecision::numerator(q).convert_to<std::int64_t>(),
                    boost::multiprecision::denominator(q).convert_to<std::int64_t>());
  };
  rep.enumerated_p_secure = narrow(secure);
  rep.enumerated_leakage = narrow(leak);
  rep.enumerated_exact_exposure = narrow(exact);
  rep.agrees = rep.enumerated_p_secure == rep.p_secure && rep.enumerated_leakage == rep.expected_leakage;
  return rep;
}

// ---- round counts ----------------------------------------------------------

enum class RoundProtocol { kPPExp, kPPMI, kCholesky, kForward, kBackward };

inline std::int64_t expected_rounds(RoundProtocol p, std::int64_t n, std::int64_t division_rounds) {
  const std::int64_t r = division_rounds;
  if (p != RoundProtocol::kPPExp && n < 2) {
    throw std::invalid_argument("matrix round counts are defined for n >= 2");
  }
  switch (p) {
    case RoundProtocol::kPPExp: return 1;
    case RoundProtocol::kCholesky: return r + (n - 2) * (4 + r) + 2;
    case RoundProtocol::kForward: return n - 1;
    case RoundProtocol::kBackward: return r + 1;
    case RoundProtocol::kPPMI:
      return expected_rounds(RoundProtocol::kCholesky, n, r) +
             expected_rounds(RoundProtocol::kForward, n, r) +
             expected_rounds(RoundProtocol::kBackward, n, r);
  }
  return 0;
}

}  // namespace ppgpr
