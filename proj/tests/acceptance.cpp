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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ppgpr/app.hpp"

namespace {

using namespace ppgpr;

// ---- pinned tolerances -----------------------------------------------------

constexpr double kLog2E = 1.4426950408889634;
constexpr double kExpWideQuanta = 4.0;                 // criterion 1, l = 64
constexpr double kLossMiMax = 1e-3;                    // criterion 3
constexpr int kLossMiRuns = 10;                        // criterion 3
constexpr double kVolumeExponent = 3.0;                // criterion 4
constexpr double kVolumeExponentSlack = 0.2;           // criterion 4
constexpr double kSeLossMeanMax = 1e-4;                // criterion 5
constexpr double kSeLossVarMax = 1e-3;                 // criterion 5
constexpr double kMaternLossMeanMax = 1e-2;            // criterion 6
constexpr double kMaternLossVarMax = 1e-3;             // criterion 6
constexpr double kEndToEndSeconds = 120.0;             // criteria 5 and 6
constexpr int kEndToEndSeeds = 5;                      // criteria 5 and 6
constexpr double kChiSquaredMinP = 1e-3;               // criterion 9

struct Verdict {
  bool pass = true;
  std::string detail;
};

class Detail {
 public:
  template <class T>
  Detail& operator()(const std::string& key, const T& v) {
    if (!first_) os_ << ", ";
    first_ = false;
    os_ << key << "=" << v;
    return *this;
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
  bool first_ = true;
};

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::array<SharedMatrix, 2> share_values(const FixedPointCodec& c, std::size_t rows, std::size_t cols,
                                         const std::vector<double>& v, std::uint64_t seed) {
  Prg rng(seed, "acceptance-input");
  auto [a, b] = shr_matrix(c, rows, cols, v, rng);
  return {std::move(a), std::move(b)};
}

SessionOptions options(RingParams ring, std::uint64_t seed = 1) {
  SessionOptions o;
  o.ring = ring;
  o.dealer_seed = seed;
  o.timeout = std::chrono::seconds(600);
  return o;
}

// ---- 1. PP-Exp exactness ---------------------------------------------------

// Every grid input in [u_min, 0] against every grid mask on l = 24, l_f = 8.
// The opened product must equal the integer product of the public factor and
// the mask (no wrap), and the value must lie within the rounding error of
// both factors.
bool exp_exhaustive(Detail& d) {
  const RingParams ring(24, 8);
  const int f = ring.frac_bits;
  const double step = std::ldexp(1.0, -f);
  SessionOptions opt = options(ring, 5);
  opt.protocol.exp.u_min = -4.0;
  opt.protocol.exp.r_max = std::floor((f / kLog2E + opt.protocol.exp.u_min) / step) * step;
  opt.protocol.exp.policy = ExpRangePolicy::kStrict;
  const FixedPointCodec c(ring);
  if (!validate_exp_params(opt.protocol.exp, ring).accepted) {
    d("small_ring_params", "rejected");
    return false;
  }
  const auto [g, h] = opt.protocol.exp.resolve(ring);
  const int u_lo = static_cast<int>(std::lround(opt.protocol.exp.u_min / step));
  const int r_half = static_cast<int>(std::lround(opt.protocol.exp.r_max / step));

  std::vector<double> us;
  std::vector<long double> rs;
  for (int ui = u_lo; ui <= 0; ++ui)
    for (int ri = -r_half; ri < r_half; ++ri) {
      us.push_back(ui * step);
      rs.push_back(ri * static_cast<long double>(step));
    }
  Dealer dealer(c, opt.protocol.exp, 5);
  auto [m0, m1] = dealer.gen_exp_mask_explicit(rs);
  std::array<ExpMaskBatch, 2> masks{std::move(m0), std::move(m1)};
  auto in = share_values(c, us.size(), 1, us, 3);
  auto res = run_session(opt, [&](Party& P) {
    return pp_exp_raw(P, in[P.id()], ExpRangePolicy::kStrict, masks[P.id()]);
  });

  std::size_t wraps = 0, underflows = 0, over_bound = 0;
  double worst_ratio = 0;
  for (std::size_t i = 0; i < us.size(); ++i) {
    const long double dd = us[i] + rs[i];
    const long double C = std::round(std::exp(dd) * std::ldexp(1.0L, h));
    const long double E = std::round(std::exp(-rs[i]) * std::ldexp(1.0L, g));
    if (C < 1 || E < 1) ++underflows;
    const Word raw = rec(ring, {0, res.out[0].values[i]}, {1, res.out[1].values[i]});
    if (static_cast<long double>(to_signed(ring, raw)) != C * E) ++wraps;
    const double got = c.decode_at(raw, g + h);
    const double bound = 0.5 * std::ldexp(std::exp(static_cast<double>(dd)), -h) +
                         0.5 * std::ldexp(std::exp(-static_cast<double>(rs[i])), -g) +
                         0.25 * std::ldexp(1.0, -g - h);
    const double err = std::abs(got - std::exp(us[i]));
    worst_ratio = std::max(worst_ratio, err / bound);
    if (err > bound) ++over_bound;
  }
  d("pairs", us.size())("wraps", wraps)("underflows", underflows)("over_bound", over_bound)(
      "worst_err_over_bound", worst_ratio);
  return wraps == 0 && underflows == 0 && over_bound == 0;
}

// Max absolute error of pp_exp over n uniform u in [-4, 0] against std::exp.
double exp_random_error(RingParams ring, std::size_t n) {
  SessionOptions opt = options(ring, 7);
  opt.protocol.exp.policy = ExpRangePolicy::kStrict;
  const FixedPointCodec c(ring);
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-4.0, 0.0);
  std::vector<double> x(n);
  for (auto& v : x) v = u(gen);
  auto in = share_values(c, n, 1, x, 13);
  auto res = run_session(opt, [&](Party& P) { return pp_exp(P, in[P.id()]); });
  const auto z = reveal(c, res.out[0], res.out[1]);
  double worst = 0;
  for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(z[i] - std::exp(x[i])));
  return worst;
}

Verdict criterion_1() {
  Detail d;
  const bool small = exp_exhaustive(d);
  const double q = std::ldexp(1.0, -26);
  const double err64 = exp_random_error(RingParams(64, 26), 100000);
  const double err128 = exp_random_error(RingParams(128, 26), 100000);
  d("l64_max_err_quanta", err64 / q)("l64_limit_quanta", kExpWideQuanta)("l128_max_err_quanta", err128 / q);
  return {small && err64 <= kExpWideQuanta * q, d.str()};
}

// ---- 2. PP-Exp communication -----------------------------------------------

Verdict criterion_2() {
  Detail d;
  bool ok = true;
  const RingParams ring;
  const FixedPointCodec c(ring);
  for (std::size_t n : {std::size_t{1000}, std::size_t{10000}}) {
    std::vector<double> x(n);
    std::mt19937_64 gen(n);
    std::uniform_real_distribution<double> u(-4.0, 0.0);
    for (auto& v : x) v = u(gen);
    auto in = share_values(c, n, 1, x, 17);
    auto res = run_session(options(ring), [&](Party& P) { return pp_exp(P, in[P.id()]); });
    const auto& s = res.stats;
    const std::uint64_t bits = s[0].online.bits_sent + s[1].online.bits_sent;
    const std::uint64_t want = 2ull * n * static_cast<std::uint64_t>(ring.bits);
    ok = ok && s[0].online.rounds == 1 && s[1].online.rounds == 1 && bits == want;
    d("n" + std::to_string(n) + "_rounds", s[0].online.rounds)("n" + std::to_string(n) + "_bits", bits)(
        "n" + std::to_string(n) + "_expected_bits", want);
  }
  return {ok, d.str()};
}

// ---- 3. PP-MI accuracy -----------------------------------------------------

Verdict criterion_3() {
  Detail d;
  RunConfig c;
  c.kernel.signal_variance = 1.0;
  c.kernel.length_scale = 1.0;
  c.kernel.noise_variance = 0.1;
  bool ok = true;
  for (std::size_t n : {std::size_t{50}, std::size_t{100}, std::size_t{200}}) {
    double sum = 0;
    for (int k = 0; k < kLossMiRuns; ++k) sum += matinv_sample(c, n, 1000 + static_cast<std::uint64_t>(k)).loss_mi;
    const double mean = sum / kLossMiRuns;
    ok = ok && mean <= kLossMiMax;
    d("n" + std::to_string(n) + "_mean_loss_mi", mean);
  }
  d("limit", kLossMiMax);
  return {ok, d.str()};
}

// ---- 4. PP-MI communication ------------------------------------------------

Verdict criterion_4() {
  Detail d;
  RunConfig c;
  bool ok = c.protocol.division.division_rounds() == 17;
  std::vector<double> ns, bits;
  for (std::size_t n : {std::size_t{8}, std::size_t{16}, std::size_t{32}, std::size_t{64}}) {
    const MatinvSample s = matinv_sample(c, n, 1);
    const auto want = static_cast<std::uint64_t>(22 * n - 6);
    ok = ok && s.rounds == want;
    d("n" + std::to_string(n) + "_rounds", s.rounds);
    ns.push_back(static_cast<double>(n));
    bits.push_back(static_cast<double>(s.bits_total));
  }
  const double slope = loglog_slope(ns, bits);
  ok = ok && std::abs(slope - kVolumeExponent) <= kVolumeExponentSlack;
  d("volume_exponent", slope);
  return {ok, d.str()};
}

// ---- 5 and 6. End-to-end PP-GPR ----------------------------------------------

RunConfig diabetes_config(KernelKind kind) {
  RunConfig c;
  c.dataset = std::string(PPGPR_TEST_DATA_DIR) + "/diabetes.csv";
  c.schema.normalization = Normalization::kL2;
  c.train_size = 80;
  c.test_size = 20;
  c.kernel.kind = kind;
  c.seeds.clear();
  for (int s = 1; s <= kEndToEndSeeds; ++s) c.seeds.push_back(static_cast<std::uint64_t>(s));
  return c;
}

Verdict end_to_end(const RunConfig& c, double mean_max, double var_max) {
  Detail d;
  const auto t0 = Clock::now();
  const json report = run_gpr(c);
  const double total = elapsed(t0);
  double worst_mean = 0, worst_var = 0, slowest = 0;
  for (const auto& r : report.at("runs")) {
    worst_mean = std::max(worst_mean, r.at("loss_mean").get<double>());
    worst_var = std::max(worst_var, r.at("loss_variance").get<double>());
    slowest = std::max(slowest, r.at("construct_seconds").get<double>() + r.at("predict_seconds").get<double>());
  }
  const double mean_loss = report.at("summary").at("loss_mean").at("mean").get<double>();
  const double var_loss = report.at("summary").at("loss_variance").at("mean").get<double>();
  d("loss_mean", mean_loss)("loss_mean_worst_seed", worst_mean)("limit", mean_max)("loss_variance", var_loss)(
      "loss_variance_worst_seed", worst_var)("limit", var_max)("slowest_run_s", slowest)("total_s", total);
  return {mean_loss <= mean_max && var_loss <= var_max && slowest <= kEndToEndSeconds, d.str()};
}

Verdict criterion_5() {
  RunConfig c = diabetes_config(KernelKind::kSquaredExponential);
  c.kernel.signal_variance = 0.8;
  c.kernel.noise_variance = 0.1;
  c.kernel.length_scale = 0.23;
  return end_to_end(c, kSeLossMeanMax, kSeLossVarMax);
}

Verdict criterion_6() {
  RunConfig c = diabetes_config(KernelKind::kMatern32);
  c.kernel.signal_variance = 0.1;
  c.kernel.noise_variance = 0.1;
  c.kernel.length_scale = 1.0;
  return end_to_end(c, kMaternLossMeanMax, kMaternLossVarMax);
}

// ---- 7. Leakage closed forms -------------------------------------------------

Verdict criterion_7() {
  Detail d;
  std::size_t pairs = 0, mismatches = 0;
  for (std::int64_t mr = 1; mr <= 64; ++mr) {
    for (std::int64_t mu = 1; mu <= mr; ++mu) {
      const LeakageReport rep = leakage_enumerate(mu, mr);
      const Rational leak(mu + mr - 1, mu * mr), secure(mr - mu + 1, mr);
      ++pairs;
      if (rep.enumerated_leakage != leak || rep.enumerated_p_secure != secure) ++mismatches;
    }
  }
  const LeakageReport ex = leakage_enumerate(3, 5);
  const bool example = ex.enumerated_leakage == Rational(7, 15) && ex.enumerated_p_secure == Rational(3, 5);
  d("pairs", pairs)("mismatches", mismatches)("example_leakage", rational_string(ex.enumerated_leakage))(
      "example_p_secure", rational_string(ex.enumerated_p_secure));
  return {mismatches == 0 && example, d.str()};
}

// ---- 8. Scenario equivalence ---------------------------------------------------

Verdict criterion_8() {
  Detail d;
  RunConfig c;
  const Problem p = synthetic_problem(20, 20, 3, 42);
  std::vector<std::vector<Word>> outputs;
  for (Scenario s : {Scenario::kHDS, Scenario::kVDS, Scenario::kPDS}) {
    c.scenario = s;
    GprRun run = run_gpr_session(c, 7, p);
    const SharedMatrix opened =
        rec_matrix(c.ring, run.session.out[0].predictions, run.session.out[1].predictions);
    outputs.push_back(opened.values);
  }
  const bool vds = outputs[1] == outputs[0], pds = outputs[2] == outputs[0];
  d("points", p.Xs.rows())("vds_equals_hds", vds)("pds_equals_hds", pds);
  return {vds && pds, d.str()};
}

// ---- 9. Property suites -------------------------------------------------------

double chi_squared_p(const std::vector<double>& counts, double expected) {
  double chi2 = 0;
  for (double k : counts) chi2 += (k - expected) * (k - expected) / expected;
  boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  return 1.0 - boost::math::cdf(dist, chi2);
}

Verdict criterion_9() {
  Detail d;
  // Shr/Rec roundtrip.
  const FixedPointCodec c(128, 26);
  Prg rng(9, "acceptance-shr");
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> wide(-1e9, 1e9);
  std::size_t roundtrip_failures = 0;
  for (int i = 0; i < 100000; ++i) {
    const double x = wide(gen);
    auto [s0, s1] = shr(c, x, rng);
    if (rec(c.params(), s0, s1) != c.encode(x)) ++roundtrip_failures;
  }

  // Beaver products against the product of the encoded operands.
  const std::size_t n = 10000;
  std::uniform_real_distribution<double> in_range(-100.0, 100.0);
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = in_range(gen);
    b[i] = in_range(gen);
  }
  auto xa = share_values(c, n, 1, a, 21);
  auto xb = share_values(c, n, 1, b, 22);
  auto res = run_session(options(c.params()), [&](Party& P) { return ss_mul(P, xa[P.id()], xb[P.id()]); });
  const auto z = reveal(c, res.out[0], res.out[1]);
  const double tol = std::ldexp(1.0, -c.frac_bits() + 1);
  double worst = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double want = c.decode(c.encode(a[i])) * c.decode(c.encode(b[i]));
    worst = std::max(worst, std::abs(z[i] - want));
  }

  // Uniformity of the first share on l = 8.
  const FixedPointCodec small(8, 2);
  Prg rng8(123, "acceptance-chi");
  std::vector<double> counts(256, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    auto [s0, s1] = shr(small, 1.25, rng8);
    counts[static_cast<std::size_t>(s0.value)] += 1;
  }
  const double p = chi_squared_p(counts, draws / 256.0);

  d("roundtrip_failures", roundtrip_failures)("beaver_max_err", worst)("beaver_limit", tol)("chi2_p", p)(
      "chi2_min_p", kChiSquaredMinP);
  return {roundtrip_failures == 0 && worst <= tol && p >= kChiSquaredMinP, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"PP-Exp exactness", criterion_1},         {"PP-Exp communication", criterion_2},
      {"PP-MI accuracy", criterion_3},           {"PP-MI communication", criterion_4},
      {"end-to-end SE kernel", criterion_5},     {"end-to-end Matern 3/2 kernel", criterion_6},
      {"leakage closed forms", criterion_7},     {"scenario equivalence", criterion_8},
      {"property suites", criterion_9},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    const auto t0 = Clock::now();
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::printf("criterion %zu %s: %s (%s; %.1fs)\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first,
                v.detail.c_str(), elapsed(t0));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
