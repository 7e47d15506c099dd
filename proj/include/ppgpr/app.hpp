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

// End-to-end drivers behind the command line tool. Each driver returns a
// JSON metrics report.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "ppgpr/analysis.hpp"
#include "ppgpr/config.hpp"
#include "ppgpr/dataset.hpp"
#include "ppgpr/gpr.hpp"
#include "ppgpr/matinv.hpp"
#include "ppgpr/session.hpp"

namespace ppgpr {

using json = nlohmann::json;

// Name of the driver step in progress, reported when a command fails.
inline std::string& current_stage() {
  thread_local std::string stage;
  return stage;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

inline json mean_std(const std::vector<double>& v) {
  if (v.empty()) return json{{"mean", nullptr}, {"std", nullptr}};
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return json{{"mean", mean}, {"std", std::sqrt(ss / static_cast<double>(v.size()))}};
}

inline std::string word_hex(Word w) {
  static const char* digits = "0123456789abcdef";
  std::string s(32, '0');
  for (int i = 31; i >= 0; --i, w >>= 4) s[static_cast<std::size_t>(i)] = digits[w & 0xF];
  return s;
}

inline json stats_json(const RoundStats& s) {
  json per = json::object();
  for (const auto& [name, p] : s.per_protocol) {
    per[name] = {{"rounds", p.rounds}, {"bits_sent", p.bits_sent}, {"bytes_sent", p.bytes_sent}};
  }
  return {{"rounds", s.online.rounds},
          {"elements_sent", s.online.elements_sent},
          {"bits_sent", s.online.bits_sent},
          {"bytes_sent", s.online.bytes_sent},
          {"offline_messages", s.offline_messages},
          {"offline_bytes_received", s.offline_bytes_received},
          {"offline_bytes_sent", s.offline_bytes_sent},
          {"per_protocol", per}};
}

inline std::uint64_t scope_rounds(const RoundStats& s, const std::string& name) {
  auto it = s.per_protocol.find(name);
  return it == s.per_protocol.end() ? 0 : it->second.rounds;
}

inline Eigen::MatrixXd uniform_matrix(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols,
                                      double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(gen);
  return m;
}

}  // namespace detail

// ---- data ------------------------------------------------------------------

struct Problem {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::MatrixXd Xs;
  Eigen::VectorXd ys;  // held-out outputs, for reference only
};

// Synthetic targets: y = sum_j sin(pi x_j) / (j + 1) plus Gaussian noise.
inline Problem synthetic_problem(std::size_t n, std::size_t m, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Problem p;
  p.X = detail::uniform_matrix(gen, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d), -1, 1);
  p.Xs = detail::uniform_matrix(gen, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d), -1, 1);
  std::normal_distribution<double> noise(0.0, 0.1);
  auto f = [&](const Eigen::MatrixXd& A) {
    Eigen::VectorXd out(A.rows());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      double v = 0;
      for (Eigen::Index j = 0; j < A.cols(); ++j) v += std::sin(M_PI * A(i, j)) / static_cast<double>(j + 1);
      out(i) = v + noise(gen);
    }
    return out;
  };
  p.y = f(p.X);
  p.ys = f(p.Xs);
  return p;
}

// Training and test rows for one run. CSV rows are shuffled by the seed.
inline Problem load_problem(const RunConfig& c, std::uint64_t seed) {
  current_stage() = "ingest";
  if (c.dataset.empty()) return synthetic_problem(c.train_size, c.test_size, c.synthetic_dim, seed);
  Dataset ds = ingest_csv(c.dataset, c.schema);
  const std::size_t need = c.train_size + c.test_size;
  if (need > ds.n()) {
    throw ConfigError("dataset has " + std::to_string(ds.n()) + " rows, run needs " + std::to_string(need));
  }
  std::vector<Eigen::Index> idx(ds.n());
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::mt19937_64 gen(seed);
  std::shuffle(idx.begin(), idx.end(), gen);
  Problem p;
  const auto n = static_cast<Eigen::Index>(c.train_size), m = static_cast<Eigen::Index>(c.test_size);
  p.X.resize(n, ds.X.cols());
  p.y.resize(n);
  p.Xs.resize(m, ds.X.cols());
  p.ys.resize(m);
  for (Eigen::Index i = 0; i < n; ++i) {
    p.X.row(i) = ds.X.row(idx[static_cast<std::size_t>(i)]);
    p.y(i) = ds.y(idx[static_cast<std::size_t>(i)]);
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    p.Xs.row(i) = ds.X.row(idx[static_cast<std::size_t>(n + i)]);
    p.ys(i) = ds.y(idx[static_cast<std::size_t>(n + i)]);
  }
  return p;
}

inline Partition owner_partition(const RunConfig& c, const Problem& p) {
  switch (c.scenario) {
    case Scenario::kHDS:
      return even_partition(static_cast<std::size_t>(p.X.rows()), std::min<std::size_t>(c.owners, static_cast<std::size_t>(p.X.rows())));
    case Scenario::kVDS:
      return even_partition(static_cast<std::size_t>(p.X.cols()), std::min<std::size_t>(c.owners, static_cast<std::size_t>(p.X.cols())));
    case Scenario::kPDS: return {};
  }
  return {};
}

// ---- privacy-preserving GPR ------------------------------------------------

struct GprPartyOutput {
  SharedMatrix predictions;  // m x 2: mean, variance
  double construct_seconds = 0;
  double predict_seconds = 0;
};

struct GprRun {
  Problem problem;
  SessionResult<GprPartyOutput> session;
};

// One session of model construction and prediction on the given problem.
inline GprRun run_gpr_session(const RunConfig& c, std::uint64_t seed, Problem problem,
                              const std::array<std::string, 2>& persist = {}) {
  const FixedPointCodec codec(c.ring);
  current_stage() = "share";
  const ScenarioShares shares =
      split_scenario(codec, problem.X, problem.y, problem.Xs, c.scenario, owner_partition(c, problem), seed);
  SessionOptions opt = c.session_options(seed);
  opt.persist_files = persist;
  const auto policy = c.protocol.exp.policy;
  const std::size_t m = static_cast<std::size_t>(problem.Xs.rows());

  current_stage() = "session";
  auto res = run_session(opt, [&](Party& P) {
    const ShareBundle& b = shares.party[P.id()];
    const auto t0 = detail::Clock::now();
    GprModelShares model = pp_gpr_construct(P, b.X, b.y, c.kernel, policy);
    GprPartyOutput out;
    out.construct_seconds = detail::seconds_since(t0);
    const auto t1 = detail::Clock::now();
    PredictionShares pred = pp_gpr_predict(P, model, b.Xs, policy);
    out.predict_seconds = detail::seconds_since(t1);
    out.predictions = SharedMatrix(P.id(), m, 2);
    set_block(out.predictions, 0, 0, pred.mean);
    set_block(out.predictions, 0, 1, pred.variance);
    return out;
  });
  return {std::move(problem), std::move(res)};
}

// Recorded PP-MI rounds against the closed form.
inline json matinv_round_check(const RunConfig& c, const RoundStats& s, std::size_t n) {
  const auto recorded = detail::scope_rounds(s, "pp_matinv");
  if (n < 2) return {{"recorded", recorded}, {"expected", nullptr}, {"ok", true}};
  const auto expected = static_cast<std::uint64_t>(
      expected_rounds(RoundProtocol::kPPMI, static_cast<std::int64_t>(n), c.protocol.division.division_rounds()));
  if (recorded != expected) {
    current_stage() = "round-check";
    throw ProtocolError("pp_matinv recorded " + std::to_string(recorded) + " rounds, expected " +
                        std::to_string(expected));
  }
  return {{"recorded", recorded}, {"expected", expected}, {"ok", true}};
}

inline json config_json(const RunConfig& c) {
  return {{"ring_bits", c.ring.bits},
          {"frac_bits", c.ring.frac_bits},
          {"kernel", kernel_name(c.kernel.kind)},
          {"length_scale", c.kernel.length_scale},
          {"signal_variance", c.kernel.signal_variance},
          {"noise_variance", c.kernel.noise_variance},
          {"scenario", scenario_name(c.scenario)},
          {"backend", c.backend == Backend::kInProc ? "inproc" : "sockets"},
          {"exp_u_min", c.protocol.exp.u_min},
          {"exp_r_max", c.protocol.exp.r_max},
          {"division_rounds", c.protocol.division.division_rounds()},
          {"sqrt_rounds", c.protocol.sqrt.rounds()},
          {"dataset", c.dataset.empty() ? json("synthetic") : json(c.dataset)},
          {"train_size", c.train_size},
          {"test_size", c.test_size},
          {"seeds", c.seeds}};
}

inline json run_gpr(const RunConfig& c) {
  current_stage() = "config";
  c.validate();
  if (!c.offline_files[0].empty() && c.seeds.size() != 1) {
    throw ConfigError("replaying offline material requires exactly one seed");
  }
  const FixedPointCodec codec(c.ring);
  json runs = json::array();
  std::vector<double> loss_mean, loss_var, t_construct, t_predict;
  for (std::uint64_t seed : c.seeds) {
    GprRun run = run_gpr_session(c, seed, load_problem(c, seed));
    const auto& res = run.session;
    const std::size_t n = static_cast<std::size_t>(run.problem.X.rows());
    json r{{"seed", seed},
           {"n", n},
           {"test_points", run.problem.Xs.rows()},
           {"construct_seconds", res.out[0].construct_seconds},
           {"predict_seconds", res.out[0].predict_seconds},
           {"stats", {detail::stats_json(res.stats[0]), detail::stats_json(res.stats[1])}},
           {"round_check", matinv_round_check(c, res.stats[0], n)}};
    t_construct.push_back(res.out[0].construct_seconds);
    t_predict.push_back(res.out[0].predict_seconds);

    if (c.reveal) {
      current_stage() = "score";
      const auto v = reveal(codec, res.out[0].predictions, res.out[1].predictions);
      Predictions got;
      for (std::size_t i = 0; i < v.size(); i += 2) {
        got.mean.push_back(v[i]);
        got.variance.push_back(v[i + 1]);
      }
      const Predictions ref = gpr_predict_plaintext(run.problem.X, run.problem.y, run.problem.Xs, c.kernel);
      const LossReport loss = loss_metrics(ref, got);
      r["loss_mean"] = loss.loss_mean;
      r["loss_variance"] = loss.loss_variance;
      r["excluded_mean"] = loss.excluded_mean;
      r["excluded_variance"] = loss.excluded_variance;
      r["predictions"] = {{"mean", got.mean}, {"variance", got.variance}};
      r["oracle"] = {{"mean", ref.mean}, {"variance", ref.variance}};
      loss_mean.push_back(loss.loss_mean);
      loss_var.push_back(loss.loss_variance);
    } else {
      json parties = json::array();
      for (int j = 0; j < 2; ++j) {
        const SharedMatrix& s = res.out[static_cast<std::size_t>(j)].predictions;
        json mean = json::array(), var = json::array();
        for (std::size_t i = 0; i < s.rows; ++i) {
          mean.push_back(detail::word_hex(s(i, 0)));
          var.push_back(detail::word_hex(s(i, 1)));
        }
        parties.push_back({{"party", j}, {"mean", mean}, {"variance", var}});
      }
      r["shares"] = parties;
    }
    runs.push_back(std::move(r));
  }
  json report{{"command", "run-gpr"}, {"config", config_json(c)}, {"runs", runs}};
  report["summary"] = {{"loss_mean", detail::mean_std(loss_mean)},
                       {"loss_variance", detail::mean_std(loss_var)},
                       {"construct_seconds", detail::mean_std(t_construct)},
                       {"predict_seconds", detail::mean_std(t_predict)}};
  current_stage() = "done";
  return report;
}

// Captures offline material for one run-gpr session. The request sequence
// depends only on the problem shape, so the session runs on zero inputs of
// the configured shape and the material is later replayed against real data.
inline json gen_offline(RunConfig c) {
  current_stage() = "config";
  if (c.offline_files[0].empty()) c.offline_files = {"offline_s0.bin", "offline_s1.bin"};
  c.validate();
  if (c.seeds.size() != 1) throw ConfigError("gen-offline takes exactly one seed");
  const auto files = c.offline_files;
  c.offline_files = {};
  Problem shape = load_problem(c, c.seeds[0]);
  shape.X.setZero();
  shape.y.setZero();
  shape.Xs.setZero();
  GprRun run = run_gpr_session(c, c.seeds[0], std::move(shape), files);
  json out{{"command", "gen-offline"},
           {"config", config_json(c)},
           {"files", files},
           {"requests", run.session.dealer_requests},
           {"bytes", {run.session.stats[0].offline_bytes_received, run.session.stats[1].offline_bytes_received}}};
  current_stage() = "done";
  return out;
}

// ---- benchmarks ------------------------------------------------------------

inline json bench_exp(const RunConfig& c) {
  current_stage() = "config";
  c.validate();
  const FixedPointCodec codec(c.ring);
  json rows = json::array();
  for (std::size_t n : c.exp_sizes) {
    for (std::uint64_t seed : c.seeds) {
      current_stage() = "share";
      std::mt19937_64 gen(seed);
      std::uniform_real_distribution<double> u(c.protocol.exp.u_min, 0.0);
      std::vector<double> x(n);
      for (auto& v : x) v = u(gen);
      Prg rng(seed, "bench-exp");
      auto [s0, s1] = shr_matrix(codec, n, 1, x, rng);
      const std::array<SharedMatrix, 2> in{std::move(s0), std::move(s1)};
      current_stage() = "session";
      const auto t0 = detail::Clock::now();
      auto res = run_session(c.session_options(seed), [&](Party& P) {
        return pp_exp(P, in[P.id()], ExpRangePolicy::kStrict);
      });
      const double secs = detail::seconds_since(t0);
      current_stage() = "score";
      const auto z = reveal(codec, res.out[0], res.out[1]);
      double err = 0;
      for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(z[i] - std::exp(codec.decode(codec.encode(x[i])))));
      const std::uint64_t bits = res.stats[0].online.bits_sent + res.stats[1].online.bits_sent;
      const std::uint64_t want = 2ull * n * static_cast<std::uint64_t>(c.ring.bits);
      rows.push_back({{"n", n},
                      {"seed", seed},
                      {"rounds", res.stats[0].online.rounds},
                      {"expected_rounds", expected_rounds(RoundProtocol::kPPExp, static_cast<std::int64_t>(n), 0)},
                      {"bits_total", bits},
                      {"expected_bits", want},
                      {"accounting_ok", res.stats[0].online.rounds == 1 && bits == want},
                      {"max_abs_error", err},
                      {"seconds", secs}});
    }
  }
  current_stage() = "done";
  return {{"command", "bench-exp"}, {"config", config_json(c)}, {"rows", rows}};
}

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t k = x.size();
  if (k < 2) return NAN;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  const double kk = static_cast<double>(k);
  return (kk * sxy - sx * sy) / (kk * sxx - sx * sx);
}

struct MatinvSample {
  double loss_mi = 0;
  std::uint64_t rounds = 0;
  std::uint64_t bits_total = 0;
  double seconds = 0;
};

// Inverts K + noise I for an SE gram matrix over X uniform in [-10, 10]^{n x 2}.
inline MatinvSample matinv_sample(const RunConfig& c, std::size_t n, std::uint64_t seed) {
  const FixedPointCodec codec(c.ring);
  std::mt19937_64 gen(seed);
  const Eigen::MatrixXd X = detail::uniform_matrix(gen, static_cast<Eigen::Index>(n), 2, -10, 10);
  Eigen::MatrixXd A = gram_plaintext(X, X, c.kernel);
  A.diagonal().array() += c.kernel.noise_variance;
  std::vector<double> flat(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) flat[i * n + j] = A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  Prg rng(seed, "bench-matinv");
  auto [s0, s1] = shr_matrix(codec, n, n, flat, rng);
  const std::array<SharedMatrix, 2> in{std::move(s0), std::move(s1)};
  const auto t0 = detail::Clock::now();
  auto res = run_session(c.session_options(seed), [&](Party& P) { return pp_matinv(P, in[P.id()]); });
  MatinvSample s;
  s.seconds = detail::seconds_since(t0);
  const auto v = reveal(codec, res.out[0], res.out[1]);
  Eigen::MatrixXd L(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i * n + j];
  s.loss_mi = loss_mi(A, L);
  s.rounds = res.stats[0].online.rounds;
  s.bits_total = res.stats[0].online.bits_sent + res.stats[1].online.bits_sent;
  return s;
}

inline json bench_matinv(const RunConfig& c) {
  current_stage() = "config";
  c.validate();
  json rows = json::array();
  std::vector<double> ns, bits;
  for (std::size_t n : c.matinv_sizes) {
    if (n < 2) throw ConfigError("matinv sizes must be at least 2");
    std::vector<double> losses, secs;
    MatinvSample last;
    for (std::uint64_t seed : c.seeds) {
      current_stage() = "session";
      last = matinv_sample(c, n, seed);
      losses.push_back(last.loss_mi);
      secs.push_back(last.seconds);
    }
    const auto expected = expected_rounds(RoundProtocol::kPPMI, static_cast<std::int64_t>(n),
                                          c.protocol.division.division_rounds());
    if (static_cast<std::int64_t>(last.rounds) != expected) {
      current_stage() = "round-check";
      throw ProtocolError("pp_matinv recorded " + std::to_string(last.rounds) + " rounds at n=" +
                          std::to_string(n) + ", expected " + std::to_string(expected));
    }
    ns.push_back(static_cast<double>(n));
    bits.push_back(static_cast<double>(last.bits_total));
    rows.push_back({{"n", n},
                    {"rounds", last.rounds},
                    {"expected_rounds", expected},
                    {"bits_total", last.bits_total},
                    {"loss_mi", detail::mean_std(losses)},
                    {"seconds", detail::mean_std(secs)}});
  }
  current_stage() = "done";
  return {{"command", "bench-matinv"},
          {"config", config_json(c)},
          {"rows", rows},
          {"volume_exponent", loglog_slope(ns, bits)}};
}

// ---- analysis --------------------------------------------------------------

inline std::string rational_string(const Rational& q) {
  return std::to_string(q.numerator()) + "/" + std::to_string(q.denominator());
}

inline json analyze_leakage(const RunConfig& c, std::int64_t m_u, std::int64_t m_r) {
  current_stage() = "analysis";
  const LeakageReport rep = leakage_enumerate(m_u, m_r);
  // Grid sizes implied by the configured exponentiation parameters.
  const double step = std::ldexp(1.0, -c.ring.frac_bits);
  const double cu = std::floor(-c.protocol.exp.u_min / step) + 1;
  const double cr = 2 * std::floor(c.protocol.exp.r_max / step);
  json configured{{"m_u", cu}, {"m_r", cr}};
  if (cu <= cr) {
    configured["p_secure"] = (cr - cu + 1) / cr;
    configured["expected_leakage"] = (cu + cr - 1) / (cu * cr);
  }
  current_stage() = "done";
  return {{"command", "analyze-leakage"},
          {"m_u", m_u},
          {"m_r", m_r},
          {"p_secure", rational_string(rep.p_secure)},
          {"expected_leakage", rational_string(rep.expected_leakage)},
          {"enumerated_p_secure", rational_string(rep.enumerated_p_secure)},
          {"enumerated_leakage", rational_string(rep.enumerated_leakage)},
          {"enumerated_exact_exposure", rational_string(rep.enumerated_exact_exposure)},
          {"agrees", rep.agrees},
          {"configured", configured}};
}

inline json validate_params(const RunConfig& c) {
  current_stage() = "validate-params";
  c.ring.validate();
  const ExpParamsReport rep = validate_exp_params(c.protocol.exp, c.ring);
  json out{{"command", "validate-params"},
           {"ring_bits", c.ring.bits},
           {"frac_bits", c.ring.frac_bits},
           {"u_min", c.protocol.exp.u_min},
           {"r_max", c.protocol.exp.r_max},
           {"accepted", rep.accepted},
           {"required_frac_bits", rep.required_frac_bits},
           {"underflow_slack_bits", rep.underflow_slack_bits},
           {"overflow_slack_bits", rep.overflow_slack_bits}};
  if (!rep.accepted) out["reason"] = rep.reason;
  return out;
}

}  // namespace ppgpr
