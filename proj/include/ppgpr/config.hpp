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

// Run configuration read from a flat key=value file.
//
//   # ring and fixed point
//   ring_bits = 128
//   frac_bits = 26
//   kernel = se                 # se | matern32
//   length_scale = 1.0
//
// Every key is optional. Unknown keys are rejected.

#pragma once

#include <boost/program_options.hpp>

#include <charconv>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ppgpr/analysis.hpp"
#include "ppgpr/dataset.hpp"
#include "ppgpr/errors.hpp"
#include "ppgpr/gpr.hpp"
#include "ppgpr/session.hpp"

namespace ppgpr {

struct RunConfig {
  RingParams ring{};
  ProtocolConfig protocol{};
  KernelConfig kernel{};
  Scenario scenario = Scenario::kHDS;
  std::size_t owners = 2;

  Backend backend = Backend::kInProc;
  std::string host = "127.0.0.1";
  int base_port = 0;
  double timeout_seconds = 600;

  std::vector<std::uint64_t> seeds{1};

  // Input data. An empty path selects a synthetic regression problem.
  std::string dataset;
  CsvSchema schema{};
  std::size_t train_size = 80;
  std::size_t test_size = 20;
  std::size_t synthetic_dim = 2;

  // Reveal predictions to the orchestrator and score them. When false only
  // the per-party shares are written out.
  bool reveal = true;

  std::vector<std::size_t> exp_sizes{1000, 10000};
  std::vector<std::size_t> matinv_sizes{8, 16, 32, 64};

  // Offline material files for replay (both set) or capture (gen-offline).
  std::array<std::string, 2> offline_files{};

  void validate() const {
    ring.validate();
    require_valid_exp_params(protocol.exp, ring);
    protocol.division.validate();
    kernel.validate();
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (train_size == 0 || test_size == 0) throw ConfigError("train_size and test_size must be positive");
    if (owners == 0) throw ConfigError("owners must be positive");
    if (offline_files[0].empty() != offline_files[1].empty()) {
      throw ConfigError("offline_s0 and offline_s1 must be set together");
    }
  }

  SessionOptions session_options(std::uint64_t seed) const {
    SessionOptions o;
    o.ring = ring;
    o.protocol = protocol;
    o.dealer_seed = seed;
    o.backend = backend;
    o.host = host;
    o.base_port = base_port;
    o.offline_files = offline_files;
    o.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(timeout_seconds * 1000));
    return o;
  }
};

namespace detail {

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    T v{};
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || p != item.data() + item.size()) {
      throw ConfigError(key + ": '" + item + "' is not a valid list entry");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

}  // namespace detail

inline KernelKind parse_kernel(const std::string& s) {
  if (s == "se") return KernelKind::kSquaredExponential;
  if (s == "matern32") return KernelKind::kMatern32;
  throw ConfigError("unknown kernel '" + s + "' (expected se or matern32)");
}

inline Backend parse_backend(const std::string& s) {
  if (s == "inproc") return Backend::kInProc;
  if (s == "sockets") return Backend::kSockets;
  throw ConfigError("unknown backend '" + s + "' (expected inproc or sockets)");
}

inline ExpRangePolicy parse_exp_policy(const std::string& s) {
  if (s == "strict") return ExpRangePolicy::kStrict;
  if (s == "clamp") return ExpRangePolicy::kClamp;
  throw ConfigError("unknown exp_policy '" + s + "' (expected strict or clamp)");
}

inline RunConfig parse_config(std::istream& in) {
  namespace po = boost::program_options;
  RunConfig c;
  c.protocol.exp.policy = ExpRangePolicy::kClamp;
  std::string kernel = "se", scenario = "hds", backend = "inproc", policy = "clamp",
              normalization = "zscore", seeds = "1", exp_sizes = "1000,10000",
              matinv_sizes = "8,16,32,64", header = "true", reveal = "true", delimiter = ",";

  po::options_description d;
  d.add_options()
      ("ring_bits", po::value(&c.ring.bits))
      ("frac_bits", po::value(&c.ring.frac_bits))
      ("exp_u_min", po::value(&c.protocol.exp.u_min))
      ("exp_r_max", po::value(&c.protocol.exp.r_max))
      ("exp_mask_frac_bits", po::value(&c.protocol.exp.mask_frac_bits))
      ("exp_public_frac_bits", po::value(&c.protocol.exp.public_frac_bits))
      ("exp_policy", po::value(&policy))
      ("div_domain_lo", po::value(&c.protocol.division.domain_lo))
      ("div_domain_hi", po::value(&c.protocol.division.domain_hi))
      ("div_goldschmidt_steps", po::value(&c.protocol.division.goldschmidt_steps))
      ("div_newton_steps", po::value(&c.protocol.division.newton_steps))
      ("sqrt_domain_hi", po::value(&c.protocol.sqrt.domain_hi))
      ("sqrt_iterations", po::value(&c.protocol.sqrt.iterations))
      ("kernel", po::value(&kernel))
      ("length_scale", po::value(&c.kernel.length_scale))
      ("signal_variance", po::value(&c.kernel.signal_variance))
      ("noise_variance", po::value(&c.kernel.noise_variance))
      ("scenario", po::value(&scenario))
      ("owners", po::value(&c.owners))
      ("backend", po::value(&backend))
      ("host", po::value(&c.host))
      ("base_port", po::value(&c.base_port))
      ("timeout_seconds", po::value(&c.timeout_seconds))
      ("seeds", po::value(&seeds))
      ("dataset", po::value(&c.dataset))
      ("header", po::value(&header))
      ("output_column", po::value(&c.schema.output_column))
      ("delimiter", po::value(&delimiter))
      ("normalization", po::value(&normalization))
      ("train_size", po::value(&c.train_size))
      ("test_size", po::value(&c.test_size))
      ("synthetic_dim", po::value(&c.synthetic_dim))
      ("reveal", po::value(&reveal))
      ("exp_sizes", po::value(&exp_sizes))
      ("matinv_sizes", po::value(&matinv_sizes))
      ("offline_s0", po::value(&c.offline_files[0]))
      ("offline_s1", po::value(&c.offline_files[1]));

  try {
    po::variables_map vm;
    po::store(po::parse_config_file(in, d, false), vm);
    po::notify(vm);
  } catch (const po::error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  c.kernel.kind = parse_kernel(kernel);
  c.scenario = parse_scenario(scenario);
  c.backend = parse_backend(backend);
  c.protocol.exp.policy = parse_exp_policy(policy);
  c.schema.normalization = parse_normalization(normalization);
  c.schema.header = detail::parse_bool("header", header);
  if (delimiter.size() != 1) throw ConfigError("delimiter must be a single character");
  c.schema.delimiter = delimiter[0];
  c.reveal = detail::parse_bool("reveal", reveal);
  c.seeds = detail::parse_list<std::uint64_t>("seeds", seeds);
  c.exp_sizes = detail::parse_list<std::size_t>("exp_sizes", exp_sizes);
  c.matinv_sizes = detail::parse_list<std::size_t>("matinv_sizes", matinv_sizes);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in);
}

}  // namespace ppgpr
