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

// ppgpr: privacy-preserving Gaussian process regression driver.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ppgpr/app.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::string> scenario, kernel, backend;
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::int64_t m_u = 3, m_r = 5;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "key=value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--scenario", f.scenario, "data sharing scenario")
      ->check(CLI::IsMember({"hds", "vds", "pds"}));
  cmd->add_option("--kernel", f.kernel, "covariance kernel")->check(CLI::IsMember({"se", "matern32"}));
  cmd->add_option("--seed", f.seeds, "seeds, one run each")->delimiter(',');
  cmd->add_option("--backend", f.backend, "transport backend")->check(CLI::IsMember({"inproc", "sockets"}));
  cmd->add_option("--out", f.out, "write the JSON report here instead of stdout");
}

ppgpr::RunConfig resolve_config(const Flags& f) {
  ppgpr::current_stage() = "config";
  std::istringstream empty;
  ppgpr::RunConfig c = f.config.empty() ? ppgpr::parse_config(empty) : ppgpr::load_config(f.config);
  if (f.scenario) c.scenario = ppgpr::parse_scenario(*f.scenario);
  if (f.kernel) c.kernel.kind = ppgpr::parse_kernel(*f.kernel);
  if (f.backend) c.backend = ppgpr::parse_backend(*f.backend);
  if (!f.seeds.empty()) c.seeds = f.seeds;
  return c;
}

void emit(const ppgpr::json& report, const std::string& path) {
  ppgpr::current_stage() = "output";
  if (path.empty()) {
    std::cout << report.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << report.dump(2) << "\n";
  if (!out) throw std::runtime_error("write to " + path + " failed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy-preserving Gaussian process regression over secret shares"};
  app.require_subcommand(1);
  Flags f;
  auto* run = app.add_subcommand("run-gpr", "train and predict on shares, score against plaintext");
  auto* bexp = app.add_subcommand("bench-exp", "accuracy and traffic of secure exponentiation");
  auto* bmi = app.add_subcommand("bench-matinv", "accuracy and traffic of secure matrix inversion");
  auto* leak = app.add_subcommand("analyze-leakage", "enumerate the leakage of masked exponentiation");
  auto* val = app.add_subcommand("validate-params", "check exponentiation parameters against the ring");
  auto* gen = app.add_subcommand("gen-offline", "capture offline material for a later run-gpr");
  for (auto* cmd : {run, bexp, bmi, leak, val, gen}) add_common(cmd, f);
  leak->add_option("--mu", f.m_u, "grid size of the input range")->check(CLI::PositiveNumber);
  leak->add_option("--mr", f.m_r, "grid size of the mask range")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    const ppgpr::RunConfig c = resolve_config(f);
    ppgpr::json report;
    if (run->parsed()) {
      report = ppgpr::run_gpr(c);
    } else if (bexp->parsed()) {
      report = ppgpr::bench_exp(c);
    } else if (bmi->parsed()) {
      report = ppgpr::bench_matinv(c);
    } else if (leak->parsed()) {
      report = ppgpr::analyze_leakage(c, f.m_u, f.m_r);
    } else if (val->parsed()) {
      report = ppgpr::validate_params(c);
    } else if (gen->parsed()) {
      report = ppgpr::gen_offline(c);
    }
    emit(report, f.out);
    if (val->parsed() && !report.at("accepted").get<bool>()) {
      std::cerr << "ppgpr: stage validate-params: rejected: " << report.at("reason").get<std::string>() << "\n";
      return 3;
    }
    return 0;
  } catch (const std::exception& e) {
    std::string stage = ppgpr::current_stage();
    const auto& failure = ppgpr::last_session_failure();
    if (stage == "session" && failure) stage += " " + failure->stage + " (" + failure->party + ")";
    std::cerr << "ppgpr: stage " << stage << ": " << e.what() << "\n";
    return 2;
  }
}
