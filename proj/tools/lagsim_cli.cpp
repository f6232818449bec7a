// Copyright 2026 The lagsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// lagsim: run bonding failover and QoS scenarios from the command line.
//
// Exit codes: 0 ok, 1 usage/config/run error, 2 invariant violations.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "lagsim/harness.hpp"
#include "lagsim/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitViolations = 2;

struct Options {
  std::string scenario;
  std::optional<uint64_t> seed;
  std::string out = "out";
  std::optional<int> trials;
  std::string mode;
  bool serial = false;
};

lagsim::Scenario load(const Options& o) {
  lagsim::Scenario s = lagsim::load_scenario(o.scenario);
  if (o.seed) s.seed = *o.seed;
  if (!o.mode.empty()) s.mode = lagsim::parse_mode(o.mode);
  if (o.trials) {
    if (*o.trials < 1) throw lagsim::ConfigError("--trials must be >= 1");
    s.batch.trials_per_cell = *o.trials;
  }
  for (const auto& w : s.warnings) std::cerr << "warning: " << w << "\n";
  return s;
}

void print_paths(const std::vector<std::string>& paths) {
  for (const auto& p : paths) std::cout << "wrote " << p << "\n";
}

int finish(uint64_t violations) {
  if (violations == 0) return kExitOk;
  std::cerr << "invariant violations: " << violations << " (see summary)\n";
  return kExitViolations;
}

int cmd_run(const Options& o) {
  const auto s = load(o);
  const auto r = lagsim::run(s);
  print_paths(lagsim::emit_reports(r, o.out));
  for (const auto& q : r.qos)
    std::printf("%-12s delay %s ms  jitter %s ms  throughput %s Mb/s  loss %s %%\n",
                q.service.c_str(), q.delay_ms.str().c_str(), q.jitter_ms.str().c_str(),
                q.throughput_mbps.str().c_str(), q.loss_pct.str().c_str());
  for (const auto& d : r.downtime)
    std::printf("downtime %s: %s ms\n", d.label.c_str(),
                lagsim::Milli::ratio(d.total_us(), 1).str().c_str());
  return finish(r.violations.total());
}

int cmd_batch(const Options& o) {
  const auto s = load(o);
  const auto b = o.serial ? lagsim::run_batch_serial(s) : lagsim::run_batch(s);
  print_paths(lagsim::emit_reports(b, o.out));
  for (const auto& c : b.cells) std::printf("%-28s %s ms\n", c.label.c_str(), c.mean_ms.str().c_str());
  std::printf("%-28s %s ms\n", "mean", b.mean_ms.str().c_str());
  return finish(b.violations.total());
}

int cmd_compare(const Options& o) {
  const auto s = load(o);
  const auto bonded = lagsim::run(s, lagsim::Mode::kBonded, s.seed);
  const auto single = lagsim::run(s, lagsim::Mode::kSingleLink, s.seed);
  const auto rows = lagsim::compare(bonded, single);
  print_paths(lagsim::emit_compare(s.name, bonded, single, rows, o.out));
  std::printf("%-12s %12s %12s %12s %12s\n", "service", "d_delay", "d_jitter", "d_thruput",
              "d_loss");
  for (const auto& r : rows)
    std::printf("%-12s %12s %12s %12s %12s\n", r.service.c_str(), r.d_delay.str().c_str(),
                r.d_jitter.str().c_str(), r.d_throughput.str().c_str(), r.d_loss.str().c_str());
  return finish(bonded.violations.total() + single.violations.total());
}

int cmd_validate(const Options& o) {
  const auto s = load(o);
  std::printf("%s: ok (mode %s, %zu services, %zu failures, duration %.3f s)\n",
              o.scenario.c_str(), lagsim::to_string(s.mode), s.services.size(),
              s.failures.size(), s.duration_s);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lagsim: link-bonding failover and QoS simulator"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool with_out) {
    sub->add_option("--scenario", o.scenario, "scenario file (YAML)")->required();
    sub->add_option("--seed", o.seed, "override the scenario seed");
    sub->add_option("--mode", o.mode, "bonded|single")
        ->check(CLI::IsMember({"bonded", "single", "BONDED", "SINGLE_LINK"}));
    if (with_out) sub->add_option("--out", o.out, "output directory")->capture_default_str();
  };
  auto* run = app.add_subcommand("run", "run one scenario and write reports");
  common(run, true);
  auto* batch = app.add_subcommand("batch", "run the failover trial grid");
  common(batch, true);
  batch->add_option("--trials", o.trials, "trials per cell");
  batch->add_flag("--serial", o.serial, "use the serial reference instead of the parallel runner");
  auto* cmp = app.add_subcommand("compare", "run bonded and single-link and compare");
  common(cmp, true);
  auto* val = app.add_subcommand("validate", "check a scenario file");
  common(val, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitError;
  }

  try {
    if (*run) return cmd_run(o);
    if (*batch) return cmd_batch(o);
    if (*cmp) return cmd_compare(o);
    if (*val) return cmd_validate(o);
  } catch (const lagsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
