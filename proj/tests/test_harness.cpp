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


#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "lagsim/harness.hpp"

using namespace lagsim;

namespace {

Scenario small(const std::string& extra = "") {
  return parse_scenario(R"(
name: small
seed: 11
duration_s: 6
drain_s: 1
services:
  - {type: video, src: server, dst: client1}
  - {type: voice, src: server, dst: client2}
  - {type: data, src: server, dst: client1, total_bytes: 5000000}
  - {type: probe, name: probe, src: client1, dst: server}
)" + extra);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream b;
  b << in.rdbuf();
  return b.str();
}

// Lines of one [section], header excluded.
std::vector<std::string> section(const std::string& csv, const std::string& name) {
  std::vector<std::string> out;
  std::istringstream in(csv);
  std::string line;
  bool on = false, header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '[') {
      on = line == "[" + name + "]";
      header = on;
      continue;
    }
    if (!on || line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    out.push_back(line);
  }
  return out;
}

}  // namespace

TEST_CASE("same seed, same bytes") {
  const Scenario s = small("failures:\n  - {target: bond1, member: 0, at_s: 3}\n");
  const std::string a = run_csv(run(s));
  const std::string b = run_csv(run(s));
  CHECK(a == b);
  const std::string c = run_csv(run(s, s.mode, s.seed + 1));
  CHECK(a != c);
}

TEST_CASE("csv layout") {
  const std::string csv = run_csv(run(small()));
  CHECK(csv.find("[downtime]\nscenario,mode,label,trials,timeouts,downtime_ms\n") !=
        std::string::npos);
  CHECK(csv.find("[qos]\nscenario,mode,service,delay_ms,jitter_ms,throughput_mbps,loss_pct\n") !=
        std::string::npos);
  CHECK(csv.find("[routes]\n") != std::string::npos);
  CHECK(csv.find("[flows]\n") != std::string::npos);
  const auto qos = section(csv, "qos");
  CHECK(qos.size() == 4);  // video, voice_down, voice_up, data
  for (const auto& row : qos) {
    CAPTURE(row);
    CHECK(std::count(row.begin(), row.end(), ',') == 6);
    // every numeric field has exactly three decimals
    std::istringstream f(row);
    std::string cell;
    for (int i = 0; i < 7 && std::getline(f, cell, ','); ++i) {
      if (i < 3) continue;
      const auto dot = cell.find('.');
      REQUIRE(dot != std::string::npos);
      CHECK(cell.size() - dot - 1 == 3);
    }
  }
}

TEST_CASE("healthy run: conservation and no violations") {
  for (Mode m : {Mode::kBonded, Mode::kSingleLink}) {
    const Scenario s = small();
    const RunResult r = run(s, m, s.seed);
    CHECK(r.violations.total() == 0);
    REQUIRE_FALSE(r.audit.empty());
    for (const auto& a : r.audit) {
      CAPTURE(a.label);
      CHECK(a.balanced());
      const uint64_t dropped = std::accumulate(a.drops.begin(), a.drops.end(), uint64_t{0});
      CHECK(a.originated == a.delivered + dropped + a.in_flight);
    }
    for (const auto& q : r.qos) {
      CAPTURE(q.service);
      CHECK(q.loss_pct.thousandths == 0);
    }
  }
}

TEST_CASE("member cut: losses are tallied, conservation still holds") {
  const RunResult r = run(small("failures:\n  - {target: bond1, member: 0, at_s: 3}\n"));
  CHECK(r.violations.total() == 0);
  for (const auto& a : r.audit) CHECK(a.balanced());
  REQUIRE(r.downtime.size() == 1);
  const int64_t d = r.downtime[0].total_us();
  CHECK(d % 20'000 == 0);
  CHECK(d <= 600'000);
}

TEST_CASE("compare: identical runs give zero deltas") {
  const RunResult a = run(small());
  const auto rows = compare(a, a);
  REQUIRE(rows.size() == a.qos.size());
  for (const auto& r : rows) {
    CHECK(r.d_delay.thousandths == 0);
    CHECK(r.d_jitter.thousandths == 0);
    CHECK(r.d_throughput.thousandths == 0);
    CHECK(r.d_loss.thousandths == 0);
  }
}

TEST_CASE("compare: mismatched service sets are rejected") {
  const RunResult a = run(small());
  RunResult b = a;
  b.qos.pop_back();
  CHECK_THROWS_AS(compare(a, b), ConfigError);
  b = a;
  b.qos.back().service = "other";
  CHECK_THROWS_AS(compare(a, b), ConfigError);
}

TEST_CASE("compare: deltas are bonded minus single") {
  const Scenario s = small();
  const RunResult b = run(s, Mode::kBonded, s.seed);
  const RunResult l = run(s, Mode::kSingleLink, s.seed);
  for (const auto& r : compare(b, l)) {
    CAPTURE(r.service);
    CHECK(r.d_delay.thousandths == r.bonded.delay_ms.thousandths - r.single.delay_ms.thousandths);
    CHECK(r.d_jitter.thousandths ==
          r.bonded.jitter_ms.thousandths - r.single.jitter_ms.thousandths);
  }
}

TEST_CASE("trial plan shape") {
  Scenario s = small();
  s.batch.cut_at_s = 3;
  s.batch.trials_per_cell = 2;
  const auto plan = plan_trials(s, 5);
  REQUIRE(plan.size() == 4 * 4 * 2);
  std::set<uint64_t> seeds;
  std::set<std::pair<int, std::string>> cells;
  for (size_t i = 0; i < plan.size(); ++i) {
    CHECK(plan[i].index == i);
    CHECK(plan[i].seed == derive_seed(5, i));
    seeds.insert(plan[i].seed);
    cells.insert({plan[i].observer, plan[i].target});
  }
  CHECK(seeds.size() == plan.size());
  CHECK(cells.size() == 16);
  CHECK(plan_trials(s, 5)[7].seed == plan[7].seed);
  s.batch.cut_at_s = s.duration_s;
  CHECK_THROWS_AS(plan_trials(s, 5), ConfigError);
}

TEST_CASE("batch: parallel equals serial, mean is the mean of trials") {
  Scenario s = small();
  s.services.erase(std::remove_if(s.services.begin(), s.services.end(),
                                  [](const ServiceSpec& v) { return v.type == ServiceType::kData; }),
                   s.services.end());
  s.batch.cut_at_s = 3;
  s.batch.trials_per_cell = 1;
  const BatchResult par = run_batch(s);
  const BatchResult ser = run_batch_serial(s);
  CHECK(batch_csv(par) == batch_csv(ser));
  REQUIRE(par.trials.size() == 16);
  REQUIRE(par.cells.size() == 16);
  int64_t sum = 0;
  for (const auto& t : par.trials) {
    CHECK(t.downtime_us > 0);
    CHECK(t.downtime_us % 20'000 == 0);
    sum += t.downtime_us;
  }
  CHECK(par.mean_ms.thousandths == Milli::ratio(sum, 16).thousandths);
  CHECK(par.violations.total() == 0);
}

TEST_CASE("reports land on disk") {
  const auto dir = std::filesystem::temp_directory_path() / "lagsim_test_reports";
  std::filesystem::remove_all(dir);
  const RunResult r = run(small());
  const auto paths = emit_reports(r, dir.string());
  REQUIRE(paths.size() == 2);
  for (const auto& p : paths) CHECK(std::filesystem::exists(p));
  CHECK(slurp(paths[0]) == run_csv(r));
  std::filesystem::remove_all(dir);
}
