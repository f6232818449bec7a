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

#include <string>

#include "lagsim/scenario.hpp"

using namespace lagsim;

namespace {

std::string error_of(const std::string& yaml) {
  try {
    parse_scenario(yaml, "t.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("empty document gives defaults") {
  Scenario s = parse_scenario("");
  CHECK(s.name == "default");
  CHECK(s.mode == Mode::kBonded);
  CHECK(s.topology.routers == 4);
  CHECK(s.topology.bond_members == 2);
  CHECK(s.topology.link_speed_bps == 100'000'000);
  CHECK(s.mii.poll_interval_ms == 100);
  CHECK(s.mii.downdelay_ms == 300);
  CHECK(s.batch.trials_per_cell == 3);
  CHECK(s.batch.targets.size() == 4);
}

TEST_CASE("absent services means the three defaults") {
  Scenario s = parse_scenario("name: x\n");
  REQUIRE(s.services.size() == 3);
  CHECK(s.services[0].type == ServiceType::kVideo);
  CHECK(s.services[1].type == ServiceType::kVoice);
  CHECK(s.services[2].type == ServiceType::kData);
  // explicitly empty list keeps it empty
  CHECK(parse_scenario("services: []\n").services.empty());
}

TEST_CASE("full document round trip") {
  Scenario s = parse_scenario(R"(
name: t
seed: 42
duration_s: 50
mode: SINGLE_LINK
policy: ROUND_ROBIN
topology: {routers: 5, bond_members: 3, propagation_us: 7}
mii: {poll_interval_ms: 50, updelay_ms: 0, downdelay_ms: 100}
routing: {hello_interval_s: 10, dead_interval_s: 40, detection_mode: CARRIER_TRIGGERED}
services:
  - {type: data, src: server, dst: client1, total_bytes: 1000000, min_rto_us: 30000}
  - {type: probe, name: p, src: client1, dst: server}
failures:
  - {target: bond2, action: CUT, at_s: 20}
  - {target: bond2, member: 0, action: RESTORE, at_s: 30}
batch: {cut: DUAL, trials_per_cell: 2}
)");
  CHECK(s.name == "t");
  CHECK(s.seed == 42);
  CHECK(s.mode == Mode::kSingleLink);
  CHECK(s.policy == DistributionPolicy::kRoundRobin);
  CHECK(s.topology.routers == 5);
  CHECK(s.topology.bond_members == 3);
  CHECK(s.topology.propagation_us == 7);
  CHECK(s.mii.poll_interval_ms == 50);
  CHECK(s.routing.detection_mode == DetectionMode::kCarrierTriggered);
  REQUIRE(s.services.size() == 2);
  CHECK(s.services[0].data.total_bytes == 1'000'000);
  CHECK(s.services[0].data.min_rto_us == 30'000);
  CHECK(s.services[1].name == "p");
  REQUIRE(s.failures.size() == 2);
  CHECK_FALSE(s.failures[0].member.has_value());
  CHECK(s.failures[1].member == 0);
  CHECK(s.failures[1].action == FailureAction::kRestore);
  CHECK(s.batch.cut == CutKind::kDual);
  CHECK(s.batch.trials_per_cell == 2);
}

TEST_CASE("unknown keys are rejected with their line") {
  std::string e = error_of("name: x\nseed: 1\nbogus: 3\n");
  CHECK(contains(e, "bogus"));
  CHECK(contains(e, "line 3"));
  CHECK(contains(e, "t.yaml"));

  e = error_of("topology:\n  routers: 4\n  speed: 9\n");
  CHECK(contains(e, "speed"));
  CHECK(contains(e, "line 3"));

  // a field valid for another service type is still unknown here
  e = error_of("services:\n  - {type: voice, src: server, dst: client1, total_bytes: 5}\n");
  CHECK(contains(e, "total_bytes"));
}

TEST_CASE("value errors") {
  CHECK(contains(error_of("seed: banana\n"), "seed"));
  CHECK(contains(error_of("mode: HALF\n"), "unknown mode"));
  CHECK(contains(error_of("policy: XOR\n"), "unknown policy"));
  CHECK(contains(error_of("duration_s: 0\n"), "duration_s"));
  CHECK(contains(error_of("topology: {routers: 2}\n"), "routers"));
  CHECK(contains(error_of("batch: {cut: TRIPLE}\n"), "cut kind"));
  CHECK(contains(error_of("name: [\n"), "parse error"));
}

TEST_CASE("failure beyond the run is an error") {
  std::string e = error_of("duration_s: 30\nfailures:\n  - {target: bond1, at_s: 31}\n");
  CHECK(contains(e, "exceeds duration_s"));
  CHECK(error_of("duration_s: 30\nfailures:\n  - {target: bond1, at_s: 30}\n").empty());
}

TEST_CASE("service validation") {
  CHECK(contains(error_of("services:\n  - {type: video, src: server, dst: server}\n"),
                 "must differ"));
  CHECK(contains(error_of("services:\n  - {type: video, name: a, src: server, dst: client1}\n"
                          "  - {type: voice, name: a, src: server, dst: client2}\n"),
                 "duplicate"));
  CHECK(contains(error_of("services:\n  - {type: video, src: server, dst: client1, start_s: 40}\n"),
                 "start_s"));
  CHECK(contains(error_of("services:\n  - {type: probe, src: client1, dst: server, "
                          "interval_ms: 20, timeout_ms: 30}\n"),
                 "timeout_ms"));
  CHECK(contains(error_of("services:\n  - {type: data, src: server, dst: client1, "
                          "min_rto_us: 2000000}\n"),
                 "min_rto_us"));
}

TEST_CASE("single-member bond warns but loads") {
  Scenario s = parse_scenario("topology: {bond_members: 1}\n");
  bool found = false;
  for (const auto& w : s.warnings) found |= contains(w, "one member");
  CHECK(found);
  // not a bond at all in single-link mode
  Scenario t = parse_scenario("mode: SINGLE_LINK\ntopology: {bond_members: 1}\n");
  for (const auto& w : t.warnings) CHECK_FALSE(contains(w, "one member"));
}

TEST_CASE("mode spellings") {
  CHECK(parse_mode("BONDED") == Mode::kBonded);
  CHECK(parse_mode("bonded") == Mode::kBonded);
  CHECK(parse_mode("SINGLE_LINK") == Mode::kSingleLink);
  CHECK(parse_mode("single") == Mode::kSingleLink);
  CHECK_THROWS_AS(parse_mode("dual"), ConfigError);
}

TEST_CASE("shipped scenarios load") {
  for (const char* f : {"default", "failover_single", "failover_dual", "failover_dual_carrier",
                        "qos_concurrent", "qos_sequential"}) {
    CAPTURE(f);
    CHECK_NOTHROW(load_scenario(std::string("scenarios/") + f + ".yaml"));
  }
  CHECK_THROWS_AS(load_scenario("scenarios/does_not_exist.yaml"), ConfigError);
}
