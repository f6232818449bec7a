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

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lagsim/bonding.hpp"
#include "lagsim/routing.hpp"
#include "lagsim/traffic.hpp"

namespace lagsim {

/// Bad scenario file or option. Maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode : uint8_t { kBonded, kSingleLink };
const char* to_string(Mode m);
Mode parse_mode(const std::string& s);  // BONDED|SINGLE_LINK, also bonded|single

struct TopologySpec {
  int routers = 4;
  int bond_members = 2;
  int64_t link_speed_bps = 100'000'000;
  int64_t propagation_us = 5;
  uint32_t queue_capacity_frames = 100;
  int64_t forward_capacity_fps = 20'000;
  int clients = 2;
  int64_t lan_speed_bps = 100'000'000;
};

enum class ServiceType : uint8_t { kVoice, kVideo, kData, kProbe, kCbr };
const char* to_string(ServiceType t);

struct ServiceSpec {
  ServiceType type = ServiceType::kVideo;
  std::string name;
  std::string src;
  std::string dst;
  double start_s = 0.0;
  std::optional<double> stop_s;  // default: duration
  VoipFlowSpec voice;
  VideoFlowSpec video;
  DataFlowSpec data;
  ProbeSpec probe;
  CbrFlowSpec cbr;
};

enum class FailureAction : uint8_t { kCut, kRestore };

struct FailureSpec {
  std::string target;             // bond<i>
  std::optional<int> member;      // empty: every member
  FailureAction action = FailureAction::kCut;
  double at_s = 0.0;
};

enum class CutKind : uint8_t { kSingle, kDual };

/// Failover batch: the measurement grid of observer networks x targets.
struct BatchSpec {
  CutKind cut = CutKind::kSingle;
  double cut_at_s = 15.0;
  int64_t cut_jitter_ms = 1000;  // cut phase drawn uniformly from [0, jitter)
  int trials_per_cell = 3;
  std::vector<std::string> targets = {"server", "gw-server", "client1", "gw-client"};
};

struct Scenario {
  std::string name = "default";
  uint64_t seed = 1;
  double duration_s = 30.0;
  double drain_s = 2.0;
  Mode mode = Mode::kBonded;
  DistributionPolicy policy = DistributionPolicy::kDestMacModN;
  TopologySpec topology;
  MiiConfig mii{100, 0, 300};
  LacpConfig lacp;
  RoutingConfig routing;
  std::vector<ServiceSpec> services;
  std::vector<FailureSpec> failures;
  BatchSpec batch;
  double convergence_cap_s = 60.0;
  std::vector<std::string> warnings;
};

/// The three services running concurrently for the whole duration.
std::vector<ServiceSpec> default_services();

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& yaml_text, const std::string& origin = "<string>");
/// Semantic checks; throws ConfigError, appends warnings.
void validate(Scenario& s);

}  // namespace lagsim
