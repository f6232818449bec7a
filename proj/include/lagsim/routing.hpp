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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lagsim/netmodel.hpp"

namespace lagsim {

enum class DetectionMode : uint8_t { kDeadInterval, kCarrierTriggered };
const char* to_string(DetectionMode m);

struct RoutingConfig {
  int64_t hello_interval_s = 10;
  int64_t dead_interval_s = 40;
  int64_t spf_delay_ms = 200;
  DetectionMode detection_mode = DetectionMode::kDeadInterval;

  void validate() const;  // throws SimulationError
};

/// One adjacency or stub entry of a link-state advertisement. Stub entries
/// (attached networks) have no neighbour.
struct LsaLink {
  std::optional<NodeId> neighbor;
  uint32_t network = 0;
  uint32_t cost = 1;
  auto operator<=>(const LsaLink&) const = default;
};

struct Lsa {
  NodeId origin;
  uint64_t seq = 0;
  std::vector<LsaLink> links;
};

struct HelloPayload : ControlPayload {
  NodeId router;
};

struct LsaPayload : ControlPayload {
  Lsa lsa;
};

struct RouteChange {
  SimTime at;
  std::string router;
  uint32_t network = 0;
  std::optional<std::string> old_next_hop;  // "connected" for attached networks
  std::optional<std::string> new_next_hop;
};

/// Shortest paths from `self` over a link-state database. Adjacencies count
/// only when both ends advertise each other; equal-cost ties go to the lowest
/// first-hop neighbour id. The result maps network -> (first hop, cost);
/// first hop is empty for networks `self` advertises itself.
struct SpfEntry {
  std::optional<NodeId> first_hop;
  uint32_t cost = 0;
  auto operator<=>(const SpfEntry&) const = default;
};
std::map<uint32_t, SpfEntry> shortest_paths(NodeId self, const std::map<uint32_t, Lsa>& db);

/// Link-state routing on one router: hello/dead neighbour detection, LSA
/// flooding and delayed SPF that installs the node's route table.
class RoutingProcess {
 public:
  RoutingProcess(Network& net, Node& router, RoutingConfig config,
                 std::vector<RouteChange>& log);
  RoutingProcess(const RoutingProcess&) = delete;
  RoutingProcess& operator=(const RoutingProcess&) = delete;

  /// Starts periodic hellos; interface i ticks first at now + phases[i].
  void start(const std::vector<SimTime>& phases);

  void hello_tick(size_t iface);
  /// Applies the expiry rule now; returns neighbours that expired.
  std::vector<NodeId> neighbor_check();
  void spf();

  const std::map<uint32_t, Lsa>& database() const { return db_; }
  std::optional<NodeId> neighbor_on(size_t iface) const;
  uint64_t spf_runs() const { return spf_runs_; }
  uint64_t lsa_originations() const { return originations_; }
  const Node& router() const { return router_; }

 private:
  struct Neighbor {
    NodeId id;
    SimTime last_seen;
    EventHandle expiry = 0;
  };

  void on_frame(size_t iface, const Frame& f);
  void on_hello(size_t iface, NodeId from);
  void on_lsa(size_t iface, const Lsa& lsa);
  void on_carrier(size_t iface, bool up);
  void expire(size_t iface);
  void originate_lsa();
  void send_hello(size_t iface);
  void send_lsa(size_t iface, const Lsa& lsa);
  void flood(const Lsa& lsa, std::optional<size_t> except);
  void schedule_spf();
  bool point_to_point(size_t iface) const;

  Network& net_;
  Node& router_;
  RoutingConfig config_;
  std::vector<RouteChange>& log_;
  uint32_t conversation_;
  std::map<size_t, Neighbor> neighbors_;  // keyed by interface
  std::map<uint32_t, Lsa> db_;            // keyed by origin router
  uint64_t own_seq_ = 0;
  bool spf_pending_ = false;
  uint64_t spf_runs_ = 0;
  uint64_t originations_ = 0;
};

}  // namespace lagsim
