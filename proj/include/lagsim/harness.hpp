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

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lagsim/bonding.hpp"
#include "lagsim/engine.hpp"
#include "lagsim/metrics.hpp"
#include "lagsim/netmodel.hpp"
#include "lagsim/routing.hpp"
#include "lagsim/scenario.hpp"
#include "lagsim/traffic.hpp"

namespace lagsim {

struct Violations {
  uint64_t ordering = 0;
  uint64_t duplicate = 0;
  uint64_t conservation = 0;
  uint64_t loss_mismatch = 0;
  uint64_t voice_additivity = 0;
  uint64_t incomplete_transfers = 0;

  uint64_t total() const {
    return ordering + duplicate + conservation + loss_mismatch + voice_additivity +
           incomplete_transfers;
  }
  Violations& operator+=(const Violations& o);
};

/// Per-conversation tally used by the conservation audit.
struct ConversationAudit {
  std::string label;
  uint64_t originated = 0;
  uint64_t delivered = 0;
  std::array<uint64_t, kDropReasons> drops{};
  uint64_t in_flight = 0;
  bool balanced() const;
};

struct BondSummary {
  std::string name;
  uint64_t tx_frames = 0;
  uint64_t rx_frames = 0;
  size_t active = 0;
  size_t members = 0;
  std::vector<FailoverEvent> failovers;
};

struct RunResult {
  std::string scenario;
  Mode mode = Mode::kBonded;
  uint64_t seed = 0;
  SimTime t0;
  std::vector<QosReport> qos;
  std::vector<DowntimeReport> downtime;
  std::vector<RouteChange> routes;  // changes at or after t0
  std::vector<FlowRecord> flows;
  std::vector<ConversationAudit> audit;
  std::vector<BondSummary> bonds;
  std::array<uint64_t, kDropReasons> drops{};
  Violations violations;
  std::vector<std::string> warnings;
  std::vector<std::string> notes;  // failure injections and similar
};

/// The ring topology plus control plane and flows for one simulation.
///
/// Routers R1..RN form a ring; adjacency i joins R_i and R_(i mod N)+1 on
/// 192.168.i.0 (a bond in BONDED mode, one link otherwise). The server LAN
/// 192.168.10.0 hangs off R1, the client LAN 192.168.30.0 off the opposite
/// router. Each router also has a loopback 10.255.<i>.1.
class World {
 public:
  World(const Scenario& s, uint64_t seed);
  World(const World&) = delete;
  World& operator=(const World&) = delete;

  Scheduler& scheduler() { return sched_; }
  Network& net() { return net_; }
  MetricsCollector& metrics() { return metrics_; }
  const Scenario& scenario() const { return scenario_; }
  Rng& rng() { return rng_; }

  int routers() const { return static_cast<int>(routers_.size()); }
  NodeId router(int i) const { return routers_.at(i - 1).id; }  // 1-based
  NodeId server() const { return server_; }
  NodeId client(int k) const { return clients_.at(k - 1); }  // 1-based
  int server_router() const { return 1; }
  int client_router() const { return 1 + routers() / 2; }

  /// Node name, alias (gw-server, gw-client) or dotted interface address.
  Endpoint endpoint(const std::string& name) const;
  /// Router (1-based) that owns the address, or the router a host hangs off.
  int attached_router(const Endpoint& e) const;

  /// Links of adjacency i (1-based), in member order.
  const std::vector<LinkId>& links(int adjacency) const { return adjacency_.at(adjacency - 1).links; }
  /// The two bond ends of adjacency i; empty in SINGLE_LINK mode.
  std::vector<Bond*> bonds(int adjacency) const;
  std::vector<const Bond*> all_bonds() const;
  RoutingProcess& routing(int i) { return *routers_.at(i - 1).routing; }

  /// Starts LACP, MII polling and routing with seeded phases.
  void start_control_plane();
  bool converged() const;
  /// Runs until converged (or the cap) and returns the next whole second.
  SimTime converge();

  Flow& add_service(const ServiceSpec& spec, SimTime t0, double duration_s);
  void schedule_failure(const FailureSpec& f, SimTime t0);
  /// First adjacency a frame from `from` to `to` crosses, and the router end
  /// it leaves from; empty if the path crosses none.
  struct PathHop {
    int adjacency = 0;
    int from_router = 0;
  };
  std::optional<PathHop> first_adjacency(const Endpoint& from, const Endpoint& to) const;
  /// Link that carries frames for `to` across adjacency hop.from_router side.
  LinkId carrying_link(const PathHop& hop, const Endpoint& to) const;

  const std::vector<std::unique_ptr<Flow>>& flows() const { return flows_; }
  const std::vector<RouteChange>& route_log() const { return route_log_; }

  /// Collects reports and runs the audits; call after the run finished.
  RunResult finalize(SimTime t0);

 private:
  struct RouterInfo {
    NodeId id;
    size_t loopback = 0;
    std::optional<size_t> lan;
    std::vector<std::pair<int, size_t>> adjacency_iface;  // (adjacency, interface)
    std::unique_ptr<RoutingProcess> routing;
  };
  struct Adjacency {
    int a = 0;  // router numbers, 1-based
    int b = 0;
    std::vector<LinkId> links;
    Bond* bond_a = nullptr;
    Bond* bond_b = nullptr;
    size_t iface_a = 0;
    size_t iface_b = 0;
  };

  void build();
  int router_index(NodeId id) const;
  std::optional<size_t> interface_toward(int router, int adjacency) const;

  Scenario scenario_;
  Rng rng_;
  Scheduler sched_;
  Network net_;
  MetricsCollector metrics_;
  std::vector<RouterInfo> routers_;
  std::vector<Adjacency> adjacency_;
  NodeId server_;
  std::vector<NodeId> clients_;
  std::vector<uint32_t> expected_networks_;
  std::vector<std::unique_ptr<Flow>> flows_;
  std::vector<RouteChange> route_log_;
  std::vector<std::string> notes_;
};

/// Builds, converges, runs and finalizes one scenario.
RunResult run(const Scenario& s);
RunResult run(const Scenario& s, Mode mode, uint64_t seed);

// ------------------------------------------------------------------ batch

struct TrialSpec {
  size_t index = 0;
  int observer = 1;  // observer router / network number
  std::string target;
  uint64_t seed = 0;
};

struct TrialResult {
  TrialSpec spec;
  std::string cell;  // "192.168.<i>.0/<target>"
  std::string prober;
  SimTime cut_at;    // relative to t0
  std::string cut;   // description of what was cut
  RunResult run;
  int64_t downtime_us = 0;
  uint64_t timeouts = 0;
};

struct DowntimeCell {
  std::string label;
  int trials = 0;
  uint64_t timeouts = 0;
  Milli mean_ms;
};

struct BatchResult {
  std::string scenario;
  Mode mode = Mode::kBonded;
  uint64_t seed = 0;
  std::vector<TrialResult> trials;
  std::vector<DowntimeCell> cells;
  Milli mean_ms;
  Violations violations;
};

/// Observer networks x targets, trials_per_cell each, in cell-major order.
std::vector<TrialSpec> plan_trials(const Scenario& s, uint64_t seed);
TrialResult run_trial(const Scenario& s, const TrialSpec& t);
/// Trials in parallel (OpenMP); results are identical to the serial version.
BatchResult run_batch(const Scenario& s);
BatchResult run_batch_serial(const Scenario& s);
/// Aggregates trial results (already in plan order) into cells and a mean.
BatchResult summarize(const Scenario& s, std::vector<TrialResult> trials);

// ---------------------------------------------------------------- compare

struct CompareRow {
  std::string service;
  QosReport bonded;
  QosReport single;
  Milli d_delay;
  Milli d_jitter;
  Milli d_throughput;
  Milli d_loss;
};

/// Bonded minus single per service; throws ConfigError on mismatched sets.
std::vector<CompareRow> compare(const RunResult& bonded, const RunResult& single);

// ---------------------------------------------------------------- reports

std::string run_csv(const RunResult& r);
std::string run_summary(const RunResult& r);
std::string batch_csv(const BatchResult& b);
std::string batch_summary(const BatchResult& b);
std::string compare_csv(const std::string& scenario, const std::vector<CompareRow>& rows);

/// Writes <out>/<name>.csv and <out>/<name>.summary.txt; returns the paths.
std::vector<std::string> emit_reports(const RunResult& r, const std::string& out_dir);
std::vector<std::string> emit_reports(const BatchResult& b, const std::string& out_dir);
std::vector<std::string> emit_compare(const std::string& scenario, const RunResult& bonded,
                                      const RunResult& single,
                                      const std::vector<CompareRow>& rows,
                                      const std::string& out_dir);

}  // namespace lagsim
