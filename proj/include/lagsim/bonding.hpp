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
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lagsim/lacp.hpp"
#include "lagsim/netmodel.hpp"

namespace lagsim {

enum class DistributionPolicy : uint8_t { kDestMacModN, kRoundRobin };
const char* to_string(DistributionPolicy p);

struct MiiConfig {
  int64_t poll_interval_ms = 100;
  int64_t updelay_ms = 0;
  int64_t downdelay_ms = 0;

  /// Rounds the delays up to whole poll intervals; returns a warning per change.
  std::vector<std::string> normalize();
};

/// Order/duplicate checker for one collector. Never filters traffic.
class ConversationLedger {
 public:
  void observe(const Frame& f);
  uint64_t ordering_violations() const { return ordering_; }
  uint64_t duplicate_violations() const { return duplicates_; }

 private:
  std::unordered_map<uint32_t, uint64_t> last_seq_;
  std::unordered_set<uint64_t> delivered_ids_;
  uint64_t ordering_ = 0;
  uint64_t duplicates_ = 0;
};

struct MiiTransition {
  PortId port;
  bool up = false;
};

struct FailoverEvent {
  SimTime at;
  PortId port;
  bool up = false;
  size_t active_after = 0;
};

/// One end of an 802.3ad bond: MII link monitor, LACP selection, frame
/// distributor and collector, exposed to the node as a single interface.
class Bond : public Interface {
 public:
  Bond(Network& net, std::string name, std::vector<PortId> members, MiiConfig mii,
       DistributionPolicy policy, SystemId system, AggKey key, LacpConfig lacp = {});

  /// Starts MII polling at now + poll_phase and LACP with per-member offsets.
  void start(SimTime poll_phase, const std::vector<SimTime>& lacp_offsets);

  bool carrier_up() const override { return !active_.empty(); }
  void send(Frame&& f, NetAddress) override { bond_transmit(std::move(f)); }
  MacAddress mac() const override { return mac_; }
  std::string describe() const override { return name_; }
  bool point_to_point() const override { return true; }

  std::vector<MiiTransition> mii_poll();
  PortId select_tx_port(const Frame& f);
  void bond_transmit(Frame&& f);
  void bond_collect(PortId port, Frame&& f);

  const std::string& name() const { return name_; }
  const std::vector<PortId>& members() const { return members_; }
  const std::vector<PortId>& active() const { return active_; }
  bool mii_up(PortId p) const;
  const MiiConfig& mii() const { return mii_; }
  DistributionPolicy policy() const { return policy_; }
  LacpAggregator& lacp() { return lacp_; }
  const LacpAggregator& lacp() const { return lacp_; }
  const ConversationLedger& ledger() const { return ledger_; }
  const std::vector<FailoverEvent>& failovers() const { return failovers_; }

  uint64_t tx_frames() const { return tx_frames_; }
  uint64_t rx_frames() const { return rx_frames_; }
  uint64_t poll_count() const { return polls_; }

  /// Frames handed up to the owning node.
  std::function<void(Frame&&)> upward;

 private:
  struct MemberState {
    bool mii_up = true;
    bool pending = false;
    SimTime pending_since;  // first poll that saw the new carrier value
  };
  struct ConversationRoute {
    PortId port;
    bool valid = false;
  };

  void on_port_receive(PortId port, Frame&& f);
  void recompute_active();
  bool port_holds(PortId port, uint32_t conversation) const;
  void schedule_poll();

  Network& net_;
  std::string name_;
  std::vector<PortId> members_;
  MiiConfig mii_;
  DistributionPolicy policy_;
  LacpAggregator lacp_;
  MacAddress mac_;
  std::unordered_map<uint32_t, MemberState> state_;  // keyed by port id
  std::vector<PortId> active_;
  std::unordered_map<uint32_t, ConversationRoute> routes_;  // keyed by conversation
  uint64_t rr_next_ = 0;
  ConversationLedger ledger_;
  std::vector<FailoverEvent> failovers_;
  uint64_t tx_frames_ = 0;
  uint64_t rx_frames_ = 0;
  uint64_t polls_ = 0;
};

}  // namespace lagsim
