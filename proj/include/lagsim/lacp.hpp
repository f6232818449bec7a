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

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "lagsim/netmodel.hpp"

namespace lagsim {

/// Compared by (priority, mac); lower wins.
struct SystemId {
  uint16_t priority = 32768;
  MacAddress mac;
  constexpr auto operator<=>(const SystemId&) const = default;
};

/// Compared by (priority, number); number is unique within one system.
struct PortIdent {
  uint16_t priority = 128;
  uint16_t number = 0;
  constexpr auto operator<=>(const PortIdent&) const = default;
};

struct AggKey {
  uint16_t key = 0;
  constexpr auto operator<=>(const AggKey&) const = default;
};

struct LagId {
  SystemId local_system;
  AggKey local_key;
  SystemId partner_system;
  AggKey partner_key;
  constexpr bool operator==(const LagId&) const = default;
};

struct LacpStateFlags {
  bool activity = true;
  bool sync = false;
  bool collecting = false;
  bool distributing = false;
  constexpr bool operator==(const LacpStateFlags&) const = default;
};

struct Lacpdu : ControlPayload {
  static constexpr uint32_t kSizeBytes = 124;

  SystemId actor_system;
  AggKey actor_key;
  PortIdent actor_port;
  LacpStateFlags actor_state;
  SystemId partner_system;
  AggKey partner_key;
  PortIdent partner_port;
  LacpStateFlags partner_state;
};

enum class Selection : uint8_t { kUnselected, kSelected };

struct LacpConfig {
  SimTime tx_interval = SimTime::seconds(1);
  int expiry_multiple = 3;
};

/// LACP for the member ports of one bond end: periodic LACPDU exchange and
/// the selection rule (same LAG ID and same speed as the reference port).
class LacpAggregator {
 public:
  struct Member {
    PortId port;
    PortIdent ident;
    uint32_t conversation = 0;
    Selection selection = Selection::kUnselected;

    struct Partner {
      SystemId system;
      AggKey key;
      PortIdent port;
    };
    std::optional<Partner> partner;
    EventHandle expiry = 0;
    EventHandle next_tx = 0;
    uint64_t tx = 0;
    uint64_t rx = 0;
  };

  LacpAggregator(Network& net, SystemId system, AggKey key, std::vector<PortId> ports,
                 LacpConfig config = {});
  LacpAggregator(const LacpAggregator&) = delete;
  LacpAggregator& operator=(const LacpAggregator&) = delete;

  /// Starts periodic transmission; member i first transmits at now + offsets[i].
  void start(const std::vector<SimTime>& offsets);

  /// One periodic tick: sends a LACPDU unless the carrier is down.
  void periodic_tx(PortId port);
  void on_lacpdu(PortId port, const Lacpdu& pdu);

  /// SELECTED members with carrier UP, in PortIdent order.
  std::vector<PortId> selected_ports() const;
  Selection selection(PortId port) const;
  std::optional<LagId> lag_id(PortId port) const;

  const SystemId& system() const { return system_; }
  AggKey key() const { return key_; }
  const std::vector<Member>& members() const { return members_; }
  const Member& member(PortId port) const;
  uint64_t malformed() const { return malformed_; }
  const LacpConfig& config() const { return config_; }

  std::function<void()> on_selection_change;

 private:
  Member& member_mut(PortId port);
  void expire(PortId port);
  void reselect();

  Network& net_;
  SystemId system_;
  AggKey key_;
  LacpConfig config_;
  std::vector<Member> members_;  // PortIdent order
  uint64_t malformed_ = 0;
};

}  // namespace lagsim
