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
#include <compare>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lagsim/engine.hpp"

namespace lagsim {

template <class Tag>
struct Id {
  uint32_t value = 0;
  constexpr auto operator<=>(const Id&) const = default;
};
using NodeId = Id<struct NodeTag>;
using PortId = Id<struct PortTag>;
using LinkId = Id<struct LinkTag>;

struct MacAddress {
  std::array<uint8_t, 6> octets{};

  static MacAddress from_index(uint32_t index);
  uint8_t last_octet() const { return octets[5]; }
  bool is_zero() const;
  std::string to_string() const;
  constexpr auto operator<=>(const MacAddress&) const = default;
};

/// Address = /24 network prefix plus host number.
struct NetAddress {
  uint32_t network = 0;  // host-order prefix, low octet zero
  uint32_t host = 0;

  static uint32_t parse_network(const std::string& dotted);  // throws on bad input
  static std::optional<NetAddress> parse(const std::string& dotted);
  static std::string format_network(uint32_t network);
  std::string to_string() const;
  constexpr auto operator<=>(const NetAddress&) const = default;
};

inline constexpr NetAddress kAllSpfRouters{0xE0000000u, 5};  // 224.0.0.5

enum class FrameKind : uint8_t {
  kVideo,
  kVoice,
  kData,
  kProbe,
  kProbeReply,
  kLacpdu,
  kRouting,
  kAck,
};
const char* to_string(FrameKind k);

/// Kinds that are control traffic and never appear in service QoS.
constexpr bool is_control(FrameKind k) {
  return k == FrameKind::kLacpdu || k == FrameKind::kRouting;
}

/// Opaque control-plane contents (LACPDU, hello, LSA) carried by a frame.
struct ControlPayload {
  virtual ~ControlPayload() = default;
};

struct Frame {
  uint64_t id = 0;
  MacAddress src_mac;
  MacAddress dst_mac;
  NetAddress src_addr;
  NetAddress dst_addr;
  uint32_t size_bytes = 1;
  FrameKind kind = FrameKind::kData;
  uint32_t conversation = 0;
  uint64_t seq_in_conversation = 0;
  SimTime sent_at;
  std::optional<SimTime> received_at;
  // Application fields (segment index, acknowledgement, reply conversation).
  uint64_t app_seq = 0;
  uint64_t app_aux = 0;
  uint32_t payload_bytes = 0;
  std::shared_ptr<const ControlPayload> control;

  /// Field-wise equality ignoring received_at.
  bool same_content(const Frame& o) const;
};

enum class DropReason : uint8_t { kLinkDown, kQueueFull, kNoRoute, kOverload };
inline constexpr size_t kDropReasons = 4;
const char* to_string(DropReason r);

/// Per-conversation drop counters kept by the network.
class DropLedger {
 public:
  void record(uint32_t conversation, DropReason reason);
  uint64_t count(uint32_t conversation, DropReason reason) const;
  uint64_t total(uint32_t conversation) const;
  uint64_t total(DropReason reason) const;

 private:
  std::vector<std::array<uint64_t, kDropReasons>> counts_;
};

enum class NodeRole : uint8_t { kRouter, kHost };

struct Port {
  NodeId node;
  uint32_t index = 0;  // position within the node
  MacAddress mac;
  int64_t speed_bps = 100'000'000;
  uint32_t queue_capacity_frames = 100;
  bool carrier = false;
  std::optional<LinkId> link;

  // Carrier as it was before the most recent change; used so that a reader
  // polling at the exact instant of a change still sees the old value.
  bool carrier_before_change = false;
  SimTime carrier_changed_at;

  std::deque<Frame> queue;  // front is being serialized while busy
  bool busy = false;
  EventHandle tx_done_event = 0;
  int64_t tx_remainder = 0;  // sub-microsecond serialization carry, bit*1e6 units

  struct OnWire {
    Frame frame;
    EventHandle arrival;
  };
  std::deque<OnWire> wire;

  uint64_t tx_frames = 0;
  uint64_t rx_frames = 0;

  std::function<void(Frame&&)> on_receive;
  std::vector<std::function<void(bool)>> on_carrier_change;

  size_t occupancy() const { return queue.size(); }
  /// Carrier value a poll at `now` observes: changes at `now` are not yet visible.
  bool carrier_seen_at(SimTime now) const {
    return carrier_changed_at == now ? carrier_before_change : carrier;
  }
};

struct Link {
  PortId a;
  PortId b;
  int64_t propagation_us = 5;
  bool up = true;
};

/// Token-bucket admission for a router's forwarding engine: sustained rate is
/// `capacity_fps`, burst is one millisecond worth of frames (at least one).
class ForwardingBudget {
 public:
  explicit ForwardingBudget(int64_t capacity_fps = 0);
  bool admit(SimTime now);
  int64_t capacity_fps() const { return capacity_fps_; }

 private:
  static constexpr int64_t kUnitsPerFrame = 1'000'000;
  int64_t capacity_fps_;
  int64_t max_units_;
  int64_t units_;
  SimTime last_;
};

class Network;

/// A layer-3 attachment of a node: a plain port, a bond, or a LAN segment.
class Interface {
 public:
  virtual ~Interface() = default;

  virtual bool carrier_up() const = 0;
  /// Sends toward `next_hop` (only meaningful on multi-access LANs).
  virtual void send(Frame&& f, NetAddress next_hop) = 0;
  virtual MacAddress mac() const = 0;
  virtual std::string describe() const = 0;
  /// True for links with exactly one neighbouring router.
  virtual bool point_to_point() const { return false; }

  NetAddress address;
  std::string peer_name;  // neighbouring router for point-to-point links
  std::function<void(bool)> on_carrier_change;
};

/// Interface backed by one point-to-point port.
class PortInterface : public Interface {
 public:
  PortInterface(Network& net, PortId port);
  bool carrier_up() const override;
  void send(Frame&& f, NetAddress next_hop) override;
  MacAddress mac() const override;
  std::string describe() const override;
  bool point_to_point() const override { return true; }
  PortId port() const { return port_; }

 private:
  Network& net_;
  PortId port_;
};

/// Router LAN interface: one port per attached host, selected by address.
class LanInterface : public Interface {
 public:
  explicit LanInterface(Network& net) : net_(net) {}
  void attach(NetAddress host, PortId port) { hosts_[host] = port; }
  bool carrier_up() const override;
  void send(Frame&& f, NetAddress next_hop) override;
  MacAddress mac() const override;
  std::string describe() const override;

 private:
  Network& net_;
  std::map<NetAddress, PortId> hosts_;
};

/// Router-local address that stays reachable while any interface is up.
class LoopbackInterface : public Interface {
 public:
  explicit LoopbackInterface(MacAddress mac) : mac_(mac) {}
  bool carrier_up() const override { return true; }
  void send(Frame&& f, NetAddress next_hop) override;
  MacAddress mac() const override { return mac_; }
  std::string describe() const override { return "lo" + address.to_string(); }

  Network* net = nullptr;  // for drop accounting

 private:
  MacAddress mac_;
};

struct Route {
  uint32_t network = 0;
  size_t interface = 0;
  std::optional<NodeId> next_hop;  // empty for connected networks
  uint32_t cost = 0;
  auto operator<=>(const Route&) const = default;
};

class Node {
 public:
  Node(Network& net, NodeId id, std::string name, NodeRole role, int64_t forward_capacity_fps);

  NodeId id() const { return id_; }
  const std::string& name() const { return name_; }
  NodeRole role() const { return role_; }

  size_t add_interface(std::unique_ptr<Interface> iface);
  Interface& interface(size_t i) { return *interfaces_.at(i); }
  const Interface& interface(size_t i) const { return *interfaces_.at(i); }
  size_t interface_count() const { return interfaces_.size(); }
  std::vector<PortId>& ports() { return ports_; }
  const std::vector<PortId>& ports() const { return ports_; }

  bool owns(NetAddress a) const;
  /// Address used when this node originates traffic toward `dst`.
  NetAddress primary_address() const;

  /// Routing state; filled by the routing process.
  std::map<uint32_t, Route>& routes() { return routes_; }
  const std::map<uint32_t, Route>& routes() const { return routes_; }

  /// Entry point for frames arriving on interface `iface`.
  void receive(size_t iface, Frame&& f);
  /// Sends a locally originated, already stamped frame.
  void originate(Frame&& f);

  /// Hosts hand the frame to its flow; routers forward it, subject to the
  /// forwarding budget.
  void deliver_local(Frame&& f);

  std::function<void(size_t iface, Frame&&)> routing_rx;

 private:
  void forward(Frame&& f, bool budgeted);

  Network& net_;
  NodeId id_;
  std::string name_;
  NodeRole role_;
  ForwardingBudget budget_;
  std::vector<std::unique_ptr<Interface>> interfaces_;
  std::vector<PortId> ports_;
  std::map<uint32_t, Route> routes_;
};

/// Owns nodes, ports and links, and moves frames between them.
class Network {
 public:
  explicit Network(Scheduler& sched) : sched_(sched) {}
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  Scheduler& scheduler() { return sched_; }
  SimTime now() const { return sched_.now(); }

  NodeId add_node(std::string name, NodeRole role, int64_t forward_capacity_fps = 0);
  PortId add_port(NodeId node, int64_t speed_bps, uint32_t queue_capacity_frames);
  /// Joins two free ports; the link starts UP. Throws on double attachment.
  LinkId connect(PortId a, PortId b, int64_t propagation_us);

  Node& node(NodeId id) { return *nodes_.at(id.value); }
  const Node& node(NodeId id) const { return *nodes_.at(id.value); }
  Node* find_node(const std::string& name);
  size_t node_count() const { return nodes_.size(); }
  Port& port(PortId id) { return ports_.at(id.value); }
  const Port& port(PortId id) const { return ports_.at(id.value); }
  size_t port_count() const { return ports_.size(); }
  Link& link(LinkId id) { return links_.at(id.value); }
  const Link& link(LinkId id) const { return links_.at(id.value); }
  size_t link_count() const { return links_.size(); }
  PortId peer(PortId p) const;

  /// Applies a link state change now. DOWN drops every frame queued on or
  /// travelling over the link (reason LINK_DOWN).
  void set_link_state(LinkId l, bool up);
  /// Schedules set_link_state at `at`.
  void schedule_link_state(LinkId l, bool up, SimTime at);

  /// Queues `f` on port `p`; accounts a drop on DOWN carrier or full queue.
  void transmit(PortId p, Frame&& f);

  uint32_t new_conversation(std::string label);
  const std::string& conversation_label(uint32_t c) const { return conversation_labels_.at(c); }
  size_t conversation_count() const { return conversation_labels_.size(); }

  /// Assigns a frame id, send time and per-conversation sequence number and
  /// counts the frame as originated.
  void stamp(Frame& f);

  void register_receiver(uint32_t conversation, std::function<void(const Frame&)> fn);
  /// Called once per frame reaching its destination node.
  void deliver(Frame&& f);
  std::function<void(const Frame&)> on_delivered;  // metrics hook

  void drop(const Frame& f, DropReason reason);
  const DropLedger& drops() const { return drops_; }
  uint64_t originated(uint32_t conversation) const;
  uint64_t delivered(uint32_t conversation) const;

  /// Frames currently queued or on a wire, per conversation (full scan).
  std::vector<uint64_t> in_flight_by_conversation() const;

  std::vector<std::string>& warnings() { return warnings_; }

 private:
  void start_tx(PortId p);
  void finish_tx(PortId p);
  void arrive(PortId from);
  void set_carrier(PortId p, bool up);

  Scheduler& sched_;
  std::vector<std::unique_ptr<Node>> nodes_;
  std::deque<Port> ports_;  // deque: references stay valid as ports are added
  std::vector<Link> links_;
  DropLedger drops_;
  uint64_t next_frame_id_ = 1;
  std::vector<std::string> conversation_labels_;
  std::vector<uint64_t> next_seq_;
  std::vector<uint64_t> originated_;
  std::vector<uint64_t> delivered_;
  std::vector<std::function<void(const Frame&)>> receivers_;
  std::vector<std::string> warnings_;
};

}  // namespace lagsim
