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

#include "lagsim/netmodel.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace lagsim {

MacAddress MacAddress::from_index(uint32_t index) {
  MacAddress m;
  m.octets = {0x02, 0x00, static_cast<uint8_t>(index >> 24), static_cast<uint8_t>(index >> 16),
              static_cast<uint8_t>(index >> 8), static_cast<uint8_t>(index)};
  return m;
}

bool MacAddress::is_zero() const {
  return std::all_of(octets.begin(), octets.end(), [](uint8_t o) { return o == 0; });
}

std::string MacAddress::to_string() const {
  char buf[18];
  std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", octets[0], octets[1],
                octets[2], octets[3], octets[4], octets[5]);
  return buf;
}

namespace {

std::optional<uint32_t> parse_quad(const std::string& s) {
  uint32_t out = 0;
  int parts = 0;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, '.')) {
    if (tok.empty() || tok.size() > 3 ||
        !std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; }))
      return std::nullopt;
    const int v = std::stoi(tok);
    if (v > 255) return std::nullopt;
    out = (out << 8) | static_cast<uint32_t>(v);
    ++parts;
  }
  if (parts != 4) return std::nullopt;
  return out;
}

}  // namespace

uint32_t NetAddress::parse_network(const std::string& dotted) {
  auto q = parse_quad(dotted);
  if (!q || (*q & 0xFF) != 0) throw std::invalid_argument("bad network prefix '" + dotted + "'");
  return *q;
}

std::optional<NetAddress> NetAddress::parse(const std::string& dotted) {
  auto q = parse_quad(dotted);
  if (!q) return std::nullopt;
  return NetAddress{*q & 0xFFFFFF00u, *q & 0xFFu};
}

std::string NetAddress::format_network(uint32_t network) {
  return std::to_string(network >> 24) + "." + std::to_string((network >> 16) & 0xFF) + "." +
         std::to_string((network >> 8) & 0xFF) + "." + std::to_string(network & 0xFF);
}

std::string NetAddress::to_string() const { return format_network(network + host); }

const char* to_string(FrameKind k) {
  switch (k) {
    case FrameKind::kVideo: return "VIDEO";
    case FrameKind::kVoice: return "VOICE";
    case FrameKind::kData: return "DATA";
    case FrameKind::kProbe: return "PROBE";
    case FrameKind::kProbeReply: return "PROBE_REPLY";
    case FrameKind::kLacpdu: return "LACPDU";
    case FrameKind::kRouting: return "ROUTING";
    case FrameKind::kAck: return "ACK";
  }
  return "?";
}

const char* to_string(DropReason r) {
  switch (r) {
    case DropReason::kLinkDown: return "LINK_DOWN";
    case DropReason::kQueueFull: return "QUEUE_FULL";
    case DropReason::kNoRoute: return "NO_ROUTE";
    case DropReason::kOverload: return "OVERLOAD";
  }
  return "?";
}

bool Frame::same_content(const Frame& o) const {
  return id == o.id && src_mac == o.src_mac && dst_mac == o.dst_mac && src_addr == o.src_addr &&
         dst_addr == o.dst_addr && size_bytes == o.size_bytes && kind == o.kind &&
         conversation == o.conversation && seq_in_conversation == o.seq_in_conversation &&
         sent_at == o.sent_at && app_seq == o.app_seq && app_aux == o.app_aux &&
         payload_bytes == o.payload_bytes && control == o.control;
}

void DropLedger::record(uint32_t conversation, DropReason reason) {
  if (conversation >= counts_.size()) counts_.resize(conversation + 1, {});
  ++counts_[conversation][static_cast<size_t>(reason)];
}

uint64_t DropLedger::count(uint32_t conversation, DropReason reason) const {
  if (conversation >= counts_.size()) return 0;
  return counts_[conversation][static_cast<size_t>(reason)];
}

uint64_t DropLedger::total(uint32_t conversation) const {
  if (conversation >= counts_.size()) return 0;
  uint64_t t = 0;
  for (auto c : counts_[conversation]) t += c;
  return t;
}

uint64_t DropLedger::total(DropReason reason) const {
  uint64_t t = 0;
  for (const auto& row : counts_) t += row[static_cast<size_t>(reason)];
  return t;
}

ForwardingBudget::ForwardingBudget(int64_t capacity_fps)
    : capacity_fps_(capacity_fps),
      max_units_(std::max<int64_t>(kUnitsPerFrame, capacity_fps * 1000)),
      units_(max_units_) {}

bool ForwardingBudget::admit(SimTime now) {
  if (capacity_fps_ <= 0) return true;  // unlimited
  const int64_t elapsed = (now - last_).us();
  last_ = now;
  // Refill is capped before the multiply to stay clear of overflow.
  const int64_t refill_cap = max_units_ / capacity_fps_ + 1;
  units_ = std::min(max_units_, units_ + std::min(elapsed, refill_cap) * capacity_fps_);
  if (units_ < kUnitsPerFrame) return false;
  units_ -= kUnitsPerFrame;
  return true;
}

PortInterface::PortInterface(Network& net, PortId port) : net_(net), port_(port) {
  net_.port(port_).on_carrier_change.push_back([this](bool up) {
    if (on_carrier_change) on_carrier_change(up);
  });
}

bool PortInterface::carrier_up() const { return net_.port(port_).carrier; }

void PortInterface::send(Frame&& f, NetAddress) { net_.transmit(port_, std::move(f)); }

MacAddress PortInterface::mac() const { return net_.port(port_).mac; }

std::string PortInterface::describe() const { return "port" + std::to_string(port_.value); }

bool LanInterface::carrier_up() const {
  return std::any_of(hosts_.begin(), hosts_.end(),
                     [this](const auto& kv) { return net_.port(kv.second).carrier; });
}

void LanInterface::send(Frame&& f, NetAddress next_hop) {
  auto it = hosts_.find(next_hop);
  if (it == hosts_.end()) {
    net_.drop(f, DropReason::kNoRoute);
    return;
  }
  net_.transmit(it->second, std::move(f));
}

MacAddress LanInterface::mac() const {
  return hosts_.empty() ? MacAddress{} : net_.port(net_.peer(hosts_.begin()->second)).mac;
}

std::string LanInterface::describe() const { return "lan" + address.to_string(); }

void LoopbackInterface::send(Frame&& f, NetAddress) {
  // Frames for the node itself never reach an interface.
  if (net != nullptr) net->drop(f, DropReason::kNoRoute);
}

Node::Node(Network& net, NodeId id, std::string name, NodeRole role, int64_t forward_capacity_fps)
    : net_(net), id_(id), name_(std::move(name)), role_(role), budget_(forward_capacity_fps) {}

size_t Node::add_interface(std::unique_ptr<Interface> iface) {
  interfaces_.push_back(std::move(iface));
  return interfaces_.size() - 1;
}

bool Node::owns(NetAddress a) const {
  return std::any_of(interfaces_.begin(), interfaces_.end(),
                     [&](const auto& i) { return i->address == a; });
}

NetAddress Node::primary_address() const {
  return interfaces_.empty() ? NetAddress{} : interfaces_.front()->address;
}

void Node::receive(size_t iface, Frame&& f) {
  if (f.kind == FrameKind::kRouting) {
    if (role_ != NodeRole::kRouter || !routing_rx) {
      net_.drop(f, DropReason::kNoRoute);
      return;
    }
    net_.deliver(Frame(f));
    routing_rx(iface, std::move(f));
    return;
  }
  deliver_local(std::move(f));
}

void Node::deliver_local(Frame&& f) {
  if (owns(f.dst_addr)) {
    if (f.kind == FrameKind::kProbe) {
      Frame reply;
      reply.src_mac = f.dst_mac;
      reply.dst_mac = f.src_mac;
      reply.src_addr = f.dst_addr;
      reply.dst_addr = f.src_addr;
      reply.size_bytes = f.size_bytes;
      reply.payload_bytes = f.payload_bytes;
      reply.kind = FrameKind::kProbeReply;
      reply.conversation = static_cast<uint32_t>(f.app_aux);
      reply.app_seq = f.app_seq;
      net_.deliver(std::move(f));
      net_.stamp(reply);
      originate(std::move(reply));
      return;
    }
    net_.deliver(std::move(f));
    return;
  }
  if (role_ == NodeRole::kHost) {
    net_.drop(f, DropReason::kNoRoute);
    return;
  }
  forward(std::move(f), true);
}

void Node::originate(Frame&& f) {
  if (role_ == NodeRole::kHost) {
    if (interfaces_.empty()) {
      net_.drop(f, DropReason::kNoRoute);
      return;
    }
    interfaces_.front()->send(std::move(f), f.dst_addr);
    return;
  }
  forward(std::move(f), false);
}

void Node::forward(Frame&& f, bool budgeted) {
  if (budgeted && !budget_.admit(net_.now())) {
    net_.drop(f, DropReason::kOverload);
    return;
  }
  auto it = routes_.find(f.dst_addr.network);
  if (it == routes_.end() || !interfaces_.at(it->second.interface)->carrier_up()) {
    net_.drop(f, DropReason::kNoRoute);
    return;
  }
  const NetAddress next = f.dst_addr;
  interfaces_[it->second.interface]->send(std::move(f), next);
}

NodeId Network::add_node(std::string name, NodeRole role, int64_t forward_capacity_fps) {
  const NodeId id{static_cast<uint32_t>(nodes_.size())};
  nodes_.push_back(std::make_unique<Node>(*this, id, std::move(name), role, forward_capacity_fps));
  return id;
}

PortId Network::add_port(NodeId node, int64_t speed_bps, uint32_t queue_capacity_frames) {
  if (speed_bps <= 0) throw SimulationError("port speed must be positive");
  const PortId id{static_cast<uint32_t>(ports_.size())};
  Port p;
  p.node = node;
  p.index = static_cast<uint32_t>(this->node(node).ports().size());
  p.mac = MacAddress::from_index(id.value + 1);
  p.speed_bps = speed_bps;
  p.queue_capacity_frames = queue_capacity_frames;
  ports_.push_back(std::move(p));
  this->node(node).ports().push_back(id);
  return id;
}

LinkId Network::connect(PortId a, PortId b, int64_t propagation_us) {
  if (a == b) throw SimulationError("cannot connect a port to itself");
  if (port(a).link || port(b).link)
    throw SimulationError("port already attached to a link (port" + std::to_string(a.value) +
                          " / port" + std::to_string(b.value) + ")");
  if (propagation_us < 0) throw SimulationError("negative propagation delay");
  if (port(a).node == port(b).node)
    warnings_.push_back("loopback link on node '" + node(port(a).node).name() + "'");
  const LinkId id{static_cast<uint32_t>(links_.size())};
  links_.push_back(Link{a, b, propagation_us, true});
  for (PortId p : {a, b}) {
    port(p).link = id;
    port(p).carrier = true;
    port(p).carrier_before_change = true;
    port(p).carrier_changed_at = now();
  }
  return id;
}

Node* Network::find_node(const std::string& name) {
  for (auto& n : nodes_)
    if (n->name() == name) return n.get();
  return nullptr;
}

PortId Network::peer(PortId p) const {
  const auto& pt = port(p);
  if (!pt.link) throw SimulationError("port" + std::to_string(p.value) + " is not attached");
  const Link& l = link(*pt.link);
  return l.a == p ? l.b : l.a;
}

void Network::set_carrier(PortId id, bool up) {
  Port& p = port(id);
  if (p.carrier == up) return;
  if (p.carrier_changed_at != now()) p.carrier_before_change = p.carrier;
  p.carrier = up;
  p.carrier_changed_at = now();
  for (auto& cb : p.on_carrier_change) cb(up);
}

void Network::set_link_state(LinkId id, bool up) {
  Link& l = link(id);
  if (l.up == up) return;
  l.up = up;
  if (!up) {
    for (PortId pid : {l.a, l.b}) {
      Port& p = port(pid);
      if (p.busy) sched_.cancel(p.tx_done_event);
      p.busy = false;
      p.tx_remainder = 0;
      for (auto& w : p.wire) {
        sched_.cancel(w.arrival);
        drop(w.frame, DropReason::kLinkDown);
      }
      p.wire.clear();
      for (auto& f : p.queue) drop(f, DropReason::kLinkDown);
      p.queue.clear();
    }
  }
  set_carrier(l.a, up);
  set_carrier(l.b, up);
}

void Network::schedule_link_state(LinkId l, bool up, SimTime at) {
  sched_.schedule(at, [this, l, up] { set_link_state(l, up); }, "link-state");
}

void Network::transmit(PortId id, Frame&& f) {
  Port& p = port(id);
  if (!p.carrier) {
    drop(f, DropReason::kLinkDown);
    return;
  }
  if (p.occupancy() >= p.queue_capacity_frames) {
    drop(f, DropReason::kQueueFull);
    return;
  }
  p.queue.push_back(std::move(f));
  ++p.tx_frames;
  if (!p.busy) start_tx(id);
}

void Network::start_tx(PortId id) {
  Port& p = port(id);
  if (p.queue.empty()) {
    p.tx_remainder = 0;
    return;
  }
  const int64_t units = static_cast<int64_t>(p.queue.front().size_bytes) * 8 * 1'000'000 +
                        p.tx_remainder;
  const int64_t duration = units / p.speed_bps;
  p.tx_remainder = units % p.speed_bps;
  p.busy = true;
  p.tx_done_event = sched_.schedule_in(SimTime::micros(duration), [this, id] { finish_tx(id); },
                                       "tx-done");
}

void Network::finish_tx(PortId id) {
  Port& p = port(id);
  p.busy = false;
  Frame f = std::move(p.queue.front());
  p.queue.pop_front();
  const Link& l = link(*p.link);
  const EventHandle h = sched_.schedule_in(SimTime::micros(l.propagation_us),
                                           [this, id] { arrive(id); }, "arrival");
  p.wire.push_back(Port::OnWire{std::move(f), h});
  start_tx(id);
}

void Network::arrive(PortId from) {
  Port& src = port(from);
  Frame f = std::move(src.wire.front().frame);
  src.wire.pop_front();
  Port& dst = port(peer(from));
  ++dst.rx_frames;
  if (!dst.on_receive) {
    drop(f, DropReason::kNoRoute);
    return;
  }
  dst.on_receive(std::move(f));
}

uint32_t Network::new_conversation(std::string label) {
  conversation_labels_.push_back(std::move(label));
  next_seq_.push_back(1);
  originated_.push_back(0);
  delivered_.push_back(0);
  receivers_.emplace_back();
  return static_cast<uint32_t>(conversation_labels_.size() - 1);
}

void Network::stamp(Frame& f) {
  f.id = next_frame_id_++;
  f.sent_at = now();
  f.received_at.reset();
  f.seq_in_conversation = next_seq_.at(f.conversation)++;
  ++originated_.at(f.conversation);
}

void Network::register_receiver(uint32_t conversation, std::function<void(const Frame&)> fn) {
  receivers_.at(conversation) = std::move(fn);
}

void Network::deliver(Frame&& f) {
  f.received_at = now();
  ++delivered_.at(f.conversation);
  if (on_delivered) on_delivered(f);
  if (auto& r = receivers_.at(f.conversation)) r(f);
}

void Network::drop(const Frame& f, DropReason reason) { drops_.record(f.conversation, reason); }

uint64_t Network::originated(uint32_t c) const { return c < originated_.size() ? originated_[c] : 0; }

uint64_t Network::delivered(uint32_t c) const { return c < delivered_.size() ? delivered_[c] : 0; }

std::vector<uint64_t> Network::in_flight_by_conversation() const {
  std::vector<uint64_t> out(conversation_labels_.size(), 0);
  for (const Port& p : ports_) {
    for (const Frame& f : p.queue) ++out.at(f.conversation);
    for (const auto& w : p.wire) ++out.at(w.frame.conversation);
  }
  return out;
}

}  // namespace lagsim
