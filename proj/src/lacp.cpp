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

#include "lagsim/lacp.hpp"

#include <algorithm>
#include <memory>

namespace lagsim {

namespace {
// IEEE slow-protocols multicast address.
constexpr MacAddress kSlowProtocolsMac{{0x01, 0x80, 0xC2, 0x00, 0x00, 0x02}};
}  // namespace

LacpAggregator::LacpAggregator(Network& net, SystemId system, AggKey key,
                               std::vector<PortId> ports, LacpConfig config)
    : net_(net), system_(system), key_(key), config_(config) {
  for (PortId p : ports) {
    Member m;
    m.port = p;
    m.ident = PortIdent{128, static_cast<uint16_t>(net_.port(p).index + 1)};
    m.conversation = net_.new_conversation("lacp:port" + std::to_string(p.value));
    members_.push_back(m);
  }
  std::sort(members_.begin(), members_.end(),
            [](const Member& a, const Member& b) { return a.ident < b.ident; });
}

void LacpAggregator::start(const std::vector<SimTime>& offsets) {
  for (size_t i = 0; i < members_.size(); ++i) {
    const PortId p = members_[i].port;
    const SimTime off = i < offsets.size() ? offsets[i] : SimTime{};
    members_[i].next_tx =
        net_.scheduler().schedule_in(off, [this, p] { periodic_tx(p); }, "lacp-tx");
  }
}

const LacpAggregator::Member& LacpAggregator::member(PortId port) const {
  for (const auto& m : members_)
    if (m.port == port) return m;
  throw SimulationError("port" + std::to_string(port.value) + " is not a LACP member");
}

LacpAggregator::Member& LacpAggregator::member_mut(PortId port) {
  return const_cast<Member&>(member(port));
}

void LacpAggregator::periodic_tx(PortId port) {
  Member& m = member_mut(port);
  m.next_tx = net_.scheduler().schedule_in(config_.tx_interval, [this, port] { periodic_tx(port); },
                                           "lacp-tx");
  if (!net_.port(port).carrier) return;

  auto pdu = std::make_shared<Lacpdu>();
  pdu->actor_system = system_;
  pdu->actor_key = key_;
  pdu->actor_port = m.ident;
  pdu->actor_state.sync = m.selection == Selection::kSelected;
  pdu->actor_state.collecting = pdu->actor_state.sync;
  pdu->actor_state.distributing = pdu->actor_state.sync;
  if (m.partner) {
    pdu->partner_system = m.partner->system;
    pdu->partner_key = m.partner->key;
    pdu->partner_port = m.partner->port;
  }

  Frame f;
  f.src_mac = net_.port(port).mac;
  f.dst_mac = kSlowProtocolsMac;
  f.kind = FrameKind::kLacpdu;
  f.size_bytes = Lacpdu::kSizeBytes;
  f.conversation = m.conversation;
  f.control = std::move(pdu);
  net_.stamp(f);
  ++m.tx;
  net_.transmit(port, std::move(f));
}

void LacpAggregator::on_lacpdu(PortId port, const Lacpdu& pdu) {
  if (pdu.actor_system.mac.is_zero()) {
    ++malformed_;
    return;
  }
  Member& m = member_mut(port);
  ++m.rx;
  m.partner = Member::Partner{pdu.actor_system, pdu.actor_key, pdu.actor_port};
  net_.scheduler().cancel(m.expiry);
  m.expiry = net_.scheduler().schedule_in(
      SimTime::micros(config_.tx_interval.us() * config_.expiry_multiple),
      [this, port] { expire(port); }, "lacp-expiry");
  reselect();
}

void LacpAggregator::expire(PortId port) {
  member_mut(port).partner.reset();
  reselect();
}

std::optional<LagId> LacpAggregator::lag_id(PortId port) const {
  const Member& m = member(port);
  if (!m.partner) return std::nullopt;
  return LagId{system_, key_, m.partner->system, m.partner->key};
}

void LacpAggregator::reselect() {
  // Reference: the highest-priority member that knows its partner.
  std::optional<LagId> ref;
  int64_t ref_speed = 0;
  for (const auto& m : members_) {
    if (auto id = lag_id(m.port)) {
      ref = id;
      ref_speed = net_.port(m.port).speed_bps;
      break;
    }
  }
  bool changed = false;
  for (auto& m : members_) {
    const auto id = lag_id(m.port);
    const bool ok = id && ref && *id == *ref && net_.port(m.port).speed_bps == ref_speed;
    const Selection s = ok ? Selection::kSelected : Selection::kUnselected;
    if (s != m.selection) {
      m.selection = s;
      changed = true;
    }
  }
  if (changed && on_selection_change) on_selection_change();
}

std::vector<PortId> LacpAggregator::selected_ports() const {
  std::vector<PortId> out;
  for (const auto& m : members_)
    if (m.selection == Selection::kSelected && net_.port(m.port).carrier) out.push_back(m.port);
  return out;
}

Selection LacpAggregator::selection(PortId port) const { return member(port).selection; }

}  // namespace lagsim
