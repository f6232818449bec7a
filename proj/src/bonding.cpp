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

#include "lagsim/bonding.hpp"

#include <algorithm>

namespace lagsim {

const char* to_string(DistributionPolicy p) {
  return p == DistributionPolicy::kDestMacModN ? "DEST_MAC_MOD_N" : "ROUND_ROBIN";
}

std::vector<std::string> MiiConfig::normalize() {
  if (poll_interval_ms < 1) throw SimulationError("mii.poll_interval_ms must be >= 1");
  if (updelay_ms < 0 || downdelay_ms < 0) throw SimulationError("mii delays must be >= 0");
  std::vector<std::string> warnings;
  auto round_up = [&](int64_t& v, const char* what) {
    const int64_t r = (v + poll_interval_ms - 1) / poll_interval_ms * poll_interval_ms;
    if (r != v) {
      warnings.push_back(std::string("mii.") + what + " " + std::to_string(v) +
                         " ms rounded up to " + std::to_string(r) + " ms");
      v = r;
    }
  };
  round_up(updelay_ms, "updelay_ms");
  round_up(downdelay_ms, "downdelay_ms");
  return warnings;
}

void ConversationLedger::observe(const Frame& f) {
  if (!delivered_ids_.insert(f.id).second) {
    ++duplicates_;
    return;
  }
  auto [it, fresh] = last_seq_.try_emplace(f.conversation, f.seq_in_conversation);
  if (fresh) return;
  if (f.seq_in_conversation < it->second)
    ++ordering_;
  else
    it->second = f.seq_in_conversation;
}

Bond::Bond(Network& net, std::string name, std::vector<PortId> members, MiiConfig mii,
           DistributionPolicy policy, SystemId system, AggKey key, LacpConfig lacp)
    : net_(net),
      name_(std::move(name)),
      mii_(mii),
      policy_(policy),
      lacp_(net, system, key, members, lacp) {
  if (members.empty()) throw SimulationError("bond '" + name_ + "' has no members");
  for (const auto& m : lacp_.members()) members_.push_back(m.port);
  mac_ = net_.port(members_.front()).mac;
  for (PortId p : members_) {
    state_[p.value].mii_up = net_.port(p).carrier;
    net_.port(p).on_receive = [this, p](Frame&& f) { on_port_receive(p, std::move(f)); };
  }
  lacp_.on_selection_change = [this] { recompute_active(); };
}

void Bond::start(SimTime poll_phase, const std::vector<SimTime>& lacp_offsets) {
  lacp_.start(lacp_offsets);
  net_.scheduler().schedule_in(poll_phase, [this] { schedule_poll(); }, "mii-poll");
}

void Bond::schedule_poll() {
  mii_poll();
  net_.scheduler().schedule_in(SimTime::millis(mii_.poll_interval_ms),
                               [this] { schedule_poll(); }, "mii-poll");
}

bool Bond::mii_up(PortId p) const { return state_.at(p.value).mii_up; }

std::vector<MiiTransition> Bond::mii_poll() {
  ++polls_;
  const SimTime now = net_.now();
  std::vector<MiiTransition> out;
  for (PortId p : members_) {
    MemberState& st = state_[p.value];
    const bool seen = net_.port(p).carrier_seen_at(now);
    if (seen == st.mii_up) {
      st.pending = false;
      continue;
    }
    if (!st.pending) {
      st.pending = true;
      st.pending_since = now;
    }
    const int64_t delay_ms = seen ? mii_.updelay_ms : mii_.downdelay_ms;
    if ((now - st.pending_since).us() >= delay_ms * 1000) {
      st.mii_up = seen;
      st.pending = false;
      out.push_back({p, seen});
    }
  }
  if (!out.empty()) recompute_active();
  return out;
}

void Bond::recompute_active() {
  std::vector<PortId> next;
  for (PortId p : members_)
    if (lacp_.selection(p) == Selection::kSelected && state_[p.value].mii_up) next.push_back(p);
  if (next == active_) return;

  const SimTime now = net_.now();
  for (PortId p : active_)
    if (std::find(next.begin(), next.end(), p) == next.end())
      failovers_.push_back({now, p, false, next.size()});
  for (PortId p : next)
    if (std::find(active_.begin(), active_.end(), p) == active_.end())
      failovers_.push_back({now, p, true, next.size()});

  const bool was_up = !active_.empty();
  active_ = std::move(next);
  if (was_up != !active_.empty() && on_carrier_change) on_carrier_change(!active_.empty());
}

bool Bond::port_holds(PortId port, uint32_t conversation) const {
  const Port& p = net_.port(port);
  for (const Frame& f : p.queue)
    if (f.conversation == conversation) return true;
  for (const auto& w : p.wire)
    if (w.frame.conversation == conversation) return true;
  return false;
}

PortId Bond::select_tx_port(const Frame& f) {
  if (active_.empty()) throw SimulationError("bond '" + name_ + "' has no active member");
  if (policy_ == DistributionPolicy::kRoundRobin) return active_[rr_next_++ % active_.size()];

  const PortId hashed = active_[f.dst_mac.last_octet() % active_.size()];
  // A conversation only moves once nothing of it is left on its old port, so
  // a remap after an active-set change cannot reorder it.
  ConversationRoute& r = routes_[f.conversation];
  if (r.valid && r.port != hashed &&
      std::find(active_.begin(), active_.end(), r.port) != active_.end() &&
      port_holds(r.port, f.conversation))
    return r.port;
  r.port = hashed;
  r.valid = true;
  return hashed;
}

void Bond::bond_transmit(Frame&& f) {
  if (active_.empty()) {
    net_.drop(f, DropReason::kNoRoute);
    return;
  }
  const PortId p = select_tx_port(f);
  ++tx_frames_;
  net_.transmit(p, std::move(f));
}

void Bond::on_port_receive(PortId port, Frame&& f) {
  if (f.kind == FrameKind::kLacpdu) {
    net_.deliver(Frame(f));
    const auto* pdu = dynamic_cast<const Lacpdu*>(f.control.get());
    if (pdu == nullptr) {
      Lacpdu empty;
      lacp_.on_lacpdu(port, empty);  // counted as malformed
      return;
    }
    lacp_.on_lacpdu(port, *pdu);
    return;
  }
  bond_collect(port, std::move(f));
}

void Bond::bond_collect(PortId, Frame&& f) {
  ++rx_frames_;
  ledger_.observe(f);
  if (upward) upward(std::move(f));
}

}  // namespace lagsim
