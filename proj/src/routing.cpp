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

#include "lagsim/routing.hpp"

#include <algorithm>
#include <limits>
#include <memory>
#include <set>

namespace lagsim {

namespace {

constexpr MacAddress kAllSpfRoutersMac{{0x01, 0x00, 0x5E, 0x00, 0x00, 0x05}};
constexpr uint32_t kHelloBytes = 82;
constexpr uint32_t kLsaHeaderBytes = 62;
constexpr uint32_t kLsaLinkBytes = 12;

bool lists_neighbor(const Lsa& lsa, NodeId n) {
  return std::any_of(lsa.links.begin(), lsa.links.end(),
                     [&](const LsaLink& l) { return l.neighbor == n; });
}

// Empty first hop (self) sorts before any neighbour.
bool better(uint32_t cost, const std::optional<NodeId>& hop, const SpfEntry& cur) {
  if (cost != cur.cost) return cost < cur.cost;
  return hop < cur.first_hop;
}

}  // namespace

const char* to_string(DetectionMode m) {
  return m == DetectionMode::kDeadInterval ? "DEAD_INTERVAL" : "CARRIER_TRIGGERED";
}

void RoutingConfig::validate() const {
  if (hello_interval_s <= 0) throw SimulationError("routing.hello_interval_s must be > 0");
  if (dead_interval_s <= hello_interval_s)
    throw SimulationError("routing.dead_interval_s must exceed hello_interval_s");
  if (spf_delay_ms < 0) throw SimulationError("routing.spf_delay_ms must be >= 0");
}

std::map<uint32_t, SpfEntry> shortest_paths(NodeId self, const std::map<uint32_t, Lsa>& db) {
  constexpr uint32_t kInf = std::numeric_limits<uint32_t>::max();
  std::map<uint32_t, SpfEntry> reach;  // router id -> (first hop, distance)
  std::set<uint32_t> done;
  reach[self.value] = SpfEntry{std::nullopt, 0};

  while (true) {
    uint32_t u = kInf;
    uint32_t best = kInf;
    for (const auto& [id, e] : reach)
      if (!done.count(id) && e.cost < best) {
        best = e.cost;
        u = id;
      }
    if (u == kInf) break;
    done.insert(u);
    auto it = db.find(u);
    if (it == db.end()) continue;
    for (const LsaLink& l : it->second.links) {
      if (!l.neighbor) continue;
      auto peer = db.find(l.neighbor->value);
      if (peer == db.end() || !lists_neighbor(peer->second, NodeId{u})) continue;
      const uint32_t cost = best + l.cost;
      const std::optional<NodeId> hop = u == self.value ? l.neighbor : reach[u].first_hop;
      auto cur = reach.find(l.neighbor->value);
      if (cur == reach.end())
        reach[l.neighbor->value] = SpfEntry{hop, cost};
      else if (!done.count(cur->first) && better(cost, hop, cur->second))
        cur->second = SpfEntry{hop, cost};
    }
  }

  std::map<uint32_t, SpfEntry> out;
  for (const auto& [id, r] : reach) {
    auto it = db.find(id);
    if (it == db.end()) continue;
    for (const LsaLink& l : it->second.links) {
      if (l.neighbor) continue;
      const uint32_t cost = r.cost + l.cost;
      auto cur = out.find(l.network);
      if (cur == out.end() || better(cost, r.first_hop, cur->second))
        out[l.network] = SpfEntry{r.first_hop, cost};
    }
  }
  return out;
}

RoutingProcess::RoutingProcess(Network& net, Node& router, RoutingConfig config,
                               std::vector<RouteChange>& log)
    : net_(net), router_(router), config_(config), log_(log) {
  config_.validate();
  conversation_ = net_.new_conversation("ospf:" + router_.name());
  router_.routing_rx = [this](size_t iface, Frame&& f) { on_frame(iface, f); };
  for (size_t i = 0; i < router_.interface_count(); ++i)
    router_.interface(i).on_carrier_change = [this, i](bool up) { on_carrier(i, up); };
}

bool RoutingProcess::point_to_point(size_t iface) const {
  return router_.interface(iface).point_to_point();
}

void RoutingProcess::start(const std::vector<SimTime>& phases) {
  for (size_t i = 0; i < router_.interface_count(); ++i) {
    if (!point_to_point(i)) continue;
    const SimTime phase = i < phases.size() ? phases[i] : SimTime{};
    net_.scheduler().schedule_in(phase, [this, i] { hello_tick(i); }, "hello");
  }
  originate_lsa();
}

std::optional<NodeId> RoutingProcess::neighbor_on(size_t iface) const {
  auto it = neighbors_.find(iface);
  if (it == neighbors_.end()) return std::nullopt;
  return it->second.id;
}

void RoutingProcess::hello_tick(size_t iface) {
  net_.scheduler().schedule_in(SimTime::seconds(config_.hello_interval_s),
                               [this, iface] { hello_tick(iface); }, "hello");
  send_hello(iface);
}

void RoutingProcess::send_hello(size_t iface) {
  Interface& itf = router_.interface(iface);
  if (!itf.carrier_up()) return;
  auto hello = std::make_shared<HelloPayload>();
  hello->router = router_.id();
  Frame f;
  f.src_mac = itf.mac();
  f.dst_mac = kAllSpfRoutersMac;
  f.src_addr = itf.address;
  f.dst_addr = kAllSpfRouters;
  f.kind = FrameKind::kRouting;
  f.size_bytes = kHelloBytes;
  f.conversation = conversation_;
  f.control = std::move(hello);
  net_.stamp(f);
  itf.send(std::move(f), kAllSpfRouters);
}

void RoutingProcess::send_lsa(size_t iface, const Lsa& lsa) {
  Interface& itf = router_.interface(iface);
  if (!itf.carrier_up()) return;
  auto payload = std::make_shared<LsaPayload>();
  payload->lsa = lsa;
  Frame f;
  f.src_mac = itf.mac();
  f.dst_mac = kAllSpfRoutersMac;
  f.src_addr = itf.address;
  f.dst_addr = kAllSpfRouters;
  f.kind = FrameKind::kRouting;
  f.size_bytes = kLsaHeaderBytes + kLsaLinkBytes * static_cast<uint32_t>(lsa.links.size());
  f.conversation = conversation_;
  f.control = std::move(payload);
  net_.stamp(f);
  itf.send(std::move(f), kAllSpfRouters);
}

void RoutingProcess::on_frame(size_t iface, const Frame& f) {
  if (auto* hello = dynamic_cast<const HelloPayload*>(f.control.get())) {
    on_hello(iface, hello->router);
  } else if (auto* lsa = dynamic_cast<const LsaPayload*>(f.control.get())) {
    on_lsa(iface, lsa->lsa);
  }
}

void RoutingProcess::on_hello(size_t iface, NodeId from) {
  if (!router_.interface(iface).carrier_up()) return;
  auto it = neighbors_.find(iface);
  const bool fresh = it == neighbors_.end() || it->second.id != from;
  if (fresh) {
    if (it != neighbors_.end()) net_.scheduler().cancel(it->second.expiry);
    neighbors_[iface] = Neighbor{from, net_.now(), 0};
    it = neighbors_.find(iface);
  }
  it->second.last_seen = net_.now();
  net_.scheduler().cancel(it->second.expiry);
  it->second.expiry = net_.scheduler().schedule_in(
      SimTime::seconds(config_.dead_interval_s) + SimTime::micros(1),
      [this] { neighbor_check(); }, "dead-check");
  if (fresh) {
    send_hello(iface);  // lets the new neighbour see us without waiting a period
    originate_lsa();
    for (const auto& [origin, lsa] : db_)
      if (origin != router_.id().value) send_lsa(iface, lsa);
  }
}

void RoutingProcess::on_lsa(size_t iface, const Lsa& lsa) {
  if (lsa.origin == router_.id()) return;
  auto it = db_.find(lsa.origin.value);
  if (it != db_.end() && it->second.seq >= lsa.seq) return;
  db_[lsa.origin.value] = lsa;
  flood(lsa, iface);
  schedule_spf();
}

void RoutingProcess::on_carrier(size_t iface, bool up) {
  if (!point_to_point(iface)) {
    if (config_.detection_mode == DetectionMode::kCarrierTriggered) originate_lsa();
    return;
  }
  if (up) {
    send_hello(iface);
    return;
  }
  if (config_.detection_mode == DetectionMode::kCarrierTriggered && neighbors_.count(iface))
    expire(iface);
}

std::vector<NodeId> RoutingProcess::neighbor_check() {
  std::vector<size_t> dead;
  const SimTime now = net_.now();
  for (const auto& [iface, n] : neighbors_) {
    const bool timed_out = (now - n.last_seen).us() > config_.dead_interval_s * 1'000'000;
    const bool carrier_lost = config_.detection_mode == DetectionMode::kCarrierTriggered &&
                              !router_.interface(iface).carrier_up();
    if (timed_out || carrier_lost) dead.push_back(iface);
  }
  std::vector<NodeId> out;
  for (size_t iface : dead) {
    out.push_back(neighbors_.at(iface).id);
    expire(iface);
  }
  return out;
}

void RoutingProcess::expire(size_t iface) {
  auto it = neighbors_.find(iface);
  if (it == neighbors_.end()) return;
  net_.scheduler().cancel(it->second.expiry);
  neighbors_.erase(it);
  originate_lsa();
}

void RoutingProcess::originate_lsa() {
  Lsa lsa;
  lsa.origin = router_.id();
  lsa.seq = ++own_seq_;
  for (const auto& [iface, n] : neighbors_)
    lsa.links.push_back(LsaLink{n.id, router_.interface(iface).address.network, 1});
  for (size_t i = 0; i < router_.interface_count(); ++i)
    if (router_.interface(i).carrier_up())
      lsa.links.push_back(LsaLink{std::nullopt, router_.interface(i).address.network, 1});
  db_[router_.id().value] = lsa;
  ++originations_;
  flood(lsa, std::nullopt);
  schedule_spf();
}

void RoutingProcess::flood(const Lsa& lsa, std::optional<size_t> except) {
  for (const auto& [iface, n] : neighbors_)
    if (iface != except) send_lsa(iface, lsa);
}

void RoutingProcess::schedule_spf() {
  if (spf_pending_) return;
  spf_pending_ = true;
  net_.scheduler().schedule_in(SimTime::millis(config_.spf_delay_ms), [this] {
    spf_pending_ = false;
    spf();
  }, "spf");
}

void RoutingProcess::spf() {
  ++spf_runs_;
  const auto paths = shortest_paths(router_.id(), db_);
  std::map<uint32_t, Route> next;
  for (const auto& [network, e] : paths) {
    std::optional<size_t> iface;
    for (size_t i = 0; i < router_.interface_count() && !iface; ++i) {
      if (e.first_hop) {
        auto n = neighbors_.find(i);
        if (n != neighbors_.end() && n->second.id == *e.first_hop) iface = i;
      } else if (router_.interface(i).address.network == network) {
        iface = i;
      }
    }
    if (!iface) continue;
    next[network] = Route{network, *iface, e.first_hop, e.cost};
  }

  auto hop_name = [this](const Route& r) -> std::string {
    return r.next_hop ? net_.node(*r.next_hop).name() : "connected";
  };
  auto& table = router_.routes();
  std::set<uint32_t> networks;
  for (const auto& [n, r] : table) networks.insert(n);
  for (const auto& [n, r] : next) networks.insert(n);
  for (uint32_t n : networks) {
    auto a = table.find(n);
    auto b = next.find(n);
    std::optional<std::string> before, after;
    if (a != table.end()) before = hop_name(a->second);
    if (b != next.end()) after = hop_name(b->second);
    if (before != after) log_.push_back(RouteChange{net_.now(), router_.name(), n, before, after});
  }
  table = std::move(next);
}

}  // namespace lagsim
