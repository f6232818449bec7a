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

#include <algorithm>
#include <cmath>

#include "lagsim/harness.hpp"

namespace lagsim {

namespace {

constexpr uint32_t kServerLan = 0xC0A80A00u;  // 192.168.10.0
constexpr uint32_t kClientLan = 0xC0A81E00u;  // 192.168.30.0

uint32_t adjacency_network(int i) { return 0xC0A80000u | (static_cast<uint32_t>(i) << 8); }
uint32_t loopback_network(int i) { return 0x0AFF0000u | (static_cast<uint32_t>(i) << 8); }

SimTime at_seconds(double s) { return SimTime::micros(std::llround(s * 1e6)); }

}  // namespace

World::World(const Scenario& s, uint64_t seed)
    : scenario_(s), rng_(seed), net_(sched_) {
  scenario_.seed = seed;
  net_.on_delivered = [this](const Frame& f) { metrics_.on_delivered(f); };
  build();
}

void World::build() {
  const TopologySpec& t = scenario_.topology;
  const int n = t.routers;
  const bool bonded = scenario_.mode == Mode::kBonded;
  const int members = bonded ? t.bond_members : 1;

  for (int i = 1; i <= n; ++i) {
    RouterInfo r;
    r.id = net_.add_node("R" + std::to_string(i), NodeRole::kRouter, t.forward_capacity_fps);
    routers_.push_back(std::move(r));
  }

  std::vector<std::vector<PortId>> ends_a(n), ends_b(n);
  for (int i = 1; i <= n; ++i) {
    Adjacency adj;
    adj.a = i;
    adj.b = i % n + 1;
    for (int m = 0; m < members; ++m) {
      const PortId pa = net_.add_port(router(adj.a), t.link_speed_bps, t.queue_capacity_frames);
      const PortId pb = net_.add_port(router(adj.b), t.link_speed_bps, t.queue_capacity_frames);
      adj.links.push_back(net_.connect(pa, pb, t.propagation_us));
      ends_a[i - 1].push_back(pa);
      ends_b[i - 1].push_back(pb);
    }
    adjacency_.push_back(std::move(adj));
  }

  // LAN ports. Client host ports are created back to back so neighbouring
  // clients get MACs of different parity.
  const PortId server_lan = net_.add_port(router(server_router()), t.lan_speed_bps,
                                          t.queue_capacity_frames);
  server_ = net_.add_node("server", NodeRole::kHost);
  const PortId server_port = net_.add_port(server_, t.lan_speed_bps, t.queue_capacity_frames);
  net_.connect(server_lan, server_port, t.propagation_us);

  std::vector<PortId> client_lan;
  for (int k = 0; k < t.clients; ++k)
    client_lan.push_back(
        net_.add_port(router(client_router()), t.lan_speed_bps, t.queue_capacity_frames));
  std::vector<PortId> client_ports;
  for (int k = 1; k <= t.clients; ++k) {
    clients_.push_back(net_.add_node("client" + std::to_string(k), NodeRole::kHost));
    client_ports.push_back(net_.add_port(clients_.back(), t.lan_speed_bps, t.queue_capacity_frames));
  }
  for (int k = 0; k < t.clients; ++k)
    net_.connect(client_lan[static_cast<size_t>(k)], client_ports[static_cast<size_t>(k)],
                 t.propagation_us);

  // Router interfaces: loopback first (it is the router's source address),
  // then adjacencies, then the LAN.
  for (int i = 1; i <= n; ++i) {
    RouterInfo& info = routers_[static_cast<size_t>(i - 1)];
    Node& node = net_.node(info.id);
    const MacAddress system_mac = net_.port(node.ports().front()).mac;
    auto lo = std::make_unique<LoopbackInterface>(system_mac);
    lo->address = NetAddress{loopback_network(i), 1};
    lo->net = &net_;
    info.loopback = node.add_interface(std::move(lo));
    expected_networks_.push_back(loopback_network(i));
  }
  for (int i = 1; i <= n; ++i) {
    Adjacency& adj = adjacency_[static_cast<size_t>(i - 1)];
    expected_networks_.push_back(adjacency_network(i));
    for (int side = 0; side < 2; ++side) {
      const int r = side == 0 ? adj.a : adj.b;
      const int peer = side == 0 ? adj.b : adj.a;
      const auto& ports = side == 0 ? ends_a[i - 1] : ends_b[i - 1];
      Node& node = net_.node(router(r));
      const NodeId nid = node.id();
      std::unique_ptr<Interface> iface;
      Bond* bond = nullptr;
      if (bonded) {
        const MacAddress system_mac = net_.port(node.ports().front()).mac;
        auto b = std::make_unique<Bond>(net_, "bond" + std::to_string(i) + "@R" + std::to_string(r),
                                        ports, scenario_.mii, scenario_.policy,
                                        SystemId{32768, system_mac},
                                        AggKey{static_cast<uint16_t>(i)}, scenario_.lacp);
        bond = b.get();
        iface = std::move(b);
      } else {
        iface = std::make_unique<PortInterface>(net_, ports.front());
      }
      iface->address = NetAddress{adjacency_network(i), static_cast<uint32_t>(side + 1)};
      iface->peer_name = "R" + std::to_string(peer);
      const size_t idx = node.add_interface(std::move(iface));
      auto up = [this, nid, idx](Frame&& f) { net_.node(nid).receive(idx, std::move(f)); };
      if (bond)
        bond->upward = up;
      else
        net_.port(ports.front()).on_receive = up;
      routers_[static_cast<size_t>(r - 1)].adjacency_iface.emplace_back(i, idx);
      (side == 0 ? adj.bond_a : adj.bond_b) = bond;
      (side == 0 ? adj.iface_a : adj.iface_b) = idx;
    }
  }

  auto attach_lan = [&](int r, uint32_t network, const std::vector<std::pair<NodeId, PortId>>& hosts,
                        const std::vector<PortId>& router_ports) {
    Node& node = net_.node(router(r));
    const NodeId nid = node.id();
    auto lan = std::make_unique<LanInterface>(net_);
    lan->address = NetAddress{network, 1};
    LanInterface* raw = lan.get();
    const size_t idx = node.add_interface(std::move(lan));
    routers_[static_cast<size_t>(r - 1)].lan = idx;
    for (size_t k = 0; k < hosts.size(); ++k) {
      const NetAddress host_addr{network, static_cast<uint32_t>(k + 2)};
      raw->attach(host_addr, router_ports[k]);
      net_.port(router_ports[k]).on_receive = [this, nid, idx](Frame&& f) {
        net_.node(nid).receive(idx, std::move(f));
      };
      Node& host = net_.node(hosts[k].first);
      auto pi = std::make_unique<PortInterface>(net_, hosts[k].second);
      pi->address = host_addr;
      const NodeId hid = host.id();
      host.add_interface(std::move(pi));
      net_.port(hosts[k].second).on_receive = [this, hid](Frame&& f) {
        net_.node(hid).receive(0, std::move(f));
      };
    }
    expected_networks_.push_back(network);
  };
  attach_lan(server_router(), kServerLan, {{server_, server_port}}, {server_lan});
  std::vector<std::pair<NodeId, PortId>> client_hosts;
  for (size_t k = 0; k < clients_.size(); ++k) client_hosts.emplace_back(clients_[k], client_ports[k]);
  attach_lan(client_router(), kClientLan, client_hosts, client_lan);

  for (auto& info : routers_)
    info.routing = std::make_unique<RoutingProcess>(net_, net_.node(info.id), scenario_.routing,
                                                    route_log_);
  std::sort(expected_networks_.begin(), expected_networks_.end());
}

std::vector<Bond*> World::bonds(int adjacency) const {
  const Adjacency& a = adjacency_.at(static_cast<size_t>(adjacency - 1));
  if (a.bond_a == nullptr) return {};
  return {a.bond_a, a.bond_b};
}

std::vector<const Bond*> World::all_bonds() const {
  std::vector<const Bond*> out;
  for (const auto& a : adjacency_)
    if (a.bond_a != nullptr) {
      out.push_back(a.bond_a);
      out.push_back(a.bond_b);
    }
  return out;
}

int World::router_index(NodeId id) const {
  for (size_t i = 0; i < routers_.size(); ++i)
    if (routers_[i].id == id) return static_cast<int>(i + 1);
  return 0;
}

Endpoint World::endpoint(const std::string& name) const {
  auto node_mac = [this](NodeId id) { return net_.port(net_.node(id).ports().front()).mac; };
  auto host = [&](NodeId id) {
    return Endpoint{id, net_.node(id).interface(0).address, node_mac(id)};
  };
  auto router_at = [&](int r, size_t iface) {
    const NodeId id = router(r);
    return Endpoint{id, net_.node(id).interface(iface).address, node_mac(id)};
  };
  if (name == "server") return host(server_);
  if (name.rfind("client", 0) == 0 && name.size() > 6) {
    const int k = std::atoi(name.c_str() + 6);
    if (k >= 1 && k <= static_cast<int>(clients_.size()))
      return host(clients_[static_cast<size_t>(k - 1)]);
  }
  if (name.size() > 1 && name[0] == 'R') {
    const int r = std::atoi(name.c_str() + 1);
    if (r >= 1 && r <= routers() && name == "R" + std::to_string(r))
      return router_at(r, routers_[static_cast<size_t>(r - 1)].loopback);
  }
  if (name == "gw-server")
    return router_at(server_router(), *routers_[static_cast<size_t>(server_router() - 1)].lan);
  if (name == "gw-client")
    return router_at(client_router(), *routers_[static_cast<size_t>(client_router() - 1)].lan);
  if (auto addr = NetAddress::parse(name)) {
    for (size_t id = 0; id < net_.node_count(); ++id) {
      const Node& n = net_.node(NodeId{static_cast<uint32_t>(id)});
      if (n.owns(*addr)) return Endpoint{n.id(), *addr, node_mac(n.id())};
    }
  }
  throw ConfigError("unknown endpoint '" + name + "'");
}

int World::attached_router(const Endpoint& e) const {
  if (const int r = router_index(e.node)) return r;
  return e.node == server_ ? server_router() : client_router();
}

void World::start_control_plane() {
  const int64_t poll_us = scenario_.mii.poll_interval_ms * 1000;
  const int64_t lacp_us = scenario_.lacp.tx_interval.us();
  for (auto& adj : adjacency_) {
    for (Bond* b : {adj.bond_a, adj.bond_b}) {
      if (b == nullptr) continue;
      const SimTime phase = SimTime::micros(rng_.between(0, poll_us - 1));
      std::vector<SimTime> offsets;
      for (size_t m = 0; m < b->members().size(); ++m)
        offsets.push_back(SimTime::micros(rng_.between(0, lacp_us - 1)));
      b->start(phase, offsets);
    }
  }
  const int64_t hello_us = scenario_.routing.hello_interval_s * 1'000'000;
  for (auto& info : routers_) {
    std::vector<SimTime> phases;
    for (size_t i = 0; i < net_.node(info.id).interface_count(); ++i)
      phases.push_back(SimTime::micros(rng_.between(0, hello_us - 1)));
    info.routing->start(phases);
  }
}

bool World::converged() const {
  for (const auto& info : routers_) {
    for (const auto& [adj, iface] : info.adjacency_iface)
      if (!info.routing->neighbor_on(iface)) return false;
    const auto& routes = net_.node(info.id).routes();
    for (uint32_t n : expected_networks_)
      if (!routes.count(n)) return false;
  }
  for (const Bond* b : all_bonds())
    if (b->active().size() != b->members().size()) return false;
  return true;
}

SimTime World::converge() {
  const SimTime cap = sched_.now() + at_seconds(scenario_.convergence_cap_s);
  while (!converged()) {
    if (sched_.now() >= cap)
      throw SimulationError("routing did not converge within " +
                            std::to_string(scenario_.convergence_cap_s) + " s");
    sched_.run_until(sched_.now() + SimTime::millis(100));
  }
  // Let the last SPF run land before traffic starts.
  const SimTime settle = sched_.now() + SimTime::millis(scenario_.routing.spf_delay_ms + 500);
  sched_.run_until(settle);
  const int64_t s = (settle.us() + 999'999) / 1'000'000;
  return SimTime::seconds(s);
}

Flow& World::add_service(const ServiceSpec& spec, SimTime t0, double duration_s) {
  const Endpoint src = endpoint(spec.src);
  const Endpoint dst = endpoint(spec.dst);
  const SimTime start = t0 + at_seconds(spec.start_s);
  const SimTime stop = t0 + at_seconds(spec.stop_s.value_or(duration_s));
  std::unique_ptr<Flow> f;
  switch (spec.type) {
    case ServiceType::kVoice:
      f = std::make_unique<VoipFlow>(net_, metrics_, spec.name, src, dst, spec.voice);
      break;
    case ServiceType::kVideo:
      f = std::make_unique<VideoFlow>(net_, metrics_, spec.name, src, dst, spec.video);
      break;
    case ServiceType::kData:
      f = std::make_unique<DataFlow>(net_, metrics_, spec.name, src, dst, spec.data);
      break;
    case ServiceType::kProbe:
      f = std::make_unique<ProbeFlow>(net_, metrics_, spec.name, src, dst, spec.probe);
      break;
    case ServiceType::kCbr:
      f = std::make_unique<CbrFlow>(net_, metrics_, spec.name, src, dst, spec.cbr);
      break;
  }
  f->start(start, stop);
  flows_.push_back(std::move(f));
  return *flows_.back();
}

void World::schedule_failure(const FailureSpec& f, SimTime t0) {
  int adj = 0;
  if (f.target.rfind("bond", 0) == 0) adj = std::atoi(f.target.c_str() + 4);
  if (adj < 1 || adj > routers() || f.target != "bond" + std::to_string(adj))
    throw ConfigError("unknown failure target '" + f.target + "' (expected bond1..bond" +
                      std::to_string(routers()) + ")");
  const auto& ls = links(adj);
  std::vector<LinkId> chosen;
  if (f.member) {
    if (*f.member >= static_cast<int>(ls.size())) {
      if (scenario_.mode == Mode::kBonded)
        throw ConfigError("failure target " + f.target + " has no member " +
                          std::to_string(*f.member));
      // The single-link topology has only member 0; other members do not exist.
      notes_.push_back("failure on " + f.target + " member " + std::to_string(*f.member) +
                       " skipped: no such link in SINGLE_LINK mode");
      return;
    }
    chosen.push_back(ls[static_cast<size_t>(*f.member)]);
  } else {
    chosen = ls;
  }
  const bool up = f.action == FailureAction::kRestore;
  const SimTime at = t0 + at_seconds(f.at_s);
  for (LinkId l : chosen) net_.schedule_link_state(l, up, at);
  notes_.push_back(std::string(up ? "RESTORE " : "CUT ") + f.target +
                   (f.member ? " member " + std::to_string(*f.member) : std::string(" all")) +
                   " at +" + Milli::ratio((at - t0).us(), 1000).str() + " s");
}

std::optional<size_t> World::interface_toward(int r, int adjacency) const {
  for (const auto& [adj, iface] : routers_.at(static_cast<size_t>(r - 1)).adjacency_iface)
    if (adj == adjacency) return iface;
  return std::nullopt;
}

std::optional<World::PathHop> World::first_adjacency(const Endpoint& from,
                                                     const Endpoint& to) const {
  const int r = attached_router(from);
  const Node& node = net_.node(router(r));
  if (node.owns(to.addr)) return std::nullopt;
  auto it = node.routes().find(to.addr.network);
  if (it == node.routes().end()) return std::nullopt;
  for (const auto& [adj, iface] : routers_.at(static_cast<size_t>(r - 1)).adjacency_iface)
    if (iface == it->second.interface) return PathHop{adj, r};
  return std::nullopt;
}

LinkId World::carrying_link(const PathHop& hop, const Endpoint& to) const {
  const Adjacency& adj = adjacency_.at(static_cast<size_t>(hop.adjacency - 1));
  const Bond* b = hop.from_router == adj.a ? adj.bond_a : adj.bond_b;
  if (b == nullptr) return adj.links.front();
  const auto& active = b->active();
  if (active.empty()) throw SimulationError("bond " + b->name() + " has no active member");
  const PortId p = active[to.mac.last_octet() % active.size()];
  return *net_.port(p).link;
}

RunResult World::finalize(SimTime t0) {
  RunResult r;
  r.scenario = scenario_.name;
  r.mode = scenario_.mode;
  r.seed = scenario_.seed;
  r.t0 = t0;

  for (const auto& f : flows_) {
    for (uint32_t c : f->conversations()) {
      const auto* st = metrics_.stats(c);
      if (st != nullptr && st->reported) r.qos.push_back(metrics_.report(c));
      if (st != nullptr) r.violations.voice_additivity += st->voice_additivity_errors;
    }
    if (auto* p = dynamic_cast<const ProbeFlow*>(f.get())) r.downtime.push_back(p->downtime());
    if (auto* d = dynamic_cast<const DataFlow*>(f.get()); d != nullptr && !d->completed())
      ++r.violations.incomplete_transfers;
    r.flows.push_back(f->record());
  }
  for (const auto& c : route_log_)
    if (c.at >= t0) r.routes.push_back(c);

  const auto in_flight = net_.in_flight_by_conversation();
  for (uint32_t c = 0; c < net_.conversation_count(); ++c) {
    ConversationAudit a;
    a.label = net_.conversation_label(c);
    a.originated = net_.originated(c);
    a.delivered = net_.delivered(c);
    for (size_t k = 0; k < kDropReasons; ++k) {
      a.drops[k] = net_.drops().count(c, static_cast<DropReason>(k));
      r.drops[k] += a.drops[k];
    }
    a.in_flight = in_flight[c];
    if (!a.balanced()) ++r.violations.conservation;

    // Second, independent tally: the flow-side counters kept by metrics.
    if (const auto* st = metrics_.stats(c); st != nullptr && st->reported) {
      uint64_t lost_net = a.in_flight;
      for (auto d : a.drops) lost_net += d;
      const LossFigure flow_side = packet_loss(st->sent, st->delivered);
      const LossFigure net_side =
          packet_loss(a.originated, a.originated >= lost_net ? a.originated - lost_net : 0);
      if (st->sent != a.originated || st->delivered != a.delivered ||
          flow_side.pct != net_side.pct || flow_side.undefined != net_side.undefined)
        ++r.violations.loss_mismatch;
    }
    r.audit.push_back(std::move(a));
  }

  for (const Bond* b : all_bonds()) {
    r.violations.ordering += b->ledger().ordering_violations();
    r.violations.duplicate += b->ledger().duplicate_violations();
    r.bonds.push_back(BondSummary{b->name(), b->tx_frames(), b->rx_frames(), b->active().size(),
                                  b->members().size(), b->failovers()});
  }
  r.warnings = scenario_.warnings;
  for (const auto& w : net_.warnings()) r.warnings.push_back(w);
  r.notes = notes_;
  return r;
}

}  // namespace lagsim
