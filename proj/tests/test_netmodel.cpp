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

#include <doctest.h>

#include <vector>

#include "lagsim/engine.hpp"
#include "lagsim/netmodel.hpp"

using namespace lagsim;

namespace {

struct Pair {
  Scheduler sched;
  Network net{sched};
  NodeId a = net.add_node("A", NodeRole::kHost);
  NodeId b = net.add_node("B", NodeRole::kHost);
  PortId pa = net.add_port(a, 100'000'000, 100);
  PortId pb = net.add_port(b, 100'000'000, 100);
  LinkId link = net.connect(pa, pb, 5);
  uint32_t conv = net.new_conversation("test");
  std::vector<Frame> got;

  Pair() {
    net.port(pb).on_receive = [this](Frame&& f) {
      f.received_at = sched.now();
      got.push_back(std::move(f));
    };
  }
  Frame frame(uint32_t size) {
    Frame f;
    f.size_bytes = size;
    f.conversation = conv;
    net.stamp(f);
    return f;
  }
};

// Independent admission oracle: a frame at t is admitted iff, for every
// earlier admitted time s, burst + rate*(t-s) - admitted[s, t) >= 1 frame
// (min-plus form of a token bucket that starts full).
std::vector<bool> bucket_oracle(const std::vector<int64_t>& times_us, int64_t fps) {
  const int64_t unit = 1'000'000;  // one frame in fps*us units
  const int64_t burst = std::max<int64_t>(unit, fps * 1000);
  std::vector<int64_t> admitted;
  std::vector<bool> out;
  for (int64_t t : times_us) {
    bool ok = burst >= unit;
    for (size_t i = 0; ok && i < admitted.size(); ++i) {
      const int64_t s = admitted[i];
      const auto count = static_cast<int64_t>(admitted.size() - i);
      if (burst + fps * (t - s) - count * unit < unit) ok = false;
    }
    if (ok) admitted.push_back(t);
    out.push_back(ok);
  }
  return out;
}

}  // namespace

TEST_CASE("connect") {
  Pair p;
  CHECK(p.net.link(p.link).up);
  CHECK(p.net.port(p.pa).carrier);
  CHECK(p.net.port(p.pb).carrier);
  CHECK(p.net.peer(p.pa) == p.pb);
  const PortId extra = p.net.add_port(p.a, 100'000'000, 10);
  CHECK_THROWS_AS(p.net.connect(p.pa, extra, 5), SimulationError);
  const PortId self = p.net.add_port(p.a, 100'000'000, 10);
  CHECK(p.net.warnings().empty());
  p.net.connect(extra, self, 5);  // same node: allowed, flagged
  CHECK(p.net.warnings().size() == 1);
}

TEST_CASE("serialization plus propagation") {
  Pair p;
  p.net.transmit(p.pa, p.frame(1500));
  p.sched.run_until(SimTime::seconds(1));
  REQUIRE(p.got.size() == 1);
  // 1500 * 8 / 100e6 s = 120 us, plus 5 us on the wire.
  CHECK(p.got[0].received_at->us() == 125);
}

TEST_CASE("back-to-back frames keep exact line rate") {
  Pair p;
  // 1518 B = 121.44 us each; 100 frames = 12144 us exactly.
  for (int i = 0; i < 100; ++i) p.net.transmit(p.pa, p.frame(1518));
  p.sched.run_until(SimTime::seconds(1));
  REQUIRE(p.got.size() == 100);
  CHECK(p.got.back().received_at->us() == 12144 + 5);
  for (size_t i = 1; i < p.got.size(); ++i)
    CHECK(p.got[i].seq_in_conversation == p.got[i - 1].seq_in_conversation + 1);  // FIFO
}

TEST_CASE("drops: carrier down, queue full") {
  Pair p;
  p.net.set_link_state(p.link, false);
  p.net.transmit(p.pa, p.frame(32));
  CHECK(p.net.drops().count(p.conv, DropReason::kLinkDown) == 1);
  p.net.set_link_state(p.link, true);
  p.net.port(p.pa).queue_capacity_frames = 3;
  for (int i = 0; i < 5; ++i) p.net.transmit(p.pa, p.frame(1500));
  CHECK(p.net.drops().count(p.conv, DropReason::kQueueFull) == 2);
  p.sched.run_until(SimTime::seconds(1));
  CHECK(p.got.size() == 3);
}

TEST_CASE("cut discards in-flight frames") {
  Pair p;
  for (int i = 0; i < 3; ++i) p.net.transmit(p.pa, p.frame(1500));
  p.net.schedule_link_state(p.link, false, SimTime::micros(10));
  p.sched.run_until(SimTime::seconds(1));
  CHECK(p.got.empty());
  CHECK(p.net.drops().count(p.conv, DropReason::kLinkDown) == 3);
  CHECK_FALSE(p.net.port(p.pa).carrier);
  CHECK_FALSE(p.net.port(p.pb).carrier);
}

TEST_CASE("down then up at the same instant") {
  Pair p;
  p.net.transmit(p.pa, p.frame(1500));
  p.net.schedule_link_state(p.link, false, SimTime::micros(50));
  p.net.schedule_link_state(p.link, true, SimTime::micros(50));
  p.sched.run_until(SimTime::seconds(1));
  CHECK(p.net.port(p.pa).carrier);
  CHECK(p.net.link(p.link).up);
  CHECK(p.got.empty());
  CHECK(p.net.drops().count(p.conv, DropReason::kLinkDown) == 1);
  // A poll at the change instant still sees the pre-change value.
  CHECK(p.net.port(p.pa).carrier_seen_at(SimTime::micros(50)));
  p.net.set_link_state(p.link, true);  // no-op
  CHECK(p.net.port(p.pa).carrier);
}

TEST_CASE("router forwarding: no route and overload") {
  Scheduler sched;
  Network net(sched);
  const NodeId r = net.add_node("R", NodeRole::kRouter, 10'000);
  const NodeId h = net.add_node("H", NodeRole::kHost);
  const PortId rp = net.add_port(r, 100'000'000, 1000);
  const PortId hp = net.add_port(h, 100'000'000, 1000);
  net.connect(rp, hp, 5);
  uint64_t got = 0;
  net.port(hp).on_receive = [&](Frame&&) { ++got; };
  Node& router = net.node(r);
  auto iface = std::make_unique<PortInterface>(net, rp);
  iface->address = NetAddress{NetAddress::parse_network("192.168.1.0"), 1};
  router.add_interface(std::move(iface));
  const uint32_t c = net.new_conversation("x");
  auto frame = [&](const char* net_str) {
    Frame f;
    f.size_bytes = 64;
    f.conversation = c;
    f.dst_addr = NetAddress{NetAddress::parse_network(net_str), 2};
    net.stamp(f);
    return f;
  };

  router.deliver_local(frame("192.168.9.0"));
  CHECK(net.drops().count(c, DropReason::kNoRoute) == 1);

  router.routes()[NetAddress::parse_network("192.168.1.0")] = Route{
      NetAddress::parse_network("192.168.1.0"), 0, std::nullopt, 0};
  // 11 frames inside one millisecond at 10000 fps: the 1 ms burst holds 10.
  // The no-route frame above already used one token at t=0, so start later.
  sched.run_until(SimTime::seconds(1));
  for (int i = 0; i < 11; ++i) router.deliver_local(frame("192.168.1.0"));
  sched.run_until(SimTime::seconds(2));
  CHECK(got == 10);
  CHECK(net.drops().count(c, DropReason::kOverload) == 1);
}

TEST_CASE("forwarding budget matches the token-bucket oracle") {
  Rng rng(3);
  for (int64_t fps : {1, 500, 10'000, 20'000}) {
    ForwardingBudget budget(fps);
    std::vector<int64_t> times;
    int64_t t = 0;
    for (int i = 0; i < 3000; ++i) {
      t += rng.between(0, 150);
      times.push_back(t);
    }
    const auto expect = bucket_oracle(times, fps);
    for (size_t i = 0; i < times.size(); ++i)
      REQUIRE(budget.admit(SimTime::micros(times[i])) == expect[i]);
  }
  ForwardingBudget unlimited(0);
  for (int i = 0; i < 100; ++i) CHECK(unlimited.admit(SimTime{}));
}

TEST_CASE("addresses") {
  CHECK(NetAddress::parse_network("192.168.1.0") == 0xC0A80100u);
  CHECK_THROWS(NetAddress::parse_network("192.168.1"));
  CHECK_THROWS(NetAddress::parse_network("300.1.1.0"));
  const auto a = NetAddress::parse("192.168.30.3");
  REQUIRE(a);
  CHECK(a->network == 0xC0A81E00u);
  CHECK(a->host == 3);
  CHECK(a->to_string() == "192.168.30.3");
  CHECK(MacAddress::from_index(5).to_string() == "02:00:00:00:00:05");
  CHECK(MacAddress::from_index(5).last_octet() == 5);
}

TEST_CASE("frames are never modified in transit") {
  Pair p;
  Frame f = p.frame(200);
  f.app_seq = 77;
  const Frame copy = f;
  p.net.transmit(p.pa, std::move(f));
  p.sched.run_until(SimTime::seconds(1));
  REQUIRE(p.got.size() == 1);
  CHECK(p.got[0].same_content(copy));
}
