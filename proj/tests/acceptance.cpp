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


// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// when a criterion fails, unless it is listed with --allow-fail.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "bond_fixture.hpp"
#include "lagsim/harness.hpp"
#include "lagsim/metrics.hpp"
#include "reference_values.hpp"
#include "routing_oracle.hpp"
#include "wire_fixture.hpp"

using namespace lagsim;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string ms(int64_t us) { return Milli::ratio(us, 1).str(); }
std::string secs(int64_t us) { return Milli::ratio(us, 1000).str(); }

const std::vector<std::string> kScenarios = {"default",        "failover_single",
                                             "failover_dual",  "failover_dual_carrier",
                                             "qos_concurrent", "qos_sequential"};

Scenario scenario(const std::string& name) { return load_scenario("scenarios/" + name + ".yaml"); }

// Single-cut batch mean, shared by criteria 3 and 4.
std::optional<Milli> g_single_mean;

// ---------------------------------------------------------------- 1

Outcome c1_downtime_fixture() {
  std::vector<DowntimeReport> trials;
  for (int64_t us : reference::all_single_link_downtimes()) {
    DowntimeReport d;
    d.label = "fixture";
    d.episodes.push_back(DowntimeEpisode{SimTime{}, 0, us});
    trials.push_back(d);
  }
  const Milli m = aggregate_downtime(trials);
  return {m.str() == "386.458" && m.thousandths == reference::kMeanFailoverThousandths,
          "mean of 16 testbed downtimes = " + m.str() + " ms"};
}

// ---------------------------------------------------------------- 2

Outcome c2_voice_model() {
  constexpr int64_t kFixedNs = 99'766'300;  // 10 + 3.75 + 20 + 0.0163 + 1 + 20 + 45 ms
  // 218 B at 1.744 Gb/s serializes in exactly 1 us, so the wire adds 26.030 ms.
  testing::Wire w(26'029, 1'744'000'000);
  uint64_t frames = 0, bad = 0;
  w.net.on_delivered = [&](const Frame& f) {
    w.metrics.on_delivered(f);
    if (f.kind != FrameKind::kVoice) return;
    ++frames;
    if (one_way_delay_ns(f) - network_delay_ns(f) != kFixedNs) ++bad;
    if (network_delay_ns(f) != 26'030'000) ++bad;
  };
  VoipFlow v(w.net, w.metrics, "voice", w.ea, w.eb);
  v.start(SimTime{}, SimTime::seconds(30));
  w.sched.run_until(SimTime::seconds(31));
  const QosReport r = w.metrics.report(v.forward_conversation());
  const bool wire_ok = bad == 0 && frames == 3000 &&
                       std::llabs(r.delay_ms.thousandths - reference::kVoiceDelayThousandths) <= 1;

  // Every voice frame of a full default run.
  Scenario s = scenario("default");
  World world(s, s.seed);
  world.start_control_plane();
  const SimTime t0 = world.converge();
  for (const auto& sv : s.services) world.add_service(sv, t0, s.duration_s);
  world.scheduler().run_until(t0 + SimTime::seconds(static_cast<int64_t>(s.duration_s + s.drain_s)));
  const RunResult run = world.finalize(t0);
  uint64_t voice_frames = 0;
  bool sums_ok = true;
  for (const auto& [c, st] : world.metrics().all()) {
    if (st.kind != FrameKind::kVoice) continue;
    voice_frames += st.delivered;
    sums_ok &= st.delay_sum_ns - st.net_delay_sum_ns ==
               static_cast<int64_t>(st.delivered) * kFixedNs;
  }
  const bool run_ok = sums_ok && voice_frames > 0 && run.violations.voice_additivity == 0;
  return {wire_ok && run_ok,
          fmt("network 26.030 ms -> reported %s ms; %llu wire frames, %llu run frames, "
              "additivity errors %llu",
              r.delay_ms.str().c_str(), static_cast<unsigned long long>(frames),
              static_cast<unsigned long long>(voice_frames),
              static_cast<unsigned long long>(bad + run.violations.voice_additivity))};
}

// ---------------------------------------------------------------- 3

Outcome c3_single_cut() {
  Scenario s = scenario("default");
  s.batch.cut = CutKind::kSingle;
  s.batch.trials_per_cell = 1;
  const BatchResult b = run_batch(s);
  g_single_mean = b.mean_ms;
  bool ok = b.trials.size() == 16;
  int64_t lo = INT64_MAX, hi = 0;
  uint64_t ord = 0, dup = 0, incomplete = 0;
  for (const auto& t : b.trials) {
    lo = std::min(lo, t.downtime_us);
    hi = std::max(hi, t.downtime_us);
    ok &= t.downtime_us >= 20'000 && t.downtime_us <= 600'000 && t.downtime_us % 20'000 == 0;
    ord += t.run.violations.ordering;
    dup += t.run.violations.duplicate;
    incomplete += t.run.violations.incomplete_transfers;
    for (const auto& f : t.run.flows)
      if (f.service != t.cell) ok &= f.completed;
  }
  ok &= ord == 0 && dup == 0 && incomplete == 0;
  return {ok, fmt("16 trials, downtime %s..%s ms, mean %s ms; ordering %llu, duplicate %llu, "
                  "incomplete %llu",
                  ms(lo).c_str(), ms(hi).c_str(), b.mean_ms.str().c_str(),
                  static_cast<unsigned long long>(ord), static_cast<unsigned long long>(dup),
                  static_cast<unsigned long long>(incomplete))};
}

// ---------------------------------------------------------------- 4

Outcome c4_dual_cut() {
  if (!g_single_mean) c3_single_cut();
  Scenario s = scenario("failover_dual");
  std::vector<int64_t> all;
  bool in_range = true;
  for (uint64_t seed : {s.seed, s.seed + 1, s.seed + 2}) {
    s.seed = seed;
    for (const auto& t : run_batch(s).trials) {
      all.push_back(t.downtime_us);
      in_range &= t.downtime_us > 200'000 && t.downtime_us <= 40'200'000;
    }
  }
  const int64_t lo = *std::min_element(all.begin(), all.end());
  const int64_t hi = *std::max_element(all.begin(), all.end());
  const Milli mean = aggregate_downtime_us(all);
  const bool much_longer = mean.thousandths >= 10 * g_single_mean->thousandths;
  const bool has_short = lo <= reference::kDualLinkNet1Us && reference::kDualLinkNet1Us <= hi;
  const bool has_long = lo <= reference::kDualLinkNet2Us && reference::kDualLinkNet2Us <= hi;

  const BatchResult c = run_batch(scenario("failover_dual_carrier"));
  int64_t chi = 0;
  for (const auto& t : c.trials) chi = std::max(chi, t.downtime_us);
  const bool carrier_ok = !c.trials.empty() && chi < 2'000'000;

  return {in_range && much_longer && has_short && has_long && carrier_ok,
          fmt("dead-interval: %zu trials in [%s, %s] s, mean %s s (single %s ms); "
              "15.712 s inside: %s, 37.493 s inside: %s; carrier-triggered max %s s",
              all.size(), secs(lo).c_str(), secs(hi).c_str(), secs(mean.thousandths).c_str(),
              g_single_mean->str().c_str(), has_short ? "yes" : "no", has_long ? "yes" : "no",
              secs(chi).c_str())};
}

// ---------------------------------------------------------------- 5

struct FlapRun {
  uint64_t frames = 0;
  uint64_t ordering = 0;
  uint64_t duplicate = 0;
  uint64_t lost = 0;
  uint64_t delivered = 0;
  bool conserved = false;
};

FlapRun flap_run(DistributionPolicy policy) {
  constexpr int kConversations = 8;
  constexpr uint64_t kFrames = 100'000;
  testing::BondPair p(2, MiiConfig{100, 0, 300}, policy, {}, {5, 2000});
  p.start();
  Rng rng(5);
  const SimTime begin = SimTime::seconds(2);
  // One flap per 900 ms slot, so flaps never overlap on a link.
  for (int k = 0; k < 10; ++k) {
    const size_t member = static_cast<size_t>(rng.between(0, 1));
    const SimTime down = begin + SimTime::millis(100 + 900 * k + rng.between(0, 200));
    const SimTime up = down + SimTime::millis(rng.between(50, 600));
    p.net.schedule_link_state(p.links[member], false, down);
    p.net.schedule_link_state(p.links[member], true, up);
  }
  std::vector<uint32_t> conv;
  for (int c = 0; c < kConversations; ++c) conv.push_back(p.net.new_conversation("c" + std::to_string(c)));
  uint64_t sent = 0;
  std::function<void()> tick = [&] {
    const auto c = static_cast<uint32_t>(rng.between(0, kConversations - 1));
    p.ba->bond_transmit(p.frame(conv[c], c, 200));
    if (++sent < kFrames) p.sched.schedule_in(SimTime::micros(100), tick);
  };
  p.sched.schedule(begin, tick);
  p.sched.run_until(begin + SimTime::seconds(12));

  FlapRun r;
  r.frames = sent;
  r.ordering = p.bb->ledger().ordering_violations();
  r.duplicate = p.bb->ledger().duplicate_violations();
  r.delivered = p.at_b.size();
  uint64_t originated = 0;
  for (uint32_t c : conv) {
    originated += p.net.originated(c);
    for (size_t k = 0; k < kDropReasons; ++k) r.lost += p.net.drops().count(c, static_cast<DropReason>(k));
  }
  r.conserved = originated == sent && r.delivered + r.lost == originated;
  return r;
}

Outcome c5_ordering() {
  const FlapRun d = flap_run(DistributionPolicy::kDestMacModN);
  const FlapRun rr = flap_run(DistributionPolicy::kRoundRobin);
  const bool ok = d.frames == 100'000 && d.conserved && d.ordering == 0 && d.duplicate == 0 &&
                  d.lost > 0 && rr.conserved && rr.ordering >= 1;
  return {ok, fmt("dest-MAC: %llu frames, %llu lost to flaps, ordering %llu, duplicate %llu; "
                  "round-robin (5 us / 2 ms members): ordering %llu",
                  static_cast<unsigned long long>(d.frames), static_cast<unsigned long long>(d.lost),
                  static_cast<unsigned long long>(d.ordering),
                  static_cast<unsigned long long>(d.duplicate),
                  static_cast<unsigned long long>(rr.ordering))};
}

// ---------------------------------------------------------------- 6

uint32_t net(const std::string& dotted) { return NetAddress::parse_network(dotted); }

Outcome c6_routing_oracle() {
  int mismatches = 0, entries = 0;
  for (unsigned mask = 0; mask < 16; ++mask) {
    World w(parse_scenario("mode: BONDED\n"), derive_seed(6, mask));
    w.start_control_plane();
    const SimTime t0 = w.converge();
    for (int i = 1; i <= 4; ++i)
      if (mask & (1u << (i - 1)))
        for (LinkId l : w.links(i)) w.net().schedule_link_state(l, false, t0 + SimTime::seconds(1));
    w.scheduler().run_until(t0 + SimTime::seconds(61));

    testing::RouteOracle o(4);
    for (uint32_t r = 0; r < 4; ++r) o.attach(r, net("10.255." + std::to_string(r + 1) + ".0"));
    o.attach(0, net("192.168.10.0"));
    o.attach(2, net("192.168.30.0"));
    for (uint32_t i = 1; i <= 4; ++i) {
      if (mask & (1u << (i - 1))) continue;
      const uint32_t a = i - 1, b = i % 4;
      o.link(a, b);
      o.attach(a, net("192.168." + std::to_string(i) + ".0"));
      o.attach(b, net("192.168." + std::to_string(i) + ".0"));
    }
    o.solve();
    for (uint32_t r = 0; r < 4; ++r) {
      const auto& got = w.net().node(w.router(static_cast<int>(r) + 1)).routes();
      const auto want = o.table(r);
      if (got.size() != want.size()) ++mismatches;
      for (const auto& [network, a] : want) {
        ++entries;
        const auto it = got.find(network);
        if (it == got.end() || it->second.cost != a.cost ||
            it->second.next_hop.has_value() != a.first_hop.has_value() ||
            (a.first_hop && *it->second.next_hop != w.router(static_cast<int>(*a.first_hop) + 1)))
          ++mismatches;
      }
    }
  }
  return {mismatches == 0, fmt("16 bond up/down patterns, %d route entries, %d mismatches",
                               entries, mismatches)};
}

// ---------------------------------------------------------------- 7

Outcome c7_conservation() {
  int runs = 0;
  uint64_t conservation = 0, mismatch = 0, unbalanced = 0, frames = 0;
  for (const auto& name : kScenarios) {
    const Scenario s = scenario(name);
    for (Mode m : {Mode::kBonded, Mode::kSingleLink}) {
      const RunResult r = run(s, m, s.seed);
      ++runs;
      conservation += r.violations.conservation;
      mismatch += r.violations.loss_mismatch;
      for (const auto& a : r.audit) {
        uint64_t lost = a.in_flight;
        for (auto d : a.drops) lost += d;
        if (a.originated != a.delivered + lost) ++unbalanced;
        frames += a.originated;
      }
    }
  }
  return {conservation == 0 && mismatch == 0 && unbalanced == 0,
          fmt("%d runs, %llu frames audited; unbalanced %llu, loss mismatches %llu", runs,
              static_cast<unsigned long long>(frames),
              static_cast<unsigned long long>(conservation + unbalanced),
              static_cast<unsigned long long>(mismatch))};
}

// ---------------------------------------------------------------- 8

Outcome c8_calibration() {
  bool ok = true;
  // Voice: 1500 frames per direction, 218 B each, 87.2 kb/s on the wire.
  testing::Wire vw;
  VoipFlow v(vw.net, vw.metrics, "voice", vw.ea, vw.eb);
  v.start(SimTime{}, SimTime::seconds(30));
  vw.sched.run_until(SimTime::seconds(31));
  const auto* st = vw.metrics.stats(v.forward_conversation());
  const double voice_bps = static_cast<double>(st->delivered_bits) / 30.0;
  ok &= v.frames_sent(0) == 1500 && v.frames_sent(1) == 1500;
  ok &= v.record().bytes_sent == 3000ull * 218;
  ok &= std::fabs(voice_bps - 87'200.0) <= 87.2;

  // Video: 928 kb/s of media, within one packet.
  testing::Wire ww;
  VideoFlow video(ww.net, ww.metrics, "video", ww.ea, ww.eb);
  video.start(SimTime{}, SimTime::seconds(30));
  ww.sched.run_until(SimTime::seconds(31));
  const int64_t want_bytes = int64_t{928'000} * 30 / 8;
  const int64_t media = static_cast<int64_t>(video.media_bytes());
  ok &= std::llabs(media - want_bytes) <= 1316;

  // Data alone on an idle single-link ring.
  Scenario s = parse_scenario(
      "name: plateau\nmode: SINGLE_LINK\nservices:\n"
      "  - {type: data, src: server, dst: client1}\n");
  const RunResult r = run(s);
  Milli wire_mbps{}, goodput{};
  for (const auto& q : r.qos)
    if (q.service == "data") wire_mbps = q.throughput_mbps;
  for (const auto& f : r.flows)
    if (f.service == "data") goodput = f.goodput_mbps;
  ok &= goodput.thousandths >= 85'000 && goodput.thousandths <= 99'000;

  return {ok, fmt("voice %llu+%llu frames, %.1f b/s; video %lld media bytes (target %lld); "
                  "data plateau %s Mb/s delivered file rate (%s Mb/s with headers)",
                  static_cast<unsigned long long>(v.frames_sent(0)),
                  static_cast<unsigned long long>(v.frames_sent(1)), voice_bps,
                  static_cast<long long>(media), static_cast<long long>(want_bytes),
                  goodput.str().c_str(), wire_mbps.str().c_str())};
}

// ---------------------------------------------------------------- 9

Outcome c9_determinism() {
  int compared = 0, differ = 0;
  for (const auto& name : kScenarios) {
    const Scenario s = scenario(name);
    const std::string a = run_csv(run(s));
    const std::string b = run_csv(run(s));
    ++compared;
    if (a != b) ++differ;
  }
  return {differ == 0, fmt("%d scenarios run twice, %d differ", compared, differ)};
}

// ---------------------------------------------------------------- 10

Outcome c10_jitter() {
  const Scenario s = scenario("qos_concurrent");
  const RunResult b = run(s, Mode::kBonded, s.seed);
  const RunResult l = run(s, Mode::kSingleLink, s.seed);
  const auto rows = compare(b, l);
  std::string detail;
  for (const auto& r : rows) {
    const char* lower = r.d_jitter.thousandths < 0   ? "bonded"
                        : r.d_jitter.thousandths > 0 ? "single"
                                                     : "equal";
    detail += fmt("%s %s/%s (%s); ", r.service.c_str(), r.bonded.jitter_ms.str().c_str(),
                  r.single.jitter_ms.str().c_str(), lower);
  }
  const bool emitted = !rows.empty() && rows.size() == b.qos.size() &&
                       !compare_csv(s.name, rows).empty();
  return {emitted, "emitted, not gated: " + detail};
}

struct Criterion {
  int id;
  double budget_s;
  Outcome (*fn)();
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> allowed;
  std::vector<int> only;
  app.add_option("--allow-fail", allowed, "criteria whose failure does not fail the run");
  app.add_option("--only", only, "run just these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all = {
      {1, 1, c1_downtime_fixture}, {2, 5, c2_voice_model},     {3, 30, c3_single_cut},
      {4, 60, c4_dual_cut},        {5, 30, c5_ordering},       {6, 10, c6_routing_oracle},
      {7, 60, c7_conservation},    {8, 10, c8_calibration},    {9, 10, c9_determinism},
      {10, 60, c10_jitter}};
  const std::set<int> allow(allowed.begin(), allowed.end());
  int unexpected = 0;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double took = std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
    if (took > c.budget_s) {
      o.pass = false;
      o.detail += fmt(" [over time budget %.0f s]", c.budget_s);
    }
    std::printf("criterion %2d: %s  (%.2f s)  %s\n", c.id, o.pass ? "PASS" : "FAIL", took,
                o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass && !allow.count(c.id)) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
