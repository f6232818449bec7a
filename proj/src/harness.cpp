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

#include "lagsim/harness.hpp"

#include <cmath>
#include <exception>
#include <map>

namespace lagsim {

Violations& Violations::operator+=(const Violations& o) {
  ordering += o.ordering;
  duplicate += o.duplicate;
  conservation += o.conservation;
  loss_mismatch += o.loss_mismatch;
  voice_additivity += o.voice_additivity;
  incomplete_transfers += o.incomplete_transfers;
  return *this;
}

bool ConversationAudit::balanced() const {
  uint64_t accounted = delivered + in_flight;
  for (auto d : drops) accounted += d;
  return accounted == originated;
}

RunResult run(const Scenario& s) { return run(s, s.mode, s.seed); }

RunResult run(const Scenario& base, Mode mode, uint64_t seed) {
  Scenario s = base;
  s.mode = mode;
  s.seed = seed;
  World w(s, seed);
  w.start_control_plane();
  const SimTime t0 = w.converge();
  for (const auto& sv : s.services) w.add_service(sv, t0, s.duration_s);
  for (const auto& f : s.failures) w.schedule_failure(f, t0);
  const SimTime end = t0 + SimTime::micros(std::llround((s.duration_s + s.drain_s) * 1e6));
  w.scheduler().run_until(end);
  return w.finalize(t0);
}

std::vector<TrialSpec> plan_trials(const Scenario& s, uint64_t seed) {
  // Only a batch needs the cut inside the run.
  if (s.batch.cut_at_s >= s.duration_s)
    throw ConfigError("batch.cut_at_s must be < duration_s");
  std::vector<TrialSpec> out;
  for (int obs = 1; obs <= s.topology.routers; ++obs)
    for (const auto& target : s.batch.targets)
      for (int k = 0; k < s.batch.trials_per_cell; ++k) {
        TrialSpec t;
        t.index = out.size();
        t.observer = obs;
        t.target = target;
        t.seed = derive_seed(seed, t.index);
        out.push_back(t);
      }
  return out;
}

TrialResult run_trial(const Scenario& s, const TrialSpec& t) {
  TrialResult tr;
  tr.spec = t;
  tr.cell = "192.168." + std::to_string(t.observer) + ".0/" + t.target;

  World w(s, t.seed);
  w.start_control_plane();
  const SimTime t0 = w.converge();
  for (const auto& sv : s.services)
    if (sv.type != ServiceType::kProbe) w.add_service(sv, t0, s.duration_s);

  const Endpoint target = w.endpoint(t.target);
  const int attached = w.attached_router(target);
  // An observer cannot watch its own attached network across a bond; the
  // host on the opposite LAN probes instead.
  if (t.observer != attached)
    tr.prober = "R" + std::to_string(t.observer);
  else
    tr.prober = attached == w.server_router() ? "client1" : "server";
  const Endpoint prober = w.endpoint(tr.prober);

  ServiceSpec probe;
  probe.type = ServiceType::kProbe;
  probe.name = tr.cell;
  probe.src = tr.prober;
  probe.dst = t.target;
  for (const auto& sv : s.services)
    if (sv.type == ServiceType::kProbe) probe.probe = sv.probe;  // timers only
  w.add_service(probe, t0, s.duration_s);

  const auto hop = w.first_adjacency(prober, target);
  if (!hop)
    throw SimulationError("trial " + tr.cell + ": path from " + tr.prober +
                          " crosses no adjacency");
  const int64_t jitter_us = s.batch.cut_jitter_ms * 1000;
  const int64_t phase = jitter_us > 0 ? w.rng().between(0, jitter_us - 1) : 0;
  tr.cut_at = SimTime::micros(std::llround(s.batch.cut_at_s * 1e6) + phase);
  std::vector<LinkId> cut;
  if (s.batch.cut == CutKind::kSingle) {
    cut.push_back(w.carrying_link(*hop, target));
    tr.cut = "bond" + std::to_string(hop->adjacency) + " link" + std::to_string(cut[0].value);
  } else {
    cut = w.links(hop->adjacency);
    tr.cut = "bond" + std::to_string(hop->adjacency) + " all";
  }
  for (LinkId l : cut) w.net().schedule_link_state(l, false, t0 + tr.cut_at);

  const SimTime end = t0 + SimTime::micros(std::llround((s.duration_s + s.drain_s) * 1e6));
  w.scheduler().run_until(end);
  tr.run = w.finalize(t0);
  tr.run.notes.push_back("cut " + tr.cut + " at +" + Milli::ratio(tr.cut_at.us(), 1000).str() +
                         " s, prober " + tr.prober);
  for (const auto& d : tr.run.downtime) {
    if (d.label != tr.cell) continue;
    tr.downtime_us = d.total_us();
    for (const auto& e : d.episodes) tr.timeouts += e.timeout_count;
  }
  return tr;
}

BatchResult summarize(const Scenario& s, std::vector<TrialResult> trials) {
  BatchResult b;
  b.scenario = s.name;
  b.mode = s.mode;
  b.seed = s.seed;
  std::vector<int64_t> all;
  std::map<std::string, size_t> index;
  std::vector<std::vector<int64_t>> per_cell;
  for (const auto& t : trials) {
    all.push_back(t.downtime_us);
    b.violations += t.run.violations;
    auto [it, fresh] = index.try_emplace(t.cell, b.cells.size());
    if (fresh) {
      b.cells.push_back(DowntimeCell{t.cell, 0, 0, Milli{}});
      per_cell.emplace_back();
    }
    DowntimeCell& c = b.cells[it->second];
    ++c.trials;
    c.timeouts += t.timeouts;
    per_cell[it->second].push_back(t.downtime_us);
  }
  for (size_t i = 0; i < b.cells.size(); ++i) b.cells[i].mean_ms = aggregate_downtime_us(per_cell[i]);
  if (!all.empty()) b.mean_ms = aggregate_downtime_us(all);
  b.trials = std::move(trials);
  return b;
}

BatchResult run_batch_serial(const Scenario& s) {
  const auto plan = plan_trials(s, s.seed);
  std::vector<TrialResult> results;
  results.reserve(plan.size());
  for (const auto& t : plan) results.push_back(run_trial(s, t));
  return summarize(s, std::move(results));
}

BatchResult run_batch(const Scenario& s) {
  const auto plan = plan_trials(s, s.seed);
  const long n = static_cast<long>(plan.size());
  std::vector<TrialResult> results(plan.size());
  std::vector<std::exception_ptr> errors(plan.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    try {
      results[static_cast<size_t>(i)] = run_trial(s, plan[static_cast<size_t>(i)]);
    } catch (...) {
      errors[static_cast<size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return summarize(s, std::move(results));
}

std::vector<CompareRow> compare(const RunResult& bonded, const RunResult& single) {
  if (bonded.qos.size() != single.qos.size())
    throw ConfigError("compare: service sets differ (" + std::to_string(bonded.qos.size()) +
                      " vs " + std::to_string(single.qos.size()) + " services)");
  std::vector<CompareRow> rows;
  for (size_t i = 0; i < bonded.qos.size(); ++i) {
    const QosReport& a = bonded.qos[i];
    const QosReport& b = single.qos[i];
    if (a.service != b.service)
      throw ConfigError("compare: service sets differ ('" + a.service + "' vs '" + b.service + "')");
    rows.push_back(CompareRow{a.service, a, b, a.delay_ms - b.delay_ms, a.jitter_ms - b.jitter_ms,
                              a.throughput_mbps - b.throughput_mbps, a.loss_pct - b.loss_pct});
  }
  return rows;
}

}  // namespace lagsim
