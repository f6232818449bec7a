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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lagsim/harness.hpp"

namespace lagsim {

namespace {

std::string field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string ms(SimTime t) { return Milli::ratio(t.us(), 1).str(); }  // us are thousandths of ms

std::string lower_mode(Mode m) { return m == Mode::kBonded ? "bonded" : "single"; }

void header(std::ostream& o, const std::string& scenario, Mode mode, uint64_t seed) {
  o << "# lagsim report\n";
  o << "# scenario=" << scenario << " mode=" << to_string(mode) << " seed=" << seed
    << " rng=" << Rng::algorithm() << "\n";
  o << "# jitter: voice=smoothed interarrival variation J+=(|D|-J)/16; "
       "video,data=mean |delay(i)-delay(i-1)|\n";
  o << "# delay: voice adds 99.7663 ms fixed codec-path components to network delay\n";
  o << "# throughput: on-wire bits (payload+headers) per service window; goodput in flows\n";
  o << "# times: ms relative to traffic start\n";
}

constexpr const char* kDowntimeCols = "scenario,mode,label,trials,timeouts,downtime_ms";
constexpr const char* kQosCols = "scenario,mode,service,delay_ms,jitter_ms,throughput_mbps,loss_pct";
constexpr const char* kRoutesCols = "scenario,mode,time_ms,router,network,old_next_hop,new_next_hop";
constexpr const char* kFlowsCols =
    "scenario,mode,service,start_ms,end_ms,frames_sent,bytes_sent,payload_bytes,retransmissions,"
    "completed,goodput_mbps";

void qos_rows(std::ostream& o, const std::string& scenario, const RunResult& r) {
  for (const auto& q : r.qos)
    o << field(scenario) << ',' << to_string(r.mode) << ',' << field(q.service) << ','
      << q.delay_ms.str() << ',' << q.jitter_ms.str() << ',' << q.throughput_mbps.str() << ','
      << q.loss_pct.str() << '\n';
}

void route_rows(std::ostream& o, const std::string& scenario, const RunResult& r) {
  for (const auto& c : r.routes)
    o << field(scenario) << ',' << to_string(r.mode) << ',' << ms(c.at - r.t0) << ','
      << c.router << ',' << NetAddress::format_network(c.network) << ','
      << c.old_next_hop.value_or("-") << ',' << c.new_next_hop.value_or("-") << '\n';
}

void flow_rows(std::ostream& o, const std::string& scenario, const RunResult& r) {
  for (const auto& f : r.flows)
    o << field(scenario) << ',' << to_string(r.mode) << ',' << field(f.service) << ','
      << ms(f.start - r.t0) << ',' << (f.end ? ms(*f.end - r.t0) : std::string("-")) << ','
      << f.frames_sent << ',' << f.bytes_sent << ',' << f.payload_bytes << ','
      << f.retransmissions << ',' << (f.completed ? "yes" : "no") << ','
      << f.goodput_mbps.str() << '\n';
}

void violations_block(std::ostream& o, const Violations& v) {
  o << "violations:\n";
  o << "  ORDERING_VIOLATION    " << v.ordering << "\n";
  o << "  DUPLICATE_VIOLATION   " << v.duplicate << "\n";
  o << "  CONSERVATION          " << v.conservation << "\n";
  o << "  LOSS_TALLY_MISMATCH   " << v.loss_mismatch << "\n";
  o << "  VOICE_ADDITIVITY      " << v.voice_additivity << "\n";
  o << "  INCOMPLETE_TRANSFER   " << v.incomplete_transfers << "\n";
  o << "  total                 " << v.total() << "\n";
}

std::string write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
  out.close();
  if (!out) throw std::runtime_error("write failed for " + p.string());
  return p.string();
}

std::filesystem::path prepare(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir + ": " + ec.message());
  return dir;
}

}  // namespace

std::string run_csv(const RunResult& r) {
  std::ostringstream o;
  header(o, r.scenario, r.mode, r.seed);
  o << "[downtime]\n" << kDowntimeCols << '\n';
  for (const auto& d : r.downtime) {
    uint64_t timeouts = 0;
    for (const auto& e : d.episodes) timeouts += e.timeout_count;
    o << field(r.scenario) << ',' << to_string(r.mode) << ',' << field(d.label) << ",1,"
      << timeouts << ',' << Milli::ratio(d.total_us(), 1).str() << '\n';
  }
  o << "\n[qos]\n" << kQosCols << '\n';
  qos_rows(o, r.scenario, r);
  o << "\n[routes]\n" << kRoutesCols << '\n';
  route_rows(o, r.scenario, r);
  o << "\n[flows]\n" << kFlowsCols << '\n';
  flow_rows(o, r.scenario, r);
  return o.str();
}

std::string run_summary(const RunResult& r) {
  std::ostringstream o;
  o << "scenario " << r.scenario << "  mode " << to_string(r.mode) << "  seed " << r.seed
    << "  rng " << Rng::algorithm() << "\n";
  o << "traffic start (t0) at " << ms(r.t0) << " ms after boot\n\n";
  o << "qos (delay/jitter ms, throughput/goodput Mb/s, loss %):\n";
  for (const auto& q : r.qos) {
    o << "  " << q.service << ": delay " << q.delay_ms.str() << "  jitter " << q.jitter_ms.str()
      << (q.jitter_undefined ? " (undefined: <2 frames)" : "") << "  throughput "
      << q.throughput_mbps.str() << "  goodput " << q.goodput_mbps.str() << "  loss "
      << q.loss_pct.str() << (q.loss_undefined ? " (undefined: nothing sent)" : "") << "  sent "
      << q.sent << "  delivered " << q.delivered << "\n";
  }
  o << "\ndowntime:\n";
  if (r.downtime.empty()) o << "  (no probes)\n";
  for (const auto& d : r.downtime) {
    o << "  " << d.label << ": " << Milli::ratio(d.total_us(), 1).str() << " ms in "
      << d.episodes.size() << " episode(s)\n";
    for (const auto& e : d.episodes)
      o << "    from +" << ms(e.start - r.t0) << " ms: " << e.timeout_count << " timeouts = "
        << Milli::ratio(e.downtime_us, 1).str() << " ms\n";
  }
  o << "\ndrops by reason:";
  for (size_t k = 0; k < kDropReasons; ++k)
    o << "  " << to_string(static_cast<DropReason>(k)) << " " << r.drops[k];
  o << "\n\nbonds:\n";
  if (r.bonds.empty()) o << "  (none)\n";
  for (const auto& b : r.bonds) {
    o << "  " << b.name << ": tx " << b.tx_frames << "  rx " << b.rx_frames << "  active "
      << b.active << "/" << b.members << "\n";
    for (const auto& f : b.failovers)
      if (f.at >= r.t0)
        o << "    +" << ms(f.at - r.t0) << " ms port" << f.port.value << (f.up ? " UP" : " DOWN")
          << " (active " << f.active_after << ")\n";
  }
  o << "\nroute changes: " << r.routes.size() << "\n";
  for (const auto& c : r.routes)
    o << "  +" << ms(c.at - r.t0) << " ms " << c.router << " "
      << NetAddress::format_network(c.network) << ": " << c.old_next_hop.value_or("-") << " -> "
      << c.new_next_hop.value_or("-") << "\n";
  o << "\nconservation (originated = delivered + drops + in flight):\n";
  for (const auto& a : r.audit) {
    if (a.balanced() && a.originated == a.delivered) continue;
    o << "  " << a.label << ": " << a.originated << " = " << a.delivered;
    for (size_t k = 0; k < kDropReasons; ++k)
      if (a.drops[k]) o << " + " << a.drops[k] << " " << to_string(static_cast<DropReason>(k));
    o << " + " << a.in_flight << " in flight" << (a.balanced() ? "" : "  MISMATCH") << "\n";
  }
  o << "\n";
  violations_block(o, r.violations);
  if (!r.notes.empty()) {
    o << "\nnotes:\n";
    for (const auto& n : r.notes) o << "  " << n << "\n";
  }
  if (!r.warnings.empty()) {
    o << "\nwarnings:\n";
    for (const auto& w : r.warnings) o << "  " << w << "\n";
  }
  return o.str();
}

std::string batch_csv(const BatchResult& b) {
  std::ostringstream o;
  header(o, b.scenario, b.mode, b.seed);
  o << "# batch: per-trial rows use scenario=<name>#<trial>\n";
  o << "[downtime]\n" << kDowntimeCols << '\n';
  int trials = 0;
  uint64_t timeouts = 0;
  for (const auto& c : b.cells) {
    o << field(b.scenario) << ',' << to_string(b.mode) << ',' << field(c.label) << ',' << c.trials
      << ',' << c.timeouts << ',' << c.mean_ms.str() << '\n';
    trials += c.trials;
    timeouts += c.timeouts;
  }
  o << field(b.scenario) << ',' << to_string(b.mode) << ",mean," << trials << ',' << timeouts
    << ',' << b.mean_ms.str() << '\n';
  auto name = [&](const TrialResult& t) { return b.scenario + "#" + std::to_string(t.spec.index); };
  o << "\n[qos]\n" << kQosCols << '\n';
  for (const auto& t : b.trials) qos_rows(o, name(t), t.run);
  o << "\n[routes]\n" << kRoutesCols << '\n';
  for (const auto& t : b.trials) route_rows(o, name(t), t.run);
  o << "\n[flows]\n" << kFlowsCols << '\n';
  for (const auto& t : b.trials) flow_rows(o, name(t), t.run);
  return o.str();
}

std::string batch_summary(const BatchResult& b) {
  std::ostringstream o;
  o << "failover batch " << b.scenario << "  mode " << to_string(b.mode) << "  seed " << b.seed
    << "  rng " << Rng::algorithm() << "  trials " << b.trials.size() << "\n\n";
  o << "trials:\n";
  for (const auto& t : b.trials)
    o << "  #" << t.spec.index << " " << t.cell << "  prober " << t.prober << "  cut " << t.cut
      << " at +" << ms(t.cut_at) << " ms  downtime " << Milli::ratio(t.downtime_us, 1).str()
      << " ms (" << t.timeouts << " timeouts)  violations " << t.run.violations.total() << "\n";
  o << "\ncells (mean downtime ms):\n";
  for (const auto& c : b.cells) o << "  " << c.label << "  " << c.mean_ms.str() << "\n";
  o << "\nmean over all trials: " << b.mean_ms.str() << " ms\n\n";
  violations_block(o, b.violations);
  return o.str();
}

std::string compare_csv(const std::string& scenario, const std::vector<CompareRow>& rows) {
  std::ostringstream o;
  o << "# lagsim comparison, bonded minus single-link\n";
  o << "[compare]\n";
  o << "scenario,service,bonded_delay_ms,single_delay_ms,delta_delay_ms,bonded_jitter_ms,"
       "single_jitter_ms,delta_jitter_ms,bonded_throughput_mbps,single_throughput_mbps,"
       "delta_throughput_mbps,bonded_loss_pct,single_loss_pct,delta_loss_pct,lower_jitter\n";
  for (const auto& r : rows) {
    const char* lower = r.d_jitter.thousandths < 0   ? "bonded"
                        : r.d_jitter.thousandths > 0 ? "single"
                                                     : "equal";
    o << field(scenario) << ',' << field(r.service) << ',' << r.bonded.delay_ms.str() << ','
      << r.single.delay_ms.str() << ',' << r.d_delay.str() << ',' << r.bonded.jitter_ms.str()
      << ',' << r.single.jitter_ms.str() << ',' << r.d_jitter.str() << ','
      << r.bonded.throughput_mbps.str() << ',' << r.single.throughput_mbps.str() << ','
      << r.d_throughput.str() << ',' << r.bonded.loss_pct.str() << ','
      << r.single.loss_pct.str() << ',' << r.d_loss.str() << ',' << lower << '\n';
  }
  return o.str();
}

std::vector<std::string> emit_reports(const RunResult& r, const std::string& out_dir) {
  const auto dir = prepare(out_dir);
  const std::string stem = r.scenario + "_" + lower_mode(r.mode);
  return {write_file(dir / (stem + ".csv"), run_csv(r)),
          write_file(dir / (stem + ".summary.txt"), run_summary(r))};
}

std::vector<std::string> emit_reports(const BatchResult& b, const std::string& out_dir) {
  const auto dir = prepare(out_dir);
  const std::string stem = b.scenario + "_" + lower_mode(b.mode) + "_batch";
  return {write_file(dir / (stem + ".csv"), batch_csv(b)),
          write_file(dir / (stem + ".summary.txt"), batch_summary(b))};
}

std::vector<std::string> emit_compare(const std::string& scenario, const RunResult& bonded,
                                      const RunResult& single,
                                      const std::vector<CompareRow>& rows,
                                      const std::string& out_dir) {
  auto paths = emit_reports(bonded, out_dir);
  for (auto& p : emit_reports(single, out_dir)) paths.push_back(std::move(p));
  paths.push_back(write_file(prepare(out_dir) / (scenario + "_compare.csv"),
                             compare_csv(scenario, rows)));
  return paths;
}

}  // namespace lagsim
