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

#include "lagsim/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace lagsim {

const char* to_string(Mode m) { return m == Mode::kBonded ? "BONDED" : "SINGLE_LINK"; }

Mode parse_mode(const std::string& s) {
  if (s == "BONDED" || s == "bonded") return Mode::kBonded;
  if (s == "SINGLE_LINK" || s == "single" || s == "SINGLE") return Mode::kSingleLink;
  throw ConfigError("unknown mode '" + s + "' (expected BONDED or SINGLE_LINK)");
}

const char* to_string(ServiceType t) {
  switch (t) {
    case ServiceType::kVoice: return "voice";
    case ServiceType::kVideo: return "video";
    case ServiceType::kData: return "data";
    case ServiceType::kProbe: return "probe";
    case ServiceType::kCbr: return "cbr";
  }
  return "?";
}

std::vector<ServiceSpec> default_services() {
  std::vector<ServiceSpec> out(3);
  out[0].type = ServiceType::kVideo;
  out[0].name = "video";
  out[0].src = "server";
  out[0].dst = "client1";
  out[1].type = ServiceType::kVoice;
  out[1].name = "voice";
  out[1].src = "server";
  out[1].dst = "client2";
  out[2].type = ServiceType::kData;
  out[2].name = "data";
  out[2].src = "server";
  out[2].dst = "client1";
  return out;
}

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line + 1; }

[[noreturn]] void fail(const YAML::Node& n, const std::string& key, const std::string& what) {
  throw ConfigError("key '" + key + "' (line " + std::to_string(line_of(n)) + "): " + what);
}

void allow_only(const YAML::Node& map, const std::string& where,
                std::initializer_list<const char*> keys) {
  if (!map.IsMap()) fail(map, where, "expected a mapping");
  const std::set<std::string> ok(keys.begin(), keys.end());
  for (const auto& kv : map) {
    const auto k = kv.first.as<std::string>();
    if (!ok.count(k)) {
      const std::string full = where.empty() ? k : where + "." + k;
      throw ConfigError("unknown key '" + full + "' (line " + std::to_string(line_of(kv.first)) +
                        ")");
    }
  }
}

template <class T>
void get(const YAML::Node& map, const char* key, const std::string& where, T& out) {
  const YAML::Node n = map[key];
  if (!n) return;
  const std::string full = where.empty() ? key : where + "." + key;
  try {
    out = n.as<T>();
  } catch (const YAML::Exception&) {
    fail(n, full, "bad value '" + (n.IsScalar() ? n.Scalar() : std::string("<non-scalar>")) + "'");
  }
}

template <class T>
void get_opt(const YAML::Node& map, const char* key, const std::string& where,
             std::optional<T>& out) {
  if (!map[key]) return;
  T v{};
  get(map, key, where, v);
  out = v;
}

template <class F>
void get_enum(const YAML::Node& map, const char* key, const std::string& where, F parse) {
  const YAML::Node n = map[key];
  if (!n) return;
  const std::string full = where.empty() ? key : where + "." + key;
  if (!n.IsScalar()) fail(n, full, "expected a scalar");
  try {
    parse(n.Scalar());
  } catch (const ConfigError& e) {
    fail(n, full, e.what());
  }
}

void parse_service(const YAML::Node& n, size_t index, ServiceSpec& s) {
  const std::string where = "services[" + std::to_string(index) + "]";
  allow_only(n, where,
             {"type", "name", "src", "dst", "start_s", "stop_s", "payload_bytes",
              "frame_interval_ms", "header_overhead_bytes", "bidirectional", "video_bitrate_bps",
              "audio_bitrate_bps", "packet_payload_bytes", "total_bytes", "segment_bytes",
              "window_segments", "ack_bytes", "initial_rtt_us", "min_rto_us", "max_rto_us", "interval_ms",
              "timeout_ms", "size_bytes", "interval_us", "max_frames"});
  if (!n["type"]) fail(n, where + ".type", "missing");
  get_enum(n, "type", where, [&](const std::string& v) {
    if (v == "voice") s.type = ServiceType::kVoice;
    else if (v == "video") s.type = ServiceType::kVideo;
    else if (v == "data") s.type = ServiceType::kData;
    else if (v == "probe") s.type = ServiceType::kProbe;
    else if (v == "cbr") s.type = ServiceType::kCbr;
    else throw ConfigError("unknown service type '" + v + "'");
  });
  s.name = to_string(s.type);
  get(n, "name", where, s.name);
  get(n, "src", where, s.src);
  get(n, "dst", where, s.dst);
  get(n, "start_s", where, s.start_s);
  get_opt(n, "stop_s", where, s.stop_s);

  // Per-type fields; a field that does not apply to the type is an error.
  auto only_for = [&](std::initializer_list<const char*> keys, ServiceType t) {
    for (const char* k : keys)
      if (n[k] && s.type != t)
        fail(n[k], where + "." + k, std::string("not valid for type ") + to_string(s.type));
  };
  only_for({"frame_interval_ms", "bidirectional"}, ServiceType::kVoice);
  only_for({"video_bitrate_bps", "audio_bitrate_bps", "packet_payload_bytes"}, ServiceType::kVideo);
  only_for({"total_bytes", "segment_bytes", "window_segments", "ack_bytes", "initial_rtt_us",
            "min_rto_us", "max_rto_us"},
           ServiceType::kData);
  only_for({"timeout_ms", "interval_ms"}, ServiceType::kProbe);
  only_for({"size_bytes", "interval_us", "max_frames"}, ServiceType::kCbr);

  switch (s.type) {
    case ServiceType::kVoice:
      get(n, "payload_bytes", where, s.voice.payload_bytes);
      get(n, "frame_interval_ms", where, s.voice.frame_interval_ms);
      get(n, "header_overhead_bytes", where, s.voice.header_overhead_bytes);
      get(n, "bidirectional", where, s.voice.bidirectional);
      break;
    case ServiceType::kVideo:
      get(n, "video_bitrate_bps", where, s.video.video_bitrate_bps);
      get(n, "audio_bitrate_bps", where, s.video.audio_bitrate_bps);
      get(n, "packet_payload_bytes", where, s.video.packet_payload_bytes);
      get(n, "header_overhead_bytes", where, s.video.header_overhead_bytes);
      if (n["payload_bytes"]) fail(n["payload_bytes"], where + ".payload_bytes", "not valid for type video");
      break;
    case ServiceType::kData:
      get(n, "total_bytes", where, s.data.total_bytes);
      get(n, "segment_bytes", where, s.data.segment_bytes);
      get(n, "header_overhead_bytes", where, s.data.header_overhead_bytes);
      get(n, "window_segments", where, s.data.window_segments);
      get(n, "ack_bytes", where, s.data.ack_bytes);
      get(n, "initial_rtt_us", where, s.data.initial_rtt_us);
      get(n, "min_rto_us", where, s.data.min_rto_us);
      get(n, "max_rto_us", where, s.data.max_rto_us);
      if (n["payload_bytes"]) fail(n["payload_bytes"], where + ".payload_bytes", "not valid for type data");
      break;
    case ServiceType::kProbe:
      get(n, "payload_bytes", where, s.probe.payload_bytes);
      get(n, "header_overhead_bytes", where, s.probe.header_overhead_bytes);
      get(n, "interval_ms", where, s.probe.interval_ms);
      get(n, "timeout_ms", where, s.probe.timeout_ms);
      break;
    case ServiceType::kCbr:
      get(n, "size_bytes", where, s.cbr.size_bytes);
      get(n, "interval_us", where, s.cbr.interval_us);
      get(n, "max_frames", where, s.cbr.max_frames);
      if (n["payload_bytes"] || n["header_overhead_bytes"])
        fail(n, where, "cbr takes size_bytes only");
      break;
  }
}

void parse_failure(const YAML::Node& n, size_t index, FailureSpec& f) {
  const std::string where = "failures[" + std::to_string(index) + "]";
  allow_only(n, where, {"target", "member", "action", "at_s"});
  if (!n["target"]) fail(n, where + ".target", "missing");
  if (!n["at_s"]) fail(n, where + ".at_s", "missing");
  get(n, "target", where, f.target);
  if (n["member"] && n["member"].IsScalar() && n["member"].Scalar() != "all") {
    int m = 0;
    get(n, "member", where, m);
    f.member = m;
  }
  get_enum(n, "action", where, [&](const std::string& v) {
    if (v == "CUT") f.action = FailureAction::kCut;
    else if (v == "RESTORE") f.action = FailureAction::kRestore;
    else throw ConfigError("unknown action '" + v + "' (expected CUT or RESTORE)");
  });
  get(n, "at_s", where, f.at_s);
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(origin + ": parse error at line " + std::to_string(e.mark.line + 1) + ": " +
                      e.msg);
  }
  Scenario s;
  if (!root || root.IsNull()) return s;
  try {
    allow_only(root, "",
               {"name", "seed", "duration_s", "drain_s", "mode", "policy", "topology", "mii",
                "lacp", "routing", "services", "failures", "batch", "convergence_cap_s"});
    get(root, "name", "", s.name);
    get(root, "seed", "", s.seed);
    get(root, "duration_s", "", s.duration_s);
    get(root, "drain_s", "", s.drain_s);
    get(root, "convergence_cap_s", "", s.convergence_cap_s);
    get_enum(root, "mode", "", [&](const std::string& v) { s.mode = parse_mode(v); });
    get_enum(root, "policy", "", [&](const std::string& v) {
      if (v == "DEST_MAC_MOD_N") s.policy = DistributionPolicy::kDestMacModN;
      else if (v == "ROUND_ROBIN") s.policy = DistributionPolicy::kRoundRobin;
      else throw ConfigError("unknown policy '" + v + "'");
    });

    if (const YAML::Node t = root["topology"]) {
      allow_only(t, "topology",
                 {"routers", "bond_members", "link_speed_bps", "propagation_us",
                  "queue_capacity_frames", "forward_capacity_fps", "clients", "lan_speed_bps"});
      get(t, "routers", "topology", s.topology.routers);
      get(t, "bond_members", "topology", s.topology.bond_members);
      get(t, "link_speed_bps", "topology", s.topology.link_speed_bps);
      get(t, "propagation_us", "topology", s.topology.propagation_us);
      get(t, "queue_capacity_frames", "topology", s.topology.queue_capacity_frames);
      get(t, "forward_capacity_fps", "topology", s.topology.forward_capacity_fps);
      get(t, "clients", "topology", s.topology.clients);
      get(t, "lan_speed_bps", "topology", s.topology.lan_speed_bps);
    }
    if (const YAML::Node m = root["mii"]) {
      allow_only(m, "mii", {"poll_interval_ms", "updelay_ms", "downdelay_ms"});
      get(m, "poll_interval_ms", "mii", s.mii.poll_interval_ms);
      get(m, "updelay_ms", "mii", s.mii.updelay_ms);
      get(m, "downdelay_ms", "mii", s.mii.downdelay_ms);
    }
    if (const YAML::Node l = root["lacp"]) {
      allow_only(l, "lacp", {"tx_interval_ms", "expiry_multiple"});
      int64_t ms = s.lacp.tx_interval.us() / 1000;
      get(l, "tx_interval_ms", "lacp", ms);
      s.lacp.tx_interval = SimTime::millis(ms);
      get(l, "expiry_multiple", "lacp", s.lacp.expiry_multiple);
    }
    if (const YAML::Node r = root["routing"]) {
      allow_only(r, "routing",
                 {"hello_interval_s", "dead_interval_s", "spf_delay_ms", "detection_mode"});
      get(r, "hello_interval_s", "routing", s.routing.hello_interval_s);
      get(r, "dead_interval_s", "routing", s.routing.dead_interval_s);
      get(r, "spf_delay_ms", "routing", s.routing.spf_delay_ms);
      get_enum(r, "detection_mode", "routing", [&](const std::string& v) {
        if (v == "DEAD_INTERVAL") s.routing.detection_mode = DetectionMode::kDeadInterval;
        else if (v == "CARRIER_TRIGGERED") s.routing.detection_mode = DetectionMode::kCarrierTriggered;
        else throw ConfigError("unknown detection mode '" + v + "'");
      });
    }
    if (const YAML::Node sv = root["services"]) {
      if (!sv.IsSequence() && !sv.IsNull()) fail(sv, "services", "expected a list");
      for (size_t i = 0; sv.IsSequence() && i < sv.size(); ++i) {
        ServiceSpec spec;
        parse_service(sv[i], i, spec);
        s.services.push_back(spec);
      }
    } else {
      s.services = default_services();
    }
    if (const YAML::Node fl = root["failures"]) {
      if (!fl.IsSequence() && !fl.IsNull()) fail(fl, "failures", "expected a list");
      for (size_t i = 0; fl.IsSequence() && i < fl.size(); ++i) {
        FailureSpec f;
        parse_failure(fl[i], i, f);
        s.failures.push_back(f);
      }
    }
    if (const YAML::Node b = root["batch"]) {
      allow_only(b, "batch", {"cut", "cut_at_s", "cut_jitter_ms", "trials_per_cell", "targets"});
      get_enum(b, "cut", "batch", [&](const std::string& v) {
        if (v == "SINGLE") s.batch.cut = CutKind::kSingle;
        else if (v == "DUAL") s.batch.cut = CutKind::kDual;
        else throw ConfigError("unknown cut kind '" + v + "' (expected SINGLE or DUAL)");
      });
      get(b, "cut_at_s", "batch", s.batch.cut_at_s);
      get(b, "cut_jitter_ms", "batch", s.batch.cut_jitter_ms);
      get(b, "trials_per_cell", "batch", s.batch.trials_per_cell);
      get(b, "targets", "batch", s.batch.targets);
    }
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  validate(s);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

void validate(Scenario& s) {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  need(!s.name.empty(), "name must not be empty");
  need(std::isfinite(s.duration_s) && s.duration_s > 0, "duration_s must be > 0");
  need(std::isfinite(s.drain_s) && s.drain_s >= 0, "drain_s must be >= 0");
  need(s.convergence_cap_s > 0, "convergence_cap_s must be > 0");
  const TopologySpec& t = s.topology;
  need(t.routers >= 3 && t.routers <= 9, "topology.routers must be in [3, 9]");
  need(t.bond_members >= 1 && t.bond_members <= 8, "topology.bond_members must be in [1, 8]");
  need(t.link_speed_bps > 0 && t.lan_speed_bps > 0, "link speeds must be > 0");
  need(t.propagation_us >= 0, "topology.propagation_us must be >= 0");
  need(t.queue_capacity_frames >= 1, "topology.queue_capacity_frames must be >= 1");
  need(t.forward_capacity_fps >= 0, "topology.forward_capacity_fps must be >= 0");
  need(t.clients >= 1 && t.clients <= 8, "topology.clients must be in [1, 8]");
  if (t.bond_members == 1 && s.mode == Mode::kBonded)
    s.warnings.push_back("bond with one member behaves as a single link");

  try {
    for (auto& w : s.mii.normalize()) s.warnings.push_back(w);
    s.routing.validate();
  } catch (const SimulationError& e) {
    throw ConfigError(e.what());
  }
  need(s.lacp.tx_interval.us() > 0, "lacp.tx_interval_ms must be > 0");
  need(s.lacp.expiry_multiple >= 1, "lacp.expiry_multiple must be >= 1");

  std::set<std::string> names;
  for (const auto& sv : s.services) {
    const std::string where = "service '" + sv.name + "'";
    need(!sv.name.empty(), "service name must not be empty");
    need(names.insert(sv.name).second, "duplicate " + where);
    need(!sv.src.empty() && !sv.dst.empty(), where + ": src and dst are required");
    need(sv.src != sv.dst, where + ": src and dst must differ");
    need(sv.start_s >= 0 && sv.start_s < s.duration_s, where + ": start_s must be in [0, duration_s)");
    if (sv.stop_s)
      need(*sv.stop_s > sv.start_s && *sv.stop_s <= s.duration_s,
           where + ": stop_s must be in (start_s, duration_s]");
    switch (sv.type) {
      case ServiceType::kVoice:
        need(sv.voice.frame_interval_ms > 0, where + ": frame_interval_ms must be > 0");
        need(sv.voice.payload_bytes + sv.voice.header_overhead_bytes > 0, where + ": empty frames");
        break;
      case ServiceType::kVideo:
        need(sv.video.video_bitrate_bps >= 0 && sv.video.audio_bitrate_bps >= 0 &&
                 sv.video.video_bitrate_bps + sv.video.audio_bitrate_bps > 0,
             where + ": media rate must be > 0");
        need(sv.video.packet_payload_bytes > 0, where + ": packet_payload_bytes must be > 0");
        break;
      case ServiceType::kData:
        need(sv.data.segment_bytes > 0, where + ": segment_bytes must be > 0");
        need(sv.data.window_segments > 0, where + ": window_segments must be > 0");
        need(sv.data.ack_bytes > 0, where + ": ack_bytes must be > 0");
        need(sv.data.initial_rtt_us > 0 && sv.data.max_rto_us > 0, where + ": timers must be > 0");
        need(sv.data.min_rto_us > 0 && sv.data.min_rto_us <= sv.data.max_rto_us,
             where + ": min_rto_us must be in (0, max_rto_us]");
        break;
      case ServiceType::kProbe:
        need(sv.probe.interval_ms > 0 && sv.probe.timeout_ms > 0, where + ": timers must be > 0");
        need(sv.probe.timeout_ms <= sv.probe.interval_ms,
             where + ": timeout_ms must not exceed interval_ms");
        break;
      case ServiceType::kCbr:
        need(sv.cbr.interval_us > 0, where + ": interval_us must be > 0");
        need(sv.cbr.size_bytes > 0, where + ": size_bytes must be > 0");
        break;
    }
  }
  for (const auto& f : s.failures) {
    need(f.at_s >= 0, "failure on '" + f.target + "': at_s must be >= 0");
    need(f.at_s <= s.duration_s, "failure on '" + f.target + "': at_s " + std::to_string(f.at_s) +
                                     " exceeds duration_s " + std::to_string(s.duration_s));
    if (f.member) need(*f.member >= 0, "failure on '" + f.target + "': member must be >= 0");
  }
  need(s.batch.trials_per_cell >= 1, "batch.trials_per_cell must be >= 1");
  need(s.batch.cut_jitter_ms >= 0, "batch.cut_jitter_ms must be >= 0");
  need(s.batch.cut_at_s >= 0, "batch.cut_at_s must be >= 0");
  need(!s.batch.targets.empty(), "batch.targets must not be empty");
}

}  // namespace lagsim
