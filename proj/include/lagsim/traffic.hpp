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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lagsim/metrics.hpp"
#include "lagsim/netmodel.hpp"

namespace lagsim {

/// Where a flow starts or ends: the node, the address it uses and the MAC
/// that identifies it to bond distributors.
struct Endpoint {
  NodeId node;
  NetAddress addr;
  MacAddress mac;
};

struct VoipFlowSpec {
  uint32_t payload_bytes = 160;
  int64_t frame_interval_ms = 20;
  uint32_t header_overhead_bytes = 58;
  bool bidirectional = true;
};

struct VideoFlowSpec {
  int64_t video_bitrate_bps = 800'000;
  int64_t audio_bitrate_bps = 128'000;
  uint32_t packet_payload_bytes = 1316;
  uint32_t header_overhead_bytes = 46;
};

struct DataFlowSpec {
  uint64_t total_bytes = 30'000'000;
  uint32_t segment_bytes = 1460;
  uint32_t header_overhead_bytes = 58;
  uint32_t window_segments = 44;
  uint32_t ack_bytes = 60;
  int64_t initial_rtt_us = 10'000;
  int64_t min_rto_us = 20'000;
  int64_t max_rto_us = 1'000'000;
};

struct ProbeSpec {
  uint32_t payload_bytes = 32;
  uint32_t header_overhead_bytes = 46;
  int64_t interval_ms = 20;
  int64_t timeout_ms = 20;
};

struct CbrFlowSpec {
  uint32_t size_bytes = 100;
  int64_t interval_us = 1000;
  uint64_t max_frames = 0;  // 0: until stop
};

/// Completion record written to the `flows` report section.
struct FlowRecord {
  std::string service;
  SimTime start;
  std::optional<SimTime> end;
  uint64_t frames_sent = 0;
  uint64_t bytes_sent = 0;       // on-wire
  uint64_t payload_bytes = 0;    // media/payload emitted (or delivered, for transfers)
  uint64_t retransmissions = 0;
  bool completed = false;
  Milli goodput_mbps;
};

/// Common plumbing: stamping, metrics bookkeeping and origination.
class Flow {
 public:
  Flow(Network& net, MetricsCollector& metrics, std::string service, Endpoint src, Endpoint dst);
  virtual ~Flow() = default;
  Flow(const Flow&) = delete;
  Flow& operator=(const Flow&) = delete;

  /// Schedules the first event at t0; the source stops emitting at `stop`.
  virtual void start(SimTime t0, SimTime stop) = 0;
  virtual FlowRecord record() const = 0;
  /// Conversations this flow owns (for conservation auditing).
  const std::vector<uint32_t>& conversations() const { return conversations_; }
  const std::string& service() const { return service_; }

 protected:
  uint32_t open(const std::string& label, FrameKind kind, bool reported,
                const std::string& service);
  /// Stamps, records and originates `f` at `from`.
  void emit(const Endpoint& from, Frame&& f);
  Frame make(const Endpoint& from, const Endpoint& to, uint32_t conversation, FrameKind kind,
             uint32_t size, uint32_t payload) const;

  Network& net_;
  MetricsCollector& metrics_;
  std::string service_;
  Endpoint src_;
  Endpoint dst_;
  std::vector<uint32_t> conversations_;
};

/// Constant-rate voice; one conversation per direction.
class VoipFlow : public Flow {
 public:
  VoipFlow(Network& net, MetricsCollector& metrics, std::string service, Endpoint a, Endpoint b,
           VoipFlowSpec spec = {});
  void start(SimTime t0, SimTime stop) override;
  FlowRecord record() const override;
  uint32_t forward_conversation() const { return conv_[0]; }
  std::optional<uint32_t> reverse_conversation() const;
  uint64_t frames_sent(size_t direction) const { return sent_[direction]; }

 private:
  void tick(size_t direction);
  VoipFlowSpec spec_;
  uint32_t conv_[2] = {0, 0};
  uint64_t sent_[2] = {0, 0};
  SimTime t0_;
  SimTime stop_;
};

/// Constant-bitrate transport stream: packet k leaves at
/// t0 + floor(k * payload_bits / media_rate).
class VideoFlow : public Flow {
 public:
  VideoFlow(Network& net, MetricsCollector& metrics, std::string service, Endpoint src,
            Endpoint dst, VideoFlowSpec spec = {});
  void start(SimTime t0, SimTime stop) override;
  FlowRecord record() const override;
  uint32_t conversation() const { return conv_; }
  uint64_t media_bytes() const { return media_bytes_; }
  /// Offset of packet k from the flow start.
  SimTime offset(uint64_t k) const;

 private:
  void tick();
  VideoFlowSpec spec_;
  uint32_t conv_ = 0;
  uint64_t next_ = 0;
  uint64_t media_bytes_ = 0;
  SimTime t0_;
  SimTime stop_;
};

/// Fixed-window reliable transfer from src to dst with selective
/// acknowledgements and per-segment retransmission after 2 x SRTT, clamped
/// to [min_rto, max_rto].
class DataFlow : public Flow {
 public:
  DataFlow(Network& net, MetricsCollector& metrics, std::string service, Endpoint src,
           Endpoint dst, DataFlowSpec spec = {});
  void start(SimTime t0, SimTime stop) override;
  FlowRecord record() const override;
  uint32_t conversation() const { return conv_; }
  uint32_t ack_conversation() const { return ack_conv_; }
  bool completed() const { return done_.has_value(); }
  uint64_t delivered_payload() const { return delivered_payload_; }
  uint64_t retransmissions() const { return retransmissions_; }
  uint64_t segments() const { return segs_.size(); }
  /// Most segments ever outstanding at once.
  uint32_t peak_outstanding() const { return peak_outstanding_; }

 private:
  struct Segment {
    bool acked = false;
    bool retransmitted = false;
    SimTime last_sent;
    EventHandle timer = 0;
    int64_t rto_us = 0;
  };

  uint32_t segment_payload(uint64_t i) const;
  void fill_window();
  void send_segment(uint64_t i);
  void on_timeout(uint64_t i);
  void on_data(const Frame& f);
  void on_ack(const Frame& f);
  void mark_acked(uint64_t i);
  int64_t rto_us() const;
  void finish();

  DataFlowSpec spec_;
  uint32_t conv_ = 0;
  uint32_t ack_conv_ = 0;
  std::vector<Segment> segs_;
  uint64_t base_ = 0;      // lowest unacknowledged segment
  uint64_t next_new_ = 0;  // next never-sent segment
  uint32_t outstanding_ = 0;
  uint32_t peak_outstanding_ = 0;
  std::optional<int64_t> srtt_us_;
  uint64_t retransmissions_ = 0;
  uint64_t frames_sent_ = 0;
  uint64_t bytes_sent_ = 0;
  // Receiver side.
  std::vector<bool> received_;
  uint64_t cumulative_ = 0;
  uint64_t delivered_payload_ = 0;
  SimTime t0_;
  std::optional<SimTime> done_;
};

/// Echo probe: one request per interval, counted as a timeout if no reply
/// arrives strictly within timeout_ms. Consecutive timeouts form an episode.
class ProbeFlow : public Flow {
 public:
  ProbeFlow(Network& net, MetricsCollector& metrics, std::string label, Endpoint prober,
            Endpoint target, ProbeSpec spec = {});
  void start(SimTime t0, SimTime stop) override;
  FlowRecord record() const override;
  const DowntimeReport& downtime() const { return report_; }
  uint64_t probes_sent() const { return sent_; }
  uint64_t timeouts() const { return timeouts_; }
  uint32_t request_conversation() const { return req_conv_; }
  uint32_t reply_conversation() const { return rep_conv_; }

 private:
  void tick();
  void on_reply(const Frame& f);
  void evaluate(uint64_t k);

  ProbeSpec spec_;
  uint32_t req_conv_ = 0;
  uint32_t rep_conv_ = 0;
  std::vector<SimTime> sent_at_;
  std::vector<bool> answered_;
  uint64_t sent_ = 0;
  uint64_t timeouts_ = 0;
  bool in_episode_ = false;
  DowntimeReport report_;
  SimTime t0_;
  SimTime stop_;
};

/// Generic constant-rate stream used by property suites.
class CbrFlow : public Flow {
 public:
  CbrFlow(Network& net, MetricsCollector& metrics, std::string service, Endpoint src,
          Endpoint dst, CbrFlowSpec spec);
  void start(SimTime t0, SimTime stop) override;
  FlowRecord record() const override;
  uint32_t conversation() const { return conv_; }
  uint64_t frames_sent() const { return sent_; }

 private:
  void tick();
  CbrFlowSpec spec_;
  uint32_t conv_ = 0;
  uint64_t sent_ = 0;
  SimTime t0_;
  SimTime stop_;
};

}  // namespace lagsim
