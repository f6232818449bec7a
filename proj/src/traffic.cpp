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

#include "lagsim/traffic.hpp"

#include <algorithm>

namespace lagsim {

Flow::Flow(Network& net, MetricsCollector& metrics, std::string service, Endpoint src,
           Endpoint dst)
    : net_(net), metrics_(metrics), service_(std::move(service)), src_(src), dst_(dst) {}

uint32_t Flow::open(const std::string& label, FrameKind kind, bool reported,
                    const std::string& service) {
  const uint32_t c = net_.new_conversation(label);
  metrics_.track(c, service, kind, reported);
  conversations_.push_back(c);
  return c;
}

Frame Flow::make(const Endpoint& from, const Endpoint& to, uint32_t conversation, FrameKind kind,
                 uint32_t size, uint32_t payload) const {
  Frame f;
  f.src_mac = from.mac;
  f.dst_mac = to.mac;
  f.src_addr = from.addr;
  f.dst_addr = to.addr;
  f.conversation = conversation;
  f.kind = kind;
  f.size_bytes = size;
  f.payload_bytes = payload;
  return f;
}

void Flow::emit(const Endpoint& from, Frame&& f) {
  net_.stamp(f);
  metrics_.on_sent(f);
  net_.node(from.node).originate(std::move(f));
}

// ---------------------------------------------------------------- voice

VoipFlow::VoipFlow(Network& net, MetricsCollector& metrics, std::string service, Endpoint a,
                   Endpoint b, VoipFlowSpec spec)
    : Flow(net, metrics, std::move(service), a, b), spec_(spec) {
  if (spec_.frame_interval_ms <= 0) throw SimulationError("voice frame interval must be > 0");
  conv_[0] = open(service_ + "_down", FrameKind::kVoice, true, service_ + "_down");
  if (spec_.bidirectional)
    conv_[1] = open(service_ + "_up", FrameKind::kVoice, true, service_ + "_up");
}

std::optional<uint32_t> VoipFlow::reverse_conversation() const {
  if (!spec_.bidirectional) return std::nullopt;
  return conv_[1];
}

void VoipFlow::start(SimTime t0, SimTime stop) {
  t0_ = t0;
  stop_ = stop;
  const SimTime delay = t0 - net_.now();
  const size_t dirs = spec_.bidirectional ? 2 : 1;
  for (size_t d = 0; d < dirs; ++d) {
    metrics_.set_window(conv_[d], t0, stop);
    net_.scheduler().schedule_in(delay, [this, d] { tick(d); }, "voice");
  }
}

void VoipFlow::tick(size_t d) {
  const SimTime now = net_.now();
  if (now >= stop_) return;
  const Endpoint& from = d == 0 ? src_ : dst_;
  const Endpoint& to = d == 0 ? dst_ : src_;
  Frame f = make(from, to, conv_[d], FrameKind::kVoice,
                 spec_.payload_bytes + spec_.header_overhead_bytes, spec_.payload_bytes);
  f.app_seq = sent_[d];
  ++sent_[d];
  emit(from, std::move(f));
  const SimTime next = t0_ + SimTime::millis(spec_.frame_interval_ms * static_cast<int64_t>(sent_[d]));
  if (next < stop_) net_.scheduler().schedule(next, [this, d] { tick(d); }, "voice");
}

FlowRecord VoipFlow::record() const {
  FlowRecord r;
  r.service = service_;
  r.start = t0_;
  r.end = stop_;
  r.frames_sent = sent_[0] + sent_[1];
  r.bytes_sent = r.frames_sent * (spec_.payload_bytes + spec_.header_overhead_bytes);
  r.payload_bytes = r.frames_sent * spec_.payload_bytes;
  r.completed = true;
  return r;
}

// ---------------------------------------------------------------- video

VideoFlow::VideoFlow(Network& net, MetricsCollector& metrics, std::string service, Endpoint src,
                     Endpoint dst, VideoFlowSpec spec)
    : Flow(net, metrics, std::move(service), src, dst), spec_(spec) {
  if (spec_.video_bitrate_bps + spec_.audio_bitrate_bps <= 0)
    throw SimulationError("video media rate must be > 0");
  conv_ = open(service_, FrameKind::kVideo, true, service_);
}

SimTime VideoFlow::offset(uint64_t k) const {
  const int64_t rate = spec_.video_bitrate_bps + spec_.audio_bitrate_bps;
  const __int128 bits = static_cast<__int128>(k) * spec_.packet_payload_bytes * 8;
  return SimTime::micros(static_cast<int64_t>(bits * 1'000'000 / rate));
}

void VideoFlow::start(SimTime t0, SimTime stop) {
  t0_ = t0;
  stop_ = stop;
  metrics_.set_window(conv_, t0, stop);
  net_.scheduler().schedule(t0, [this] { tick(); }, "video");
}

void VideoFlow::tick() {
  if (net_.now() >= stop_) return;
  Frame f = make(src_, dst_, conv_, FrameKind::kVideo,
                 spec_.packet_payload_bytes + spec_.header_overhead_bytes,
                 spec_.packet_payload_bytes);
  f.app_seq = next_;
  ++next_;
  media_bytes_ += spec_.packet_payload_bytes;
  emit(src_, std::move(f));
  const SimTime at = t0_ + offset(next_);
  if (at < stop_) net_.scheduler().schedule(at, [this] { tick(); }, "video");
}

FlowRecord VideoFlow::record() const {
  FlowRecord r;
  r.service = service_;
  r.start = t0_;
  r.end = stop_;
  r.frames_sent = next_;
  r.bytes_sent = next_ * (spec_.packet_payload_bytes + spec_.header_overhead_bytes);
  r.payload_bytes = media_bytes_;
  r.completed = true;
  return r;
}

// ---------------------------------------------------------------- data

DataFlow::DataFlow(Network& net, MetricsCollector& metrics, std::string service, Endpoint src,
                   Endpoint dst, DataFlowSpec spec)
    : Flow(net, metrics, std::move(service), src, dst), spec_(spec) {
  if (spec_.segment_bytes == 0) throw SimulationError("data segment size must be > 0");
  if (spec_.window_segments == 0) throw SimulationError("data window must be > 0");
  if (spec_.min_rto_us <= 0 || spec_.min_rto_us > spec_.max_rto_us)
    throw SimulationError("data rto bounds must satisfy 0 < min_rto_us <= max_rto_us");
  conv_ = open(service_, FrameKind::kData, true, service_);
  ack_conv_ = open(service_ + "_ack", FrameKind::kAck, false, service_ + "_ack");
  const uint64_t n = (spec_.total_bytes + spec_.segment_bytes - 1) / spec_.segment_bytes;
  segs_.resize(n);
  received_.assign(n, false);
  net_.register_receiver(conv_, [this](const Frame& f) { on_data(f); });
  net_.register_receiver(ack_conv_, [this](const Frame& f) { on_ack(f); });
}

uint32_t DataFlow::segment_payload(uint64_t i) const {
  const uint64_t off = i * spec_.segment_bytes;
  return static_cast<uint32_t>(std::min<uint64_t>(spec_.segment_bytes, spec_.total_bytes - off));
}

int64_t DataFlow::rto_us() const {
  // The first samples see an empty queue; the floor keeps a full window from
  // timing out behind its own backlog.
  return std::clamp(2 * srtt_us_.value_or(spec_.initial_rtt_us), spec_.min_rto_us,
                    spec_.max_rto_us);
}

void DataFlow::start(SimTime t0, SimTime) {
  t0_ = t0;
  net_.scheduler().schedule(t0, [this] {
    if (segs_.empty()) {
      finish();
      return;
    }
    fill_window();
  }, "data-start");
}

void DataFlow::fill_window() {
  while (next_new_ < segs_.size() && next_new_ < base_ + spec_.window_segments) {
    send_segment(next_new_);
    ++next_new_;
  }
}

void DataFlow::send_segment(uint64_t i) {
  Segment& s = segs_[i];
  const uint32_t payload = segment_payload(i);
  Frame f = make(src_, dst_, conv_, FrameKind::kData, payload + spec_.header_overhead_bytes,
                 payload);
  f.app_seq = i;
  s.last_sent = net_.now();
  if (s.rto_us == 0) {
    s.rto_us = rto_us();
    ++outstanding_;
    peak_outstanding_ = std::max(peak_outstanding_, outstanding_);
  }
  ++frames_sent_;
  bytes_sent_ += f.size_bytes;
  s.timer = net_.scheduler().schedule_in(SimTime::micros(s.rto_us), [this, i] { on_timeout(i); },
                                         "data-rto");
  emit(src_, std::move(f));
}

void DataFlow::on_timeout(uint64_t i) {
  Segment& s = segs_[i];
  if (s.acked || done_) return;
  s.retransmitted = true;
  s.rto_us = std::min(spec_.max_rto_us, s.rto_us * 2);
  ++retransmissions_;
  send_segment(i);
}

void DataFlow::on_data(const Frame& f) {
  const uint64_t i = f.app_seq;
  if (i < received_.size() && !received_[i]) {
    received_[i] = true;
    delivered_payload_ += f.payload_bytes;
    while (cumulative_ < received_.size() && received_[cumulative_]) ++cumulative_;
  }
  Frame ack = make(dst_, src_, ack_conv_, FrameKind::kAck, spec_.ack_bytes, 0);
  ack.app_seq = cumulative_;
  ack.app_aux = i;
  emit(dst_, std::move(ack));
}

void DataFlow::mark_acked(uint64_t i) {
  Segment& s = segs_[i];
  if (s.acked) return;
  s.acked = true;
  net_.scheduler().cancel(s.timer);
  if (s.rto_us != 0) --outstanding_;
}

void DataFlow::on_ack(const Frame& f) {
  if (done_) return;
  const uint64_t i = f.app_aux;
  if (i < segs_.size() && !segs_[i].acked) {
    if (!segs_[i].retransmitted) {
      const int64_t sample = (net_.now() - segs_[i].last_sent).us();
      srtt_us_ = srtt_us_ ? (*srtt_us_ * 7 + sample) / 8 : sample;
    }
    mark_acked(i);
  }
  for (uint64_t k = base_; k < std::min<uint64_t>(f.app_seq, segs_.size()); ++k) mark_acked(k);
  while (base_ < segs_.size() && segs_[base_].acked) ++base_;
  if (base_ == segs_.size()) {
    finish();
    return;
  }
  fill_window();
}

void DataFlow::finish() { done_ = net_.now(); }

FlowRecord DataFlow::record() const {
  FlowRecord r;
  r.service = service_;
  r.start = t0_;
  r.end = done_;
  r.frames_sent = frames_sent_;
  r.bytes_sent = bytes_sent_;
  r.payload_bytes = delivered_payload_;
  r.retransmissions = retransmissions_;
  r.completed = done_.has_value();
  if (done_) r.goodput_mbps = throughput_mbps(delivered_payload_ * 8, (*done_ - t0_).us());
  return r;
}

// ---------------------------------------------------------------- probe

ProbeFlow::ProbeFlow(Network& net, MetricsCollector& metrics, std::string label,
                     Endpoint prober, Endpoint target, ProbeSpec spec)
    : Flow(net, metrics, std::move(label), prober, target), spec_(spec) {
  if (spec_.interval_ms <= 0) throw SimulationError("probe interval must be > 0");
  req_conv_ = open("probe:" + service_, FrameKind::kProbe, false, "probe");
  rep_conv_ = open("probe-reply:" + service_, FrameKind::kProbeReply, false, "probe_reply");
  report_.label = service_;
  net_.register_receiver(rep_conv_, [this](const Frame& f) { on_reply(f); });
}

void ProbeFlow::start(SimTime t0, SimTime stop) {
  t0_ = t0;
  stop_ = stop;
  net_.scheduler().schedule(t0, [this] { tick(); }, "probe");
}

void ProbeFlow::tick() {
  const SimTime now = net_.now();
  if (now >= stop_) return;
  const uint64_t k = sent_++;
  // The timeout is queued before the request leaves, so a reply landing on
  // the deadline loses the tie.
  net_.scheduler().schedule_in(SimTime::millis(spec_.timeout_ms), [this, k] { evaluate(k); },
                               "probe-timeout");
  sent_at_.push_back(now);
  answered_.push_back(false);
  Frame f = make(src_, dst_, req_conv_, FrameKind::kProbe,
                 spec_.payload_bytes + spec_.header_overhead_bytes, spec_.payload_bytes);
  f.app_seq = k;
  f.app_aux = rep_conv_;
  emit(src_, std::move(f));
  const SimTime next = t0_ + SimTime::millis(spec_.interval_ms * static_cast<int64_t>(sent_));
  if (next < stop_) net_.scheduler().schedule(next, [this] { tick(); }, "probe");
}

void ProbeFlow::on_reply(const Frame& f) {
  const uint64_t k = f.app_seq;
  if (k >= answered_.size()) return;
  if ((net_.now() - sent_at_[k]).us() < spec_.timeout_ms * 1000) answered_[k] = true;
}

void ProbeFlow::evaluate(uint64_t k) {
  if (answered_[k]) {
    in_episode_ = false;
    return;
  }
  ++timeouts_;
  if (!in_episode_) {
    report_.episodes.push_back(DowntimeEpisode{sent_at_[k], 0, 0});
    in_episode_ = true;
  }
  DowntimeEpisode& e = report_.episodes.back();
  ++e.timeout_count;
  e.downtime_us = static_cast<int64_t>(e.timeout_count) * spec_.interval_ms * 1000;
}

FlowRecord ProbeFlow::record() const {
  FlowRecord r;
  r.service = service_;
  r.start = t0_;
  r.end = stop_;
  r.frames_sent = sent_;
  r.bytes_sent = sent_ * (spec_.payload_bytes + spec_.header_overhead_bytes);
  r.payload_bytes = sent_ * spec_.payload_bytes;
  r.completed = true;
  return r;
}

// ---------------------------------------------------------------- cbr

CbrFlow::CbrFlow(Network& net, MetricsCollector& metrics, std::string service, Endpoint src,
                 Endpoint dst, CbrFlowSpec spec)
    : Flow(net, metrics, std::move(service), src, dst), spec_(spec) {
  if (spec_.interval_us <= 0) throw SimulationError("cbr interval must be > 0");
  conv_ = open(service_, FrameKind::kData, true, service_);
}

void CbrFlow::start(SimTime t0, SimTime stop) {
  t0_ = t0;
  stop_ = stop;
  net_.scheduler().schedule(t0, [this] { tick(); }, "cbr");
}

void CbrFlow::tick() {
  if (net_.now() >= stop_ || (spec_.max_frames != 0 && sent_ >= spec_.max_frames)) return;
  Frame f = make(src_, dst_, conv_, FrameKind::kData, spec_.size_bytes, spec_.size_bytes);
  f.app_seq = sent_;
  ++sent_;
  emit(src_, std::move(f));
  const SimTime next = t0_ + SimTime::micros(spec_.interval_us * static_cast<int64_t>(sent_));
  if (next < stop_) net_.scheduler().schedule(next, [this] { tick(); }, "cbr");
}

FlowRecord CbrFlow::record() const {
  FlowRecord r;
  r.service = service_;
  r.start = t0_;
  r.end = stop_;
  r.frames_sent = sent_;
  r.bytes_sent = sent_ * spec_.size_bytes;
  r.payload_bytes = r.bytes_sent;
  r.completed = true;
  return r;
}

}  // namespace lagsim
