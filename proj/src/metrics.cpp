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

#include "lagsim/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace lagsim {

int64_t round_half_up(int64_t num, int64_t den) {
  if (den <= 0) throw SimulationError("round_half_up: non-positive denominator");
  // floor((2*num + den) / (2*den)) with floor division for negatives.
  const __int128 n = static_cast<__int128>(num) * 2 + den;
  const __int128 d = static_cast<__int128>(den) * 2;
  __int128 q = n / d;
  if ((n % d != 0) && (n < 0)) --q;
  return static_cast<int64_t>(q);
}

Milli Milli::ratio(int64_t num, int64_t den) { return Milli{round_half_up(num, den)}; }

Milli Milli::from_double(double v) {
  return Milli{static_cast<int64_t>(std::floor(v * 1000.0 + 0.5))};
}

std::string Milli::str() const {
  const int64_t mag = std::llabs(thousandths);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%lld.%03lld", thousandths < 0 ? "-" : "",
                static_cast<long long>(mag / 1000), static_cast<long long>(mag % 1000));
  return buf;
}

int64_t network_delay_ns(const Frame& f) {
  if (!f.received_at) throw SimulationError("frame " + std::to_string(f.id) + " not delivered");
  return (*f.received_at - f.sent_at).us() * kNsPerUs;
}

int64_t one_way_delay_ns(const Frame& f, const VoipDelayModel& model) {
  const int64_t net = network_delay_ns(f);
  return f.kind == FrameKind::kVoice ? net + model.fixed_sum_ns() : net;
}

void SmoothedJitter::add(int64_t transit_ns) {
  if (prev_) {
    const double d = std::fabs(static_cast<double>(transit_ns - *prev_));
    jitter_ns_ += (d - jitter_ns_) / 16.0;
  }
  prev_ = transit_ns;
  ++samples_;
}

void MeanAbsJitter::add(int64_t delay_ns) {
  if (prev_) {
    abs_sum_ns_ += std::llabs(delay_ns - *prev_);
    ++diffs_;
  }
  prev_ = delay_ns;
  ++samples_;
}

Milli MeanAbsJitter::value_ms() const {
  if (diffs_ == 0) return Milli{};
  return Milli::ratio(abs_sum_ns_, static_cast<int64_t>(diffs_) * 1000);
}

Milli throughput_mbps(uint64_t bits, int64_t window_us) {
  if (window_us <= 0 || bits == 0) return Milli{};
  // bits per microsecond is Mb/s.
  return Milli::ratio(static_cast<int64_t>(bits) * 1000, window_us);
}

LossFigure packet_loss(uint64_t sent, uint64_t delivered) {
  if (sent == 0) return LossFigure{Milli{}, true};
  const int64_t lost = static_cast<int64_t>(sent) - static_cast<int64_t>(delivered);
  return LossFigure{Milli::ratio(lost * 100 * 1000, static_cast<int64_t>(sent)), false};
}

int64_t DowntimeReport::total_us() const {
  int64_t t = 0;
  for (const auto& e : episodes) t += e.downtime_us;
  return t;
}

Milli aggregate_downtime_us(std::span<const int64_t> totals_us) {
  if (totals_us.empty()) throw SimulationError("aggregate_downtime needs at least one trial");
  int64_t sum = 0;
  for (int64_t t : totals_us) sum += t;
  // Thousandths of a millisecond are microseconds.
  return Milli::ratio(sum, static_cast<int64_t>(totals_us.size()));
}

Milli aggregate_downtime(std::span<const DowntimeReport> trials) {
  std::vector<int64_t> totals;
  totals.reserve(trials.size());
  for (const auto& t : trials) totals.push_back(t.total_us());
  return aggregate_downtime_us(totals);
}

void MetricsCollector::track(uint32_t conversation, std::string service, FrameKind kind,
                             bool reported) {
  Stats& s = stats_[conversation];
  s.service = std::move(service);
  s.kind = kind;
  s.reported = reported;
}

void MetricsCollector::set_window(uint32_t conversation, SimTime from, SimTime to) {
  stats_[conversation].window = std::make_pair(from, to);
}

void MetricsCollector::on_sent(const Frame& f) {
  auto it = stats_.find(f.conversation);
  if (it == stats_.end()) return;
  Stats& s = it->second;
  ++s.sent;
  if (!s.first_sent) s.first_sent = f.sent_at;
  s.last_sent = f.sent_at;
}

void MetricsCollector::on_delivered(const Frame& f) {
  auto it = stats_.find(f.conversation);
  if (it == stats_.end()) return;
  Stats& s = it->second;
  const int64_t net = network_delay_ns(f);
  const int64_t owd = one_way_delay_ns(f, model_);
  if (f.kind == FrameKind::kVoice && owd - net != model_.fixed_sum_ns())
    ++s.voice_additivity_errors;
  ++s.delivered;
  s.delivered_bits += static_cast<uint64_t>(f.size_bytes) * 8;
  s.delivered_payload_bits += static_cast<uint64_t>(f.payload_bytes) * 8;
  s.last_delivered = *f.received_at;
  s.delay_sum_ns += owd;
  s.net_delay_sum_ns += net;
  s.smoothed.add(net);
  s.mean_abs.add(net);
}

const MetricsCollector::Stats* MetricsCollector::stats(uint32_t conversation) const {
  auto it = stats_.find(conversation);
  return it == stats_.end() ? nullptr : &it->second;
}

QosReport MetricsCollector::report(uint32_t conversation) const {
  const Stats* s = stats(conversation);
  if (s == nullptr) throw SimulationError("no metrics for conversation " + std::to_string(conversation));
  QosReport r;
  r.service = s->service;
  r.kind = s->kind;
  r.sent = s->sent;
  r.delivered = s->delivered;
  if (s->delivered > 0)
    r.delay_ms = Milli::ratio(s->delay_sum_ns, static_cast<int64_t>(s->delivered) * 1000);
  if (s->delivered < 2) {
    r.jitter_undefined = true;
  } else if (s->kind == FrameKind::kVoice) {
    r.jitter_ms = Milli::from_double(s->smoothed.value_ns() / 1e6);
  } else {
    r.jitter_ms = s->mean_abs.value_ms();
  }
  if (s->window || (s->first_sent && s->last_delivered)) {
    const int64_t window = s->window ? (s->window->second - s->window->first).us()
                                     : (*s->last_delivered - *s->first_sent).us();
    r.throughput_mbps = throughput_mbps(s->delivered_bits, window);
    r.goodput_mbps = throughput_mbps(s->delivered_payload_bits, window);
  }
  const LossFigure loss = packet_loss(s->sent, s->delivered);
  r.loss_pct = loss.pct;
  r.loss_undefined = loss.undefined;
  return r;
}

}  // namespace lagsim
