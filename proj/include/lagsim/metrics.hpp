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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lagsim/netmodel.hpp"

namespace lagsim {

/// Decimal with exactly three fractional digits, stored as thousandths.
/// All report values pass through this type so that formatting is exact.
struct Milli {
  int64_t thousandths = 0;

  /// num/den rounded half-up to the nearest thousandth; den > 0.
  static Milli ratio(int64_t num, int64_t den);
  static Milli from_double(double v);
  double value() const { return static_cast<double>(thousandths) / 1000.0; }
  std::string str() const;
  constexpr auto operator<=>(const Milli&) const = default;
  Milli operator-(Milli o) const { return Milli{thousandths - o.thousandths}; }
};

/// Floor-based half-up rounding of num/den (den > 0), valid for negative num.
int64_t round_half_up(int64_t num, int64_t den);

/// Fixed codec-path components added to the measured network delay of a
/// voice frame. Stored in nanoseconds.
struct VoipDelayModel {
  int64_t processing_ns = 10'000'000;
  int64_t algorithmic_ns = 3'750'000;
  int64_t packetization_ns = 20'000'000;
  int64_t serialization_ns = 16'300;
  int64_t decompression_ns = 1'000'000;
  int64_t depacketization_ns = 20'000'000;
  int64_t dejitter_ns = 45'000'000;

  constexpr int64_t fixed_sum_ns() const {
    return processing_ns + algorithmic_ns + packetization_ns + serialization_ns +
           decompression_ns + depacketization_ns + dejitter_ns;
  }
};

inline constexpr int64_t kNsPerUs = 1000;

/// received_at - sent_at, plus the fixed voice components for VOICE frames.
/// Throws if the frame was never delivered.
int64_t one_way_delay_ns(const Frame& f, const VoipDelayModel& model = {});
int64_t network_delay_ns(const Frame& f);

/// Smoothed interarrival jitter: J += (|D| - J) / 16 over successive transit
/// time differences D.
class SmoothedJitter {
 public:
  void add(int64_t transit_ns);
  double value_ns() const { return jitter_ns_; }
  uint64_t samples() const { return samples_; }

 private:
  std::optional<int64_t> prev_;
  double jitter_ns_ = 0.0;
  uint64_t samples_ = 0;
};

/// Mean absolute difference of consecutive delays.
class MeanAbsJitter {
 public:
  void add(int64_t delay_ns);
  Milli value_ms() const;
  uint64_t samples() const { return samples_; }

 private:
  std::optional<int64_t> prev_;
  int64_t abs_sum_ns_ = 0;
  uint64_t diffs_ = 0;
  uint64_t samples_ = 0;
};

/// Delivered bits over a window, in Mb/s. Zero for an empty window.
Milli throughput_mbps(uint64_t bits, int64_t window_us);

struct LossFigure {
  Milli pct;
  bool undefined = false;  // nothing was sent
};
LossFigure packet_loss(uint64_t sent, uint64_t delivered);

struct DowntimeEpisode {
  SimTime start;
  uint64_t timeout_count = 0;
  int64_t downtime_us = 0;  // timeout_count * probe interval
};

struct DowntimeReport {
  std::string label;
  std::vector<DowntimeEpisode> episodes;
  int64_t total_us() const;
};

/// Mean of per-trial totals in ms, exact before the final rounding.
Milli aggregate_downtime(std::span<const DowntimeReport> trials);
Milli aggregate_downtime_us(std::span<const int64_t> totals_us);

struct QosReport {
  std::string service;
  FrameKind kind = FrameKind::kData;
  Milli delay_ms;
  Milli jitter_ms;
  Milli throughput_mbps;
  Milli goodput_mbps;
  Milli loss_pct;
  uint64_t sent = 0;
  uint64_t delivered = 0;
  bool jitter_undefined = false;
  bool loss_undefined = false;
};

/// Per-conversation accumulation of everything the QoS report needs.
class MetricsCollector {
 public:
  struct Stats {
    std::string service;
    FrameKind kind = FrameKind::kData;
    bool reported = true;
    uint64_t sent = 0;
    uint64_t delivered = 0;
    uint64_t delivered_bits = 0;
    uint64_t delivered_payload_bits = 0;
    // Nominal service window for constant-rate sources; transfers that end
    // early use first send to last delivery instead.
    std::optional<std::pair<SimTime, SimTime>> window;
    std::optional<SimTime> first_sent;
    std::optional<SimTime> last_sent;
    std::optional<SimTime> last_delivered;
    int64_t delay_sum_ns = 0;      // one-way, including the voice model
    int64_t net_delay_sum_ns = 0;  // network only
    SmoothedJitter smoothed;
    MeanAbsJitter mean_abs;
    uint64_t voice_additivity_errors = 0;
  };

  explicit MetricsCollector(VoipDelayModel model = {}) : model_(model) {}

  void track(uint32_t conversation, std::string service, FrameKind kind, bool reported = true);
  void set_window(uint32_t conversation, SimTime from, SimTime to);
  void on_sent(const Frame& f);
  void on_delivered(const Frame& f);

  const Stats* stats(uint32_t conversation) const;
  const std::map<uint32_t, Stats>& all() const { return stats_; }

  QosReport report(uint32_t conversation) const;
  const VoipDelayModel& model() const { return model_; }

 private:
  VoipDelayModel model_;
  std::map<uint32_t, Stats> stats_;
};

}  // namespace lagsim
