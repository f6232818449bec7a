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

#include <compare>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lagsim {

/// Simulated time with 1 us resolution, counted from scenario start.
class SimTime {
 public:
  constexpr SimTime() = default;

  static constexpr SimTime micros(int64_t us) { return SimTime(us); }
  static constexpr SimTime millis(int64_t ms) { return SimTime(ms * 1000); }
  static constexpr SimTime seconds(int64_t s) { return SimTime(s * 1000000); }

  constexpr int64_t us() const { return us_; }

  constexpr auto operator<=>(const SimTime&) const = default;
  constexpr SimTime operator+(SimTime o) const { return SimTime(us_ + o.us_); }
  constexpr SimTime operator-(SimTime o) const { return SimTime(us_ - o.us_); }
  constexpr SimTime& operator+=(SimTime o) {
    us_ += o.us_;
    return *this;
  }

 private:
  constexpr explicit SimTime(int64_t us) : us_(us) {}
  int64_t us_ = 0;
};

/// Fatal scenario or run error; aborts the current simulation.
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 0 is never issued, so a default-initialised handle is always inert.
using EventHandle = uint64_t;
inline constexpr EventHandle kNoEvent = 0;

/// Seeded PRNG. The algorithm name is written into report headers so that a
/// published run can be replayed; distributions are implemented here rather
/// than taken from <random> because those are not portable across stdlibs.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), engine_(seed) {}

  static constexpr std::string_view algorithm() { return "mt19937_64"; }
  uint64_t seed() const { return seed_; }

  uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be > 0.
  uint64_t below(uint64_t n);

  /// Uniform integer in [lo, hi].
  int64_t between(int64_t lo, int64_t hi);

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Derives an independent seed for stream `index` of a base seed (splitmix64).
uint64_t derive_seed(uint64_t base, uint64_t index);

/// Single-queue discrete-event scheduler. Events with equal fire time are
/// delivered in issue order.
class Scheduler {
 public:
  using Handler = std::function<void()>;

  SimTime now() const { return now_; }

  /// Queues `fn` at `at`. Throws SimulationError if `at` is in the past.
  EventHandle schedule(SimTime at, Handler fn, std::string_view label = "event");
  EventHandle schedule_in(SimTime delay, Handler fn, std::string_view label = "event") {
    return schedule(now_ + delay, std::move(fn), label);
  }

  /// True iff the event was still pending. Cancelled events never fire.
  bool cancel(EventHandle h);

  bool pending(EventHandle h) const;

  /// Delivers every event with fire time <= t in (time, seq) order, including
  /// events scheduled by handlers during the call. Leaves now() == t.
  uint64_t run_until(SimTime t);

  size_t queued() const { return heap_.size(); }
  uint64_t delivered() const { return delivered_; }

 private:
  enum class State : uint8_t { kPending, kFired, kCancelled };

  struct Entry {
    SimTime at;
    EventHandle seq;
    Handler fn;
    std::string_view label;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.seq > b.seq;
    }
  };

  SimTime now_;
  EventHandle next_seq_ = 1;
  uint64_t delivered_ = 0;
  std::vector<Entry> heap_;
  std::vector<State> state_{State::kFired};  // slot 0 = kNoEvent
};

}  // namespace lagsim
