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

#include "lagsim/engine.hpp"

#include <algorithm>
#include <limits>

namespace lagsim {

uint64_t Rng::below(uint64_t n) {
  if (n == 0) throw SimulationError("Rng::below called with n == 0");
  // Rejection sampling keeps the result unbiased for any n.
  const uint64_t limit = std::numeric_limits<uint64_t>::max() -
                         std::numeric_limits<uint64_t>::max() % n;
  uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

int64_t Rng::between(int64_t lo, int64_t hi) {
  if (hi < lo) throw SimulationError("Rng::between: empty range");
  return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo) + 1));
}

uint64_t derive_seed(uint64_t base, uint64_t index) {
  uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

EventHandle Scheduler::schedule(SimTime at, Handler fn, std::string_view label) {
  if (at < now_) {
    throw SimulationError("cannot schedule '" + std::string(label) + "' at t=" +
                          std::to_string(at.us()) + "us, now is " +
                          std::to_string(now_.us()) + "us");
  }
  const EventHandle seq = next_seq_++;
  state_.push_back(State::kPending);
  heap_.push_back(Entry{at, seq, std::move(fn), label});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
  return seq;
}

bool Scheduler::cancel(EventHandle h) {
  if (h >= state_.size() || state_[h] != State::kPending) return false;
  state_[h] = State::kCancelled;
  return true;
}

bool Scheduler::pending(EventHandle h) const {
  return h < state_.size() && state_[h] == State::kPending;
}

uint64_t Scheduler::run_until(SimTime t) {
  if (t < now_) {
    throw SimulationError("run_until(" + std::to_string(t.us()) +
                          "us) is before now (" + std::to_string(now_.us()) + "us)");
  }
  uint64_t fired = 0;
  while (!heap_.empty() && heap_.front().at <= t) {
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    Entry e = std::move(heap_.back());
    heap_.pop_back();
    if (state_[e.seq] != State::kPending) continue;
    state_[e.seq] = State::kFired;
    now_ = e.at;
    try {
      e.fn();
    } catch (const std::exception& ex) {
      throw SimulationError("event '" + std::string(e.label) + "' #" +
                            std::to_string(e.seq) + " at t=" +
                            std::to_string(e.at.us()) + "us failed: " + ex.what());
    }
    ++fired;
    ++delivered_;
  }
  now_ = t;
  return fired;
}

}  // namespace lagsim
