/*
 * Copyright (c) 2026 The gridlet authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <atomic>
#include <memory>
#include <mutex>

namespace gridlet {

/// Time source in seconds since the epoch. In manual mode time only moves
/// through advance()/set(), which makes queues, transfers and token expiry
/// deterministic under test. Monotone non-decreasing in both modes.
class Clock {
public:
    enum class Mode { Manual, Realtime };

    explicit Clock(Mode mode = Mode::Realtime, double start = 0.0);

    Mode mode() const { return mode_; }
    double now() const;

    /// Manual mode only: move time forward by `seconds` (>= 0).
    void advance(double seconds);

    /// Manual mode only: jump to an absolute time >= now().
    void set(double abs_seconds);

private:
    Mode mode_;
    mutable std::mutex mu_;
    double now_;
};

using ClockPtr = std::shared_ptr<Clock>;

ClockPtr make_manual_clock(double start = 0.0);
ClockPtr make_realtime_clock();

}  // namespace gridlet
