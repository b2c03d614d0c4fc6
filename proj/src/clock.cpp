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

#include "gridlet/clock.hpp"

#include <chrono>
#include <stdexcept>

namespace gridlet {

Clock::Clock(Mode mode, double start) : mode_(mode), now_(start) {}

double Clock::now() const {
    if (mode_ == Mode::Realtime) {
        auto d = std::chrono::system_clock::now().time_since_epoch();
        return std::chrono::duration<double>(d).count();
    }
    std::lock_guard lk(mu_);
    return now_;
}

void Clock::advance(double seconds) {
    if (mode_ != Mode::Manual)
        throw std::logic_error("advance() requires a manual clock");
    if (seconds < 0)
        throw std::logic_error("clock cannot move backwards");
    std::lock_guard lk(mu_);
    now_ += seconds;
}

void Clock::set(double abs_seconds) {
    if (mode_ != Mode::Manual)
        throw std::logic_error("set() requires a manual clock");
    std::lock_guard lk(mu_);
    if (abs_seconds < now_)
        throw std::logic_error("clock cannot move backwards");
    now_ = abs_seconds;
}

ClockPtr make_manual_clock(double start) {
    return std::make_shared<Clock>(Clock::Mode::Manual, start);
}

ClockPtr make_realtime_clock() {
    return std::make_shared<Clock>(Clock::Mode::Realtime);
}

}  // namespace gridlet
