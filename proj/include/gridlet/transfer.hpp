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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gridlet/clock.hpp"
#include "gridlet/config.hpp"
#include "gridlet/logs.hpp"

namespace gridlet::transfer {

/// WAN throughput model: a raised-cosine daily curve between
/// base_rate/diurnal_factor and base_rate. diurnal_factor 1 gives a constant
/// rate.
struct ThroughputModel {
    double base_rate = 7e6;  // bytes/second ceiling
    double diurnal_factor = 2.0;
    double period = 86400.0;
    double phase = 0.0;
};

/// rate(t) = base * (f + 1 + (f - 1) cos(2*pi*(t+phase)/period)) / (2f),
/// so the range is exactly [base/f, base].
double effective_rate(const ThroughputModel& model, double t);

/// Bytes the modeled link moves in [t0, t0+duration].
double transferred_bytes(const ThroughputModel& model, double t0, double duration);

/// Virtual seconds needed to move `bytes` starting at t0 (inverse of
/// transferred_bytes; exact to ~1e-9 relative).
double virtual_elapsed(const ThroughputModel& model, double t0, double bytes);

enum class TaskState { Described, Activated, Running, Done, Failed };

std::string to_string(TaskState s);
std::optional<TaskState> parse_task_state(std::string_view s);

/// A described (and possibly activated) bulk-copy request between sites.
struct TransferTask {
    int64_t id = 0;
    std::string from_site;
    std::string to_site;
    std::string from_location;
    std::string to_location;  // empty mirrors from_location
    std::string collection;   // optional: restrict to cataloged collection members
    std::string pattern;      // optional glob (* and ? only)
    int streams = 5;
    TaskState state = TaskState::Described;
    int64_t created = 0;
    int64_t activated_at = 0;
    int64_t finished_at = 0;
    int64_t bytes_moved = 0;

    std::string to_line() const;
    static std::optional<TransferTask> from_line(std::string_view line);
};

struct TaskSpec {
    std::string from_site;
    std::string to_site;
    std::string from_location;
    std::string to_location;
    std::string collection;
    std::string pattern;
    int streams = 5;
};

/// File-backed task table. Tasks are never deduplicated; ids are sequential.
class TaskStore {
public:
    explicit TaskStore(std::string path);

    TransferTask define(const TaskSpec& spec, const config::Configuration& cfg, int64_t now);
    TransferTask activate(int64_t id, int64_t now);
    std::optional<TransferTask> get(int64_t id) const;
    std::vector<TransferTask> all() const;
    void update(const TransferTask& task);

private:
    std::vector<TransferTask> load() const;
    void save(const std::vector<TransferTask>& tasks) const;

    std::string path_;
};

struct CopyReport {
    int64_t files = 0;
    int64_t bytes = 0;
    double elapsed_wall_s = 0.0;
    double elapsed_virtual_s = 0.0;  // from the throughput model
    std::vector<std::string> copied;                          // landed file names
    std::vector<std::pair<std::string, std::string>> failed;  // (name, reason)

    bool complete() const { return failed.empty(); }
};

/// Third-party directory copy: the destination gateway pulls each matched
/// file from the source gateway with `streams` concurrent chunk fetches; each
/// landed file is registered in the destination site catalog and traced in
/// the transfer log. Per-file failures land in report.failed; setup problems
/// (unknown site, unreachable gateway, nothing matched) throw.
CopyReport execute_copy(const config::Configuration& cfg, const std::string& token,
                        const Clock& clock, logs::LogWriter& log, const std::string& label,
                        const std::string& from_site, const std::string& from_location,
                        const std::string& to_site, const std::string& to_location,
                        const std::string& pattern, const std::string& collection, int streams);

struct TaskOutcome {
    int64_t id = 0;
    TaskState state = TaskState::Failed;
    std::string detail;
};

/// Executes every activated task sequentially (the nightly tick). Per-task
/// failures are captured in the outcome list; other tasks still run.
std::vector<TaskOutcome> run_activated_tasks(TaskStore& store, const config::Configuration& cfg,
                                             const std::string& token, const Clock& clock,
                                             logs::LogWriter& log);

}  // namespace gridlet::transfer
