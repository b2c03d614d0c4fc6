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
#include <string>
#include <vector>

#include "gridlet/clock.hpp"

namespace gridlet::logs {

/// Append-only user logs under <root>/CLUSTERS/: `commands` (every CLI
/// invocation), `jobs` (one line per submission) and `DataTransLogs/` (one
/// file per day, one line per transferred file). Appends are single whole-line
/// writes so concurrent invocations never interleave fragments.
class LogWriter {
public:
    LogWriter(std::string root, ClockPtr clock);

    /// `<ISO8601-UTC> <command> <parameters...>`
    void command(const std::vector<std::string>& fields);

    /// `<ISO8601-UTC> <gateway-name>/<sequence>`
    void job(const std::string& job_id);

    /// `<ISO8601> <task-or-cmd> <from-site>:<path> <to-site>:<path> <bytes> <status>`
    void transfer(const std::string& task_or_cmd, const std::string& from_site,
                  const std::string& from_path, const std::string& to_site,
                  const std::string& to_path, int64_t bytes, const std::string& status);

    std::string commands_path() const;
    std::string jobs_path() const;
    std::string transfer_dir() const;
    std::string transfer_path_today() const;

    /// Jobs-log replay: (submitted_at, job_id) pairs in file order.
    std::vector<std::pair<int64_t, std::string>> replay_jobs() const;

private:
    void append(const std::string& path, const std::vector<std::string>& fields);

    std::string root_;
    ClockPtr clock_;
};

}  // namespace gridlet::logs
