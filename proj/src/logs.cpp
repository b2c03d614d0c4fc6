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

#include "gridlet/logs.hpp"

#include <fcntl.h>
#include <fmt/format.h>
#include <string.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "gridlet/errors.hpp"
#include "gridlet/util.hpp"

namespace fs = std::filesystem;

namespace gridlet::logs {

LogWriter::LogWriter(std::string root, ClockPtr clock)
    : root_(std::move(root)), clock_(std::move(clock)) {}

std::string LogWriter::commands_path() const { return root_ + "/CLUSTERS/commands"; }
std::string LogWriter::jobs_path() const { return root_ + "/CLUSTERS/jobs"; }
std::string LogWriter::transfer_dir() const { return root_ + "/CLUSTERS/DataTransLogs"; }

std::string LogWriter::transfer_path_today() const {
    std::string stamp = iso8601(static_cast<int64_t>(clock_->now()));
    return fmt::format("{}/{}.log", transfer_dir(), stamp.substr(0, 10));
}

void LogWriter::append(const std::string& path, const std::vector<std::string>& fields) {
    std::string line;
    for (const auto& f : fields) {
        if (f.empty())
            throw Error(ErrorKind::BadField, "refusing to log an empty field");
        if (f.find('\n') != std::string::npos || f.find('\r') != std::string::npos)
            throw Error(ErrorKind::BadField, "refusing to log a field with a newline");
        if (!line.empty()) line.push_back(' ');
        line += f;
    }
    line.push_back('\n');

    std::error_code ec;
    fs::create_directories(fs::path(path).parent_path(), ec);
    int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0)
        throw Error(ErrorKind::LogUnwritable,
                    fmt::format("cannot open log {}: {}", path, strerror(errno)));
    // One write() per line keeps concurrent appends whole.
    ssize_t n = ::write(fd, line.data(), line.size());
    int saved = errno;
    ::close(fd);
    if (n != static_cast<ssize_t>(line.size()))
        throw Error(ErrorKind::LogUnwritable,
                    fmt::format("short write to log {}: {}", path, strerror(saved)));
}

void LogWriter::command(const std::vector<std::string>& fields) {
    std::vector<std::string> line{iso8601(static_cast<int64_t>(clock_->now()))};
    line.insert(line.end(), fields.begin(), fields.end());
    append(commands_path(), line);
}

void LogWriter::job(const std::string& job_id) {
    append(jobs_path(), {iso8601(static_cast<int64_t>(clock_->now())), job_id});
}

void LogWriter::transfer(const std::string& task_or_cmd, const std::string& from_site,
                         const std::string& from_path, const std::string& to_site,
                         const std::string& to_path, int64_t bytes, const std::string& status) {
    append(transfer_path_today(),
           {iso8601(static_cast<int64_t>(clock_->now())), task_or_cmd,
            fmt::format("{}:{}", from_site, from_path), fmt::format("{}:{}", to_site, to_path),
            fmt::format("{}", bytes), status});
}

std::vector<std::pair<int64_t, std::string>> LogWriter::replay_jobs() const {
    std::vector<std::pair<int64_t, std::string>> out;
    std::ifstream f(jobs_path(), std::ios::binary);
    std::string line;
    while (std::getline(f, line)) {
        auto fields = split_ws(line);
        if (fields.size() != 2) continue;
        auto t = parse_iso8601(fields[0]);
        if (!t) continue;
        out.emplace_back(*t, fields[1]);
    }
    return out;
}

}  // namespace gridlet::logs
