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

#include "gridlet/transfer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "gridlet/errors.hpp"
#include "gridlet/protocol.hpp"
#include "gridlet/util.hpp"

namespace fs = std::filesystem;

namespace gridlet::transfer {

double effective_rate(const ThroughputModel& model, double t) {
    double f = model.diurnal_factor;
    double c = std::cos(2.0 * M_PI * (t + model.phase) / model.period);
    return model.base_rate * (f + 1.0 + (f - 1.0) * c) / (2.0 * f);
}

double transferred_bytes(const ThroughputModel& model, double t0, double duration) {
    // closed-form integral of the raised cosine
    double f = model.diurnal_factor;
    double w = 2.0 * M_PI / model.period;
    double a = t0 + model.phase;
    double b = a + duration;
    double osc = (f - 1.0) / w * (std::sin(w * b) - std::sin(w * a));
    return model.base_rate / (2.0 * f) * ((f + 1.0) * duration + osc);
}

double virtual_elapsed(const ThroughputModel& model, double t0, double bytes) {
    if (bytes <= 0) return 0.0;
    // rate is bounded in [base/f, base], which brackets the answer
    double lo = bytes / model.base_rate;
    double hi = bytes * model.diurnal_factor / model.base_rate;
    for (int i = 0; i < 200 && hi - lo > 1e-9 * hi; ++i) {
        double mid = 0.5 * (lo + hi);
        if (transferred_bytes(model, t0, mid) < bytes)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::string to_string(TaskState s) {
    switch (s) {
        case TaskState::Described: return "described";
        case TaskState::Activated: return "activated";
        case TaskState::Running: return "running";
        case TaskState::Done: return "done";
        case TaskState::Failed: return "failed";
    }
    return "failed";
}

std::optional<TaskState> parse_task_state(std::string_view s) {
    if (s == "described") return TaskState::Described;
    if (s == "activated") return TaskState::Activated;
    if (s == "running") return TaskState::Running;
    if (s == "done") return TaskState::Done;
    if (s == "failed") return TaskState::Failed;
    return std::nullopt;
}

std::string TransferTask::to_line() const {
    return fmt::format(
        "id={} from_site={} to_site={} from_location={} to_location={} collection={} pattern={} "
        "streams={} state={} created={} activated_at={} finished_at={} bytes_moved={}",
        id, from_site, to_site, from_location, to_location, collection, pattern, streams,
        to_string(state), created, activated_at, finished_at, bytes_moved);
}

std::optional<TransferTask> TransferTask::from_line(std::string_view line) {
    std::map<std::string, std::string> kv;
    for (const auto& tok : split_ws(line)) {
        auto eq = tok.find('=');
        if (eq == std::string::npos || eq == 0) return std::nullopt;
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    TransferTask t;
    auto id = parse_i64(kv["id"]);
    auto streams = parse_i64(kv["streams"]);
    auto state = parse_task_state(kv["state"]);
    auto created = parse_i64(kv["created"]);
    auto activated = parse_i64(kv["activated_at"]);
    auto finished = parse_i64(kv["finished_at"]);
    auto moved = parse_i64(kv["bytes_moved"]);
    if (!id || !streams || !state || !created || !activated || !finished || !moved)
        return std::nullopt;
    t.id = *id;
    t.from_site = kv["from_site"];
    t.to_site = kv["to_site"];
    t.from_location = kv["from_location"];
    t.to_location = kv["to_location"];
    t.collection = kv["collection"];
    t.pattern = kv["pattern"];
    t.streams = static_cast<int>(*streams);
    t.state = *state;
    t.created = *created;
    t.activated_at = *activated;
    t.finished_at = *finished;
    t.bytes_moved = *moved;
    return t;
}

TaskStore::TaskStore(std::string path) : path_(std::move(path)) {}

std::vector<TransferTask> TaskStore::load() const {
    std::vector<TransferTask> out;
    std::ifstream f(path_, std::ios::binary);
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (auto t = TransferTask::from_line(line)) out.push_back(std::move(*t));
    }
    return out;
}

void TaskStore::save(const std::vector<TransferTask>& tasks) const {
    std::error_code ec;
    fs::create_directories(fs::path(path_).parent_path(), ec);
    std::string tmp = path_ + ".tmp";
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    f << "#gridlet-tasks\n";
    for (const auto& t : tasks) f << t.to_line() << "\n";
    f.close();
    if (!f) throw Error(ErrorKind::LogUnwritable, fmt::format("cannot write task store {}", path_));
    fs::rename(tmp, path_, ec);
    if (ec)
        throw Error(ErrorKind::LogUnwritable,
                    fmt::format("cannot replace task store {}: {}", path_, ec.message()));
}

TransferTask TaskStore::define(const TaskSpec& spec, const config::Configuration& cfg,
                               int64_t now) {
    cfg.cluster_or_throw(spec.from_site);
    cfg.cluster_or_throw(spec.to_site);
    if (!normalize_site_path(spec.from_location))
        throw Error(ErrorKind::UsageError,
                    fmt::format("from_location '{}' is not absolute", spec.from_location));
    if (!spec.to_location.empty() && !normalize_site_path(spec.to_location))
        throw Error(ErrorKind::UsageError,
                    fmt::format("to_location '{}' is not absolute", spec.to_location));
    if (spec.streams < 1) throw Error(ErrorKind::UsageError, "streams must be >= 1");

    auto tasks = load();
    TransferTask t;
    t.id = 1;
    for (const auto& existing : tasks) t.id = std::max(t.id, existing.id + 1);
    t.from_site = spec.from_site;
    t.to_site = spec.to_site;
    t.from_location = *normalize_site_path(spec.from_location);
    t.to_location = spec.to_location.empty() ? "" : *normalize_site_path(spec.to_location);
    t.collection = spec.collection;
    t.pattern = spec.pattern;
    t.streams = spec.streams;
    t.state = TaskState::Described;
    t.created = now;
    tasks.push_back(t);
    save(tasks);
    return t;
}

TransferTask TaskStore::activate(int64_t id, int64_t now) {
    auto tasks = load();
    for (auto& t : tasks) {
        if (t.id != id) continue;
        if (t.state != TaskState::Described && t.state != TaskState::Failed)
            throw Error(ErrorKind::BadState,
                        fmt::format("task {} is {}, not described/failed", id,
                                    to_string(t.state)));
        t.state = TaskState::Activated;
        t.activated_at = now;
        save(tasks);
        return t;
    }
    throw Error(ErrorKind::UnknownTask, fmt::format("no task {}", id));
}

std::optional<TransferTask> TaskStore::get(int64_t id) const {
    for (const auto& t : load())
        if (t.id == id) return t;
    return std::nullopt;
}

std::vector<TransferTask> TaskStore::all() const { return load(); }

void TaskStore::update(const TransferTask& task) {
    auto tasks = load();
    for (auto& t : tasks) {
        if (t.id == task.id) {
            t = task;
            save(tasks);
            return;
        }
    }
    throw Error(ErrorKind::UnknownTask, fmt::format("no task {}", task.id));
}

CopyReport execute_copy(const config::Configuration& cfg, const std::string& token,
                        const Clock& clock, logs::LogWriter& log, const std::string& label,
                        const std::string& from_site, const std::string& from_location,
                        const std::string& to_site, const std::string& to_location,
                        const std::string& pattern, const std::string& collection, int streams) {
    const auto& src_desc = cfg.cluster_or_throw(from_site);
    const auto& dst_desc = cfg.cluster_or_throw(to_site);
    if (streams < 1) throw Error(ErrorKind::UsageError, "streams must be >= 1");
    auto from_norm = normalize_site_path(from_location);
    if (!from_norm)
        throw Error(ErrorKind::UsageError,
                    fmt::format("from location '{}' is not absolute", from_location));
    std::string to_loc = to_location.empty() ? *from_norm : to_location;
    auto to_norm = normalize_site_path(to_loc);
    if (!to_norm)
        throw Error(ErrorKind::UsageError, fmt::format("to location '{}' is not absolute", to_loc));

    protocol::GatewayClient src(src_desc.gateway, cfg.net_timeout_ms);
    src.auth(token);
    auto entries = src.list(*from_norm);

    // optional collection filter: names the source site catalog lists for
    // that collection at this location; ANDed with the glob
    std::set<std::string> in_collection;
    if (!collection.empty()) {
        protocol::RemoteCatalog cat(src_desc.gateway, token, cfg.net_timeout_ms);
        for (const auto& rec : cat.all_records())
            if (rec.site == from_site && rec.collection == collection &&
                rec.location == *from_norm)
                in_collection.insert(rec.lfn);
    }

    std::vector<protocol::FileEntry> matched;
    for (const auto& e : entries) {
        if (!glob_match(pattern, e.name)) continue;
        if (!collection.empty() && !in_collection.count(e.name)) continue;
        matched.push_back(e);
    }
    if (matched.empty())
        throw Error(ErrorKind::NoMatch,
                    fmt::format("nothing in {}:{} matches '{}'", from_site, *from_norm, pattern));

    protocol::GatewayClient dst(dst_desc.gateway, cfg.net_timeout_ms > 0
                                    ? std::max(cfg.net_timeout_ms, 60000)
                                    : 0);  // pulls can outlast a probe timeout
    dst.auth(token);
    protocol::RemoteCatalog dst_cat(dst_desc.gateway, token, cfg.net_timeout_ms);

    CopyReport report;
    double t0 = clock.now();
    auto wall0 = std::chrono::steady_clock::now();
    for (const auto& e : matched) {
        std::string src_path = join_site_path(*from_norm, e.name);
        std::string dst_path = join_site_path(*to_norm, e.name);
        try {
            int64_t bytes = dst.pull(src_desc.gateway, src_path, dst_path, streams);
            catalog::FileRecord rec;
            rec.lfn = e.name;
            rec.site = to_site;
            rec.host = dst_desc.host_label;
            rec.location = *to_norm;
            rec.size_bytes = bytes;
            rec.kind = catalog::FileKind::Data;
            rec.collection = collection;
            rec.mtime = static_cast<int64_t>(clock.now());
            rec.origin = from_site;
            rec.synced = false;
            dst_cat.upsert(rec);  // registered only after the final byte landed
            report.copied.push_back(e.name);
            report.bytes += bytes;
            ++report.files;
            log.transfer(label, from_site, src_path, to_site, dst_path, bytes, "ok");
        } catch (const Error& err) {
            report.failed.emplace_back(e.name, err.what());
            log.transfer(label, from_site, src_path, to_site, dst_path, 0, "failed");
        }
    }
    report.elapsed_wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    ThroughputModel model{cfg.transfer.base_rate, cfg.transfer.diurnal_factor,
                          cfg.transfer.period, cfg.transfer.phase};
    report.elapsed_virtual_s = virtual_elapsed(model, t0, static_cast<double>(report.bytes));
    return report;
}

std::vector<TaskOutcome> run_activated_tasks(TaskStore& store, const config::Configuration& cfg,
                                             const std::string& token, const Clock& clock,
                                             logs::LogWriter& log) {
    std::vector<TaskOutcome> outcomes;
    auto tasks = store.all();
    std::sort(tasks.begin(), tasks.end(),
              [](const TransferTask& a, const TransferTask& b) { return a.id < b.id; });
    for (auto task : tasks) {
        if (task.state != TaskState::Activated) continue;
        task.state = TaskState::Running;
        task.bytes_moved = 0;
        store.update(task);
        TaskOutcome outcome;
        outcome.id = task.id;
        try {
            auto report = execute_copy(cfg, token, clock, log, fmt::format("task/{}", task.id),
                                       task.from_site, task.from_location, task.to_site,
                                       task.to_location, task.pattern, task.collection,
                                       task.streams);
            task.bytes_moved = report.bytes;
            task.state = report.complete() ? TaskState::Done : TaskState::Failed;
            outcome.detail = report.complete()
                                 ? fmt::format("files={} bytes={}", report.files, report.bytes)
                                 : fmt::format("{} of {} files failed", report.failed.size(),
                                               report.failed.size() + report.copied.size());
        } catch (const Error& e) {
            task.state = TaskState::Failed;
            outcome.detail = e.what();
        }
        task.finished_at = static_cast<int64_t>(clock.now());
        store.update(task);
        outcome.state = task.state;
        outcomes.push_back(std::move(outcome));
    }
    return outcomes;
}

}  // namespace gridlet::transfer
