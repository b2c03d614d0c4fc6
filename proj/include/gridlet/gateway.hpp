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
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "gridlet/catalog.hpp"
#include "gridlet/clock.hpp"
#include "gridlet/net.hpp"
#include "gridlet/util.hpp"

namespace gridlet::gateway {

/// One simulated batch job. Service demand comes from an optional
/// `#GRIDLET nominal=<seconds>` header line in the script (default 60);
/// the actual virtual service time is nominal / relative_power.
struct SimJob {
    std::string id;
    std::string script;
    double nominal_seconds = 60.0;
    double submitted_at = 0.0;
    double started_at = 0.0;
    double finished_at = 0.0;
    std::string output;
};

enum class JobState { Wait, Run, Done, Unknown };

std::string to_string(JobState s);

/// FIFO batch queue with `slots` run slots and power-scaled service times.
/// Pure state machine: time only moves through sync_to(). Not thread-safe on
/// its own; the server serializes access.
class SimQueue {
public:
    SimQueue(int64_t slots, Rational relative_power);

    /// Admission happens immediately when a run slot is free.
    std::string submit(const std::string& gateway_name, const std::string& script, double now);

    /// Advances internal time; jobs whose service time elapsed complete and
    /// waiting jobs are admitted in FIFO order. Returns newly completed ids.
    std::vector<std::string> sync_to(double now);

    JobState state_of(const std::string& job_id) const;
    const SimJob* done_job(const std::string& job_id) const;

    int64_t running_count() const { return static_cast<int64_t>(running_.size()); }
    int64_t waiting_count() const { return static_cast<int64_t>(waiting_.size()); }
    int64_t done_count() const { return static_cast<int64_t>(done_.size()); }
    int64_t submitted_count() const { return submitted_; }
    int64_t slots() const { return slots_; }
    double service_seconds(double nominal) const;

    /// qstat-style text rows: (job id, state, remaining/queued info).
    std::string qstat_text(const std::string& param) const;

private:
    void admit(double now);

    int64_t slots_;
    Rational power_;
    double now_ = 0.0;
    int64_t seq_ = 0;
    int64_t submitted_ = 0;
    std::deque<SimJob> waiting_;
    std::vector<SimJob> running_;
    std::map<std::string, SimJob> done_;
};

/// Parses the nominal-seconds header; default 60 when absent or malformed.
double parse_nominal_seconds(const std::string& script);

/// Interprets the whitelisted script statements (`echo <text>` lines) and
/// returns the captured standard output.
std::string interpret_script_output(const std::string& script);

/// Byte store rooted at a real directory, addressed by site-logical absolute
/// paths ("/data/f1" lives at <root>/data/f1). Rejects path escapes.
class FileStore {
public:
    explicit FileStore(std::string root);

    std::string realize(const std::string& site_path) const;  // throws on escape

    struct Entry {
        std::string name;
        int64_t size = 0;
    };
    /// Regular files in a directory (sorted), or the single entry when the
    /// path names a file.
    std::vector<Entry> list(const std::string& site_path) const;

    std::string read_range(const std::string& site_path, int64_t offset, int64_t count) const;
    void write_range(const std::string& site_path, int64_t offset, std::string_view data);
    int64_t file_size(const std::string& site_path) const;

    const std::string& root() const { return root_; }

private:
    std::string root_;
};

struct GatewayOptions {
    std::string name;                 // cluster/site name, job-id prefix
    std::string host_label = "localhost";
    std::string bind_host = "127.0.0.1";
    uint16_t port = 0;                // 0 picks an ephemeral port
    int64_t slots = 1;
    Rational relative_power{1, 1};
    std::string storage_root;
    std::string state_dir;            // catalog + links store; empty = in-memory only
    catalog::Tier tier = catalog::Tier::Site;
    std::string central_gateway;      // for RUN replicate
    catalog::Subscription subscription;
    std::vector<std::string> scan_roots{"/"};  // spider default roots (site paths)
    int io_timeout_ms = 10000;
};

/// The network-facing entry point of one simulated cluster: sessions speak
/// the line protocol (AUTH, PING, QSTAT, SUBMIT, STATUS, FETCH, RUN, LIST,
/// GET, PUT, PULL, CAT-*). State mutations are serialized; every request line
/// is answered by exactly one OK/ERR line.
class GatewayServer {
public:
    GatewayServer(GatewayOptions opts, ClockPtr clock);
    ~GatewayServer();

    GatewayServer(const GatewayServer&) = delete;
    GatewayServer& operator=(const GatewayServer&) = delete;

    void start();
    void stop();

    uint16_t port() const { return port_; }
    std::string endpoint() const;
    const GatewayOptions& options() const { return opts_; }
    ClockPtr clock() const { return clock_; }

    /// Manual-clock test hook: advance virtual time and run queue
    /// transitions. Returns newly completed job ids.
    std::vector<std::string> step(double seconds);

    struct QueueStats {
        int64_t running = 0;
        int64_t waiting = 0;
        int64_t done = 0;
        int64_t submitted = 0;
    };
    QueueStats queue_stats();

    /// Read-only catalog snapshot for tests.
    catalog::Instance catalog_snapshot();

private:
    struct Session;
    void accept_loop();
    void serve_session(net::Conn conn);
    bool handle_request(Session& s, net::Conn& conn, const std::string& line);
    std::string run_command(const std::string& command, const std::string& token);
    int64_t pull_file(const std::string& src_gateway, const std::string& src_path,
                      const std::string& dst_path, int streams, const std::string& token);
    void persist_catalog();
    void reap_sessions(bool all);

    GatewayOptions opts_;
    ClockPtr clock_;
    net::Listener listener_;
    uint16_t port_ = 0;
    std::thread accept_thread_;
    std::vector<std::thread> sessions_;
    std::set<std::thread::id> finished_sessions_;
    std::set<int> session_fds_;
    std::mutex sessions_mu_;
    std::atomic<bool> running_{false};

    std::mutex state_mu_;  // queue + catalog + sequence
    SimQueue queue_;
    catalog::Instance catalog_;
    FileStore store_;
};

}  // namespace gridlet::gateway
