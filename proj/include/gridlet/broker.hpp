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
#include "gridlet/util.hpp"

namespace gridlet::broker {

struct QueueSnapshot {
    std::string cluster;
    int64_t running = 0;
    int64_t waiting = 0;
    double probed_at = 0.0;
};

/// L = (running + waiting - max_run) / relative_power, kept exact.
/// The least-loaded cluster minimizes L.
struct LoadIndex {
    std::string cluster;
    Rational value;
};

LoadIndex load_index(const QueueSnapshot& snap, const config::ClusterDescriptor& desc);

/// Reachable cluster with minimum L; exact ties go to the smallest
/// configuration order. Clusters without a snapshot are treated as
/// unreachable and excluded. Throws Error(NoClusterAvailable) when nothing
/// is left.
std::string select_least_loaded(const std::vector<QueueSnapshot>& snaps,
                                const std::vector<config::ClusterDescriptor>& descs);

struct PingRow {
    std::string cluster;
    std::string gateway;
    bool reachable = false;
    double rtt_ms = 0.0;
    std::string note;
};

struct PingReport {
    std::vector<PingRow> rows;
    size_t cluster_count = 0;
};

struct JobRecord {
    std::string job_id;  // "<gateway-name>/<sequence>"
    std::string cluster;
    std::string script_name;
    std::string state;  // wait|run|done|unknown
    int64_t submitted_at = 0;
    std::string note;
};

/// Client-side job operations: probe queue load through the gateways, place
/// jobs on the least-loaded or data-holding cluster, track and fetch output.
/// Every submission appends one line to the jobs log.
class Broker {
public:
    Broker(config::Configuration cfg, ClockPtr clock, std::string token);

    const config::Configuration& cfg() const { return cfg_; }

    PingReport ping(const std::optional<std::string>& cluster) const;
    QueueSnapshot probe_load(const std::string& cluster) const;

    JobRecord submit(const std::string& cluster, const std::string& script,
                     const std::string& script_name);
    JobRecord submit_least_loaded(const std::string& script, const std::string& script_name);
    JobRecord submit_data_aware(const std::string& script, const std::string& script_name,
                                const std::string& lfn);

    JobRecord job_status(const std::optional<std::string>& job_id) const;
    std::string job_output(const std::optional<std::string>& job_id) const;
    std::string run_remote(const std::string& cluster, const std::string& command) const;
    std::string list_queue(const std::string& cluster, const std::string& qstat_param) const;

    /// Sites currently holding a replica of lfn, looked up local-catalog
    /// first, then central only if the local catalog has nothing.
    std::vector<std::string> replica_sites(const std::string& lfn) const;

    /// Jobs reconstructed from the jobs log (submission order).
    std::vector<JobRecord> local_jobs() const;

private:
    std::string resolve_job_id(const std::optional<std::string>& job_id) const;
    JobRecord place_on(const std::vector<std::string>& candidates, const std::string& script,
                       const std::string& script_name);

    config::Configuration cfg_;
    ClockPtr clock_;
    std::string token_;
    logs::LogWriter log_;
};

}  // namespace gridlet::broker
