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

#include "gridlet/broker.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <set>

#include "gridlet/errors.hpp"
#include "gridlet/protocol.hpp"

namespace gridlet::broker {

LoadIndex load_index(const QueueSnapshot& snap, const config::ClusterDescriptor& desc) {
    if (snap.cluster != desc.name)
        throw Error(ErrorKind::MismatchedCluster,
                    fmt::format("snapshot is for '{}', descriptor for '{}'", snap.cluster,
                                desc.name));
    Rational backlog(snap.running + snap.waiting - desc.max_run, 1);
    return {desc.name, rat_div(backlog, desc.relative_power)};
}

std::string select_least_loaded(const std::vector<QueueSnapshot>& snaps,
                                const std::vector<config::ClusterDescriptor>& descs) {
    const config::ClusterDescriptor* best = nullptr;
    Rational best_l;
    for (const auto& desc : descs) {
        auto snap = std::find_if(snaps.begin(), snaps.end(),
                                 [&](const QueueSnapshot& s) { return s.cluster == desc.name; });
        if (snap == snaps.end()) continue;  // unreachable: excluded, not "infinitely loaded"
        Rational l = load_index(*snap, desc).value;
        // strict < keeps the earliest configuration order on exact ties
        if (best == nullptr || l < best_l) {
            best = &desc;
            best_l = l;
        }
    }
    if (best == nullptr)
        throw Error(ErrorKind::NoClusterAvailable, "no reachable cluster");
    return best->name;
}

Broker::Broker(config::Configuration cfg, ClockPtr clock, std::string token)
    : cfg_(std::move(cfg)),
      clock_(clock),
      token_(std::move(token)),
      log_(cfg_.log_root, clock) {}

namespace {

double wall_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

}  // namespace

PingReport Broker::ping(const std::optional<std::string>& cluster) const {
    PingReport report;
    report.cluster_count = cfg_.clusters.size();
    for (const auto& desc : cfg_.clusters) {
        if (cluster && desc.name != *cluster) continue;
        PingRow row{desc.name, desc.gateway, false, 0.0, ""};
        try {
            double t0 = wall_ms();
            protocol::GatewayClient client(desc.gateway, cfg_.net_timeout_ms);
            client.auth(token_);
            std::string site = client.ping();
            row.rtt_ms = wall_ms() - t0;
            row.reachable = true;
            if (site != desc.name)
                row.note = fmt::format("gateway identifies as '{}'", site);
        } catch (const Error& e) {
            row.note = e.what();
        }
        report.rows.push_back(std::move(row));
    }
    if (cluster && report.rows.empty())
        throw Error(ErrorKind::UnknownSite,
                    fmt::format("cluster '{}' is not configured", *cluster));
    return report;
}

QueueSnapshot Broker::probe_load(const std::string& cluster) const {
    const auto& desc = cfg_.cluster_or_throw(cluster);
    protocol::GatewayClient client(desc.gateway, cfg_.net_timeout_ms);
    client.auth(token_);
    auto [running, waiting] = client.qstat();
    return {cluster, running, waiting, clock_->now()};
}

JobRecord Broker::submit(const std::string& cluster, const std::string& script,
                         const std::string& script_name) {
    if (script.empty())
        throw Error(ErrorKind::UsageError, "refusing to submit an empty job script");
    const auto& desc = cfg_.cluster_or_throw(cluster);
    protocol::GatewayClient client(desc.gateway, cfg_.net_timeout_ms);
    client.auth(token_);
    std::string job_id = client.submit(script);  // script bytes staged in the request
    JobRecord rec;
    rec.job_id = job_id;
    rec.cluster = cluster;
    rec.script_name = script_name;
    rec.state = client.job_state(job_id);
    rec.submitted_at = static_cast<int64_t>(clock_->now());
    log_.job(job_id);
    return rec;
}

JobRecord Broker::place_on(const std::vector<std::string>& candidates, const std::string& script,
                           const std::string& script_name) {
    // Fresh probes for every decision; snapshots never cross invocations.
    std::vector<QueueSnapshot> snaps;
    for (const auto& name : candidates) {
        try {
            snaps.push_back(probe_load(name));
        } catch (const Error&) {
            // unreachable clusters are excluded from selection
        }
    }
    std::vector<config::ClusterDescriptor> descs;
    for (const auto& name : candidates) descs.push_back(cfg_.cluster_or_throw(name));
    std::string chosen = select_least_loaded(snaps, descs);
    return submit(chosen, script, script_name);
}

JobRecord Broker::submit_least_loaded(const std::string& script, const std::string& script_name) {
    if (script.empty())
        throw Error(ErrorKind::UsageError, "refusing to submit an empty job script");
    return place_on(cfg_.cluster_names(), script, script_name);
}

std::vector<std::string> Broker::replica_sites(const std::string& lfn) const {
    // local (on site) catalog first; central consulted only when local
    // yields nothing
    std::vector<catalog::FileRecord> recs;
    const auto& local = cfg_.local_cluster();
    try {
        protocol::RemoteCatalog cat(local.gateway, token_, cfg_.net_timeout_ms);
        recs = cat.lookup(lfn);
    } catch (const Error&) {
        // local catalog unreachable: fall through to central
    }
    if (recs.empty() && !cfg_.central_gateway.empty()) {
        protocol::RemoteCatalog cat(cfg_.central_gateway, token_, cfg_.net_timeout_ms);
        recs = cat.lookup(lfn);
    }
    std::set<std::string> sites;
    for (const auto& r : recs) sites.insert(r.site);
    return {sites.begin(), sites.end()};
}

JobRecord Broker::submit_data_aware(const std::string& script, const std::string& script_name,
                                    const std::string& lfn) {
    if (script.empty())
        throw Error(ErrorKind::UsageError, "refusing to submit an empty job script");
    auto sites = replica_sites(lfn);
    if (sites.empty())
        throw Error(ErrorKind::FileUnknown, fmt::format("'{}' is in no catalog", lfn));

    std::vector<std::string> holders;  // replica sites that are configured clusters
    for (const auto& name : cfg_.cluster_names())
        if (std::find(sites.begin(), sites.end(), name) != sites.end()) holders.push_back(name);
    if (holders.empty())
        throw Error(ErrorKind::NoClusterAvailable,
                    fmt::format("'{}' has replicas only outside the configured clusters", lfn));
    if (holders.size() == cfg_.clusters.size())
        return submit_least_loaded(script, script_name);  // replica on all clusters
    return place_on(holders, script, script_name);  // least loaded within the holders
}

std::string Broker::resolve_job_id(const std::optional<std::string>& job_id) const {
    if (job_id) return *job_id;
    auto jobs = log_.replay_jobs();
    if (jobs.empty())
        throw Error(ErrorKind::UnknownJob, "no job id given and the jobs log is empty");
    return jobs.back().second;  // last submitted job
}

JobRecord Broker::job_status(const std::optional<std::string>& job_id) const {
    std::string id = resolve_job_id(job_id);
    auto slash = id.find('/');
    if (slash == std::string::npos)
        throw Error(ErrorKind::UnknownJob, fmt::format("malformed job id '{}'", id));
    std::string cluster = id.substr(0, slash);
    JobRecord rec;
    rec.job_id = id;
    rec.cluster = cluster;
    const auto* desc = cfg_.find_cluster(cluster);
    if (desc == nullptr)
        throw Error(ErrorKind::UnknownJob,
                    fmt::format("job '{}' belongs to unconfigured cluster '{}'", id, cluster));
    try {
        protocol::GatewayClient client(desc->gateway, cfg_.net_timeout_ms);
        client.auth(token_);
        rec.state = client.job_state(id);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::GatewayDown) {
            rec.state = "unknown";
            rec.note = e.what();
        } else {
            throw;
        }
    }
    return rec;
}

std::string Broker::job_output(const std::optional<std::string>& job_id) const {
    std::string id = resolve_job_id(job_id);
    auto slash = id.find('/');
    if (slash == std::string::npos)
        throw Error(ErrorKind::UnknownJob, fmt::format("malformed job id '{}'", id));
    const auto& desc = cfg_.cluster_or_throw(id.substr(0, slash));
    protocol::GatewayClient client(desc.gateway, cfg_.net_timeout_ms);
    client.auth(token_);
    return client.fetch(id);
}

std::string Broker::run_remote(const std::string& cluster, const std::string& command) const {
    const auto& desc = cfg_.cluster_or_throw(cluster);
    protocol::GatewayClient client(desc.gateway, cfg_.net_timeout_ms);
    client.auth(token_);
    return client.run(command);
}

std::string Broker::list_queue(const std::string& cluster, const std::string& qstat_param) const {
    std::string cmd = qstat_param.empty() ? "qstat" : fmt::format("qstat {}", qstat_param);
    return run_remote(cluster, cmd);
}

std::vector<JobRecord> Broker::local_jobs() const {
    std::vector<JobRecord> out;
    for (const auto& [t, id] : log_.replay_jobs()) {
        JobRecord rec;
        rec.job_id = id;
        auto slash = id.find('/');
        rec.cluster = slash == std::string::npos ? "" : id.substr(0, slash);
        rec.state = "unknown";
        rec.submitted_at = t;
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace gridlet::broker
