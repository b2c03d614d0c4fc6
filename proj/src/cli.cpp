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

#include "gridlet/cli.hpp"

#include <fmt/format.h>
#include <signal.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gridlet/broker.hpp"
#include "gridlet/catalog.hpp"
#include "gridlet/config.hpp"
#include "gridlet/errors.hpp"
#include "gridlet/gateway.hpp"
#include "gridlet/logs.hpp"
#include "gridlet/protocol.hpp"
#include "gridlet/transfer.hpp"
#include "gridlet/util.hpp"

namespace fs = std::filesystem;

namespace gridlet::cli {

namespace {

const char* kUsage = R"(usage: gridlet [--config FILE] [--rc FILE] [--clock SECONDS] <command> [args]

user commands
  proxw                         issue a one-week auth token
  ping [CLUSTER]                test availability (all clusters or one)
  run CLUSTER CMD...            run one command on a cluster
  sub SCRIPT                    submit to the least loaded cluster
  sub CLUSTER SCRIPT            submit to a specific cluster
  sub-data SCRIPT LFN           submit to the cluster holding LFN
  jobs CLUSTER [PARAM]          queue listing (qstat passthrough)
  stat [JOB-ID]                 job status (default: last submitted)
  get [JOB-ID]                  output of a finished job
  copy FROM:LOC TO:[LOC] [PAT]  third-party directory copy
  link LFN | --list FILE | --substr S [--dest DIR]
                                soft-link locally available files
  linked                        list files linked by this user
  release LFN | --here | --all  drop links and their records
  task define FROM:LOC TO:[LOC] [--pattern P] [--collection C] [--streams N]
  task activate ID | task run | task list

admin commands
  gateway CLUSTER               serve a simulated cluster gateway
  central                       serve the central catalog
  spider CLUSTER [ROOT...]      reconcile a site catalog with its disk
  catalog sync [CLUSTER]        run one replication cycle against central
  catalog lookup LFN            local-first replica lookup

Per-cluster aliases follow the configuration: ping-s, sub-p, run-unm, jobs-s, ...
)";

[[noreturn]] void usage_error(const std::string& why) {
    throw Error(ErrorKind::UsageError, why);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) usage_error(fmt::format("cannot read {}", path));
    std::stringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

std::string current_user() {
    const char* user = getenv("USER");
    if (user != nullptr && user[0] != '\0') return user;
    return fmt::format("uid{}", getuid());
}

std::string cwd() {
    char buf[4096];
    if (getcwd(buf, sizeof(buf)) == nullptr) usage_error("cannot resolve working directory");
    return buf;
}

// "site:/path" or "site:"; returns (site, path)
std::pair<std::string, std::string> parse_site_loc(const std::string& arg) {
    auto colon = arg.find(':');
    if (colon == std::string::npos || colon == 0)
        usage_error(fmt::format("expected SITE:PATH, got '{}'", arg));
    return {arg.substr(0, colon), arg.substr(colon + 1)};
}

struct Ctx {
    config::Configuration cfg;
    ClockPtr clock;
    logs::LogWriter log;
    GlobalOptions opts;

    std::string need_token() const {
        std::string token = config::load_token(cfg.token_file);
        if (token.empty())
            throw Error(ErrorKind::AuthRejected,
                        fmt::format("no auth token at {}; run 'gridlet proxw' first",
                                    cfg.token_file));
        return token;
    }

    broker::Broker make_broker() const { return {cfg, clock, need_token()}; }

    // Site-logical paths of the local cluster live under its storage root.
    catalog::PathMapper local_mapper() const {
        const auto& local = cfg.local_cluster();
        if (local.root.empty())
            throw Error(ErrorKind::UsageError,
                        fmt::format("cluster.{}.root is not configured", local.name));
        std::string root = local.root;
        return [root](const std::string& p) {
            auto norm = normalize_site_path(p);
            if (!norm) throw Error(ErrorKind::PathEscape, fmt::format("bad path '{}'", p));
            return *norm == "/" ? root : root + *norm;
        };
    }
};

int cmd_proxw(Ctx& ctx) {
    auto token =
        config::issue_token(ctx.cfg.token_file, *ctx.clock, ctx.cfg.token_lifetime);
    std::cout << fmt::format("token issued, valid {} s (until {})\n", token.lifetime_seconds,
                             iso8601(token.issued_at + token.lifetime_seconds));
    return 0;
}

int cmd_ping(Ctx& ctx, const std::optional<std::string>& cluster) {
    auto broker = ctx.make_broker();
    auto report = broker.ping(cluster);
    std::cout << fmt::format("clusters: {}\n", report.cluster_count);
    size_t up = 0;
    for (const auto& row : report.rows) {
        if (row.reachable) {
            ++up;
            std::cout << fmt::format("{} {} up {:.1f}ms{}\n", row.cluster, row.gateway,
                                     row.rtt_ms, row.note.empty() ? "" : " (" + row.note + ")");
        } else {
            std::cout << fmt::format("{} {} down ({})\n", row.cluster, row.gateway, row.note);
        }
    }
    std::cout << fmt::format("{}/{} reachable\n", up, report.rows.size());
    return 0;  // unreachable clusters are reported, not fatal
}

int cmd_sub(Ctx& ctx, const std::vector<std::string>& args) {
    std::optional<std::string> cluster;
    std::string script_path;
    if (args.size() == 2 && ctx.cfg.find_cluster(args[0]) != nullptr) {
        cluster = args[0];
        script_path = args[1];
    } else if (args.size() == 1) {
        script_path = args[0];
    } else {
        usage_error("usage: sub [CLUSTER] SCRIPT");
    }
    std::string script = read_file(script_path);
    auto broker = ctx.make_broker();
    std::string name = fs::path(script_path).filename().string();
    auto rec = cluster ? broker.submit(*cluster, script, name)
                       : broker.submit_least_loaded(script, name);
    std::cout << fmt::format("job {} submitted to {} state={}\n", rec.job_id, rec.cluster,
                             rec.state);
    return 0;
}

int cmd_sub_data(Ctx& ctx, const std::vector<std::string>& args) {
    if (args.size() != 2) usage_error("usage: sub-data SCRIPT LFN");
    std::string script = read_file(args[0]);
    // a path argument is reduced to its final component before lookup
    std::string lfn = fs::path(args[1]).filename().string();
    auto broker = ctx.make_broker();
    auto rec = broker.submit_data_aware(script, fs::path(args[0]).filename().string(), lfn);
    std::cout << fmt::format("job {} submitted to {} state={} (data: {})\n", rec.job_id,
                             rec.cluster, rec.state, lfn);
    return 0;
}

int cmd_stat(Ctx& ctx, const std::vector<std::string>& args) {
    if (args.size() > 1) usage_error("usage: stat [JOB-ID]");
    auto broker = ctx.make_broker();
    auto rec = broker.job_status(args.empty() ? std::nullopt
                                              : std::optional<std::string>(args[0]));
    std::cout << fmt::format("{} state={}{}\n", rec.job_id, rec.state,
                             rec.note.empty() ? "" : " (" + rec.note + ")");
    return rec.note.empty() ? 0 : 3;  // lost contact reads as unknown + note
}

int cmd_get(Ctx& ctx, const std::vector<std::string>& args) {
    if (args.size() > 1) usage_error("usage: get [JOB-ID]");
    auto broker = ctx.make_broker();
    std::cout << broker.job_output(args.empty() ? std::nullopt
                                                : std::optional<std::string>(args[0]));
    return 0;
}

int cmd_run(Ctx& ctx, const std::vector<std::string>& args) {
    if (args.size() < 2) usage_error("usage: run CLUSTER CMD...");
    auto broker = ctx.make_broker();
    std::vector<std::string> cmd(args.begin() + 1, args.end());
    std::cout << broker.run_remote(args[0], join(cmd, ' '));
    return 0;
}

int cmd_jobs(Ctx& ctx, const std::vector<std::string>& args) {
    if (args.empty() || args.size() > 2) usage_error("usage: jobs CLUSTER [PARAM]");
    auto broker = ctx.make_broker();
    std::cout << broker.list_queue(args[0], args.size() > 1 ? args[1] : "");
    return 0;
}

int cmd_copy(Ctx& ctx, const std::vector<std::string>& args) {
    if (args.size() < 2 || args.size() > 3) usage_error("usage: copy FROM:LOC TO:[LOC] [PATTERN]");
    auto [from_site, from_loc] = parse_site_loc(args[0]);
    auto [to_site, to_loc] = parse_site_loc(args[1]);
    if (from_loc.empty()) usage_error("FROM location may not be empty");
    std::string pattern = args.size() > 2 ? args[2] : "";
    auto report = transfer::execute_copy(ctx.cfg, ctx.need_token(), *ctx.clock, ctx.log, "gcopy",
                                         from_site, from_loc, to_site, to_loc, pattern, "",
                                         ctx.cfg.transfer.streams);
    std::cout << fmt::format("copied {} files {} bytes in {:.3f} s (virtual)\n", report.files,
                             report.bytes, report.elapsed_virtual_s);
    for (const auto& [name, why] : report.failed)
        std::cerr << fmt::format("failed {}: {}\n", name, why);
    return report.complete() ? 0 : 3;
}

int cmd_link(Ctx& ctx, const std::vector<std::string>& args) {
    catalog::LinkSelector sel;
    std::string dest = cwd();
    std::vector<std::string> positional;
    for (size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--list" || args[i] == "--substr" || args[i] == "--dest") {
            if (i + 1 >= args.size()) usage_error(fmt::format("{} needs a value", args[i]));
            if (args[i] == "--dest")
                dest = args[i + 1];
            else if (args[i] == "--list") {
                sel.kind = catalog::LinkSelector::Kind::List;
                for (const auto& line : split(read_file(args[i + 1]), '\n'))
                    if (!trim(line).empty()) sel.list.push_back(trim(line));
            } else {
                sel.kind = catalog::LinkSelector::Kind::Substring;
                sel.value = args[i + 1];
            }
            ++i;
        } else {
            positional.push_back(args[i]);
        }
    }
    if (sel.kind == catalog::LinkSelector::Kind::Single) {
        if (positional.size() != 1) usage_error("usage: link LFN | --list FILE | --substr S");
        sel.value = positional[0];
    } else if (!positional.empty()) {
        usage_error("unexpected arguments to link");
    }

    const auto& local = ctx.cfg.local_cluster();
    protocol::RemoteCatalog cat(local.gateway, ctx.need_token(), ctx.cfg.net_timeout_ms);
    auto outcome = catalog::link_files(cat, local.name, sel, dest, current_user(),
                                       static_cast<int64_t>(ctx.clock->now()),
                                       ctx.local_mapper());
    for (const auto& link : outcome.created)
        std::cout << fmt::format("{} -> {}\n", link.lfn, link.link_path);
    for (const auto& s : outcome.skipped) std::cerr << fmt::format("skipped {}\n", s);
    std::cout << fmt::format("linked {}\n", outcome.created.size());
    return 0;
}

int cmd_linked(Ctx& ctx) {
    const auto& local = ctx.cfg.local_cluster();
    protocol::RemoteCatalog cat(local.gateway, ctx.need_token(), ctx.cfg.net_timeout_ms);
    for (const auto& link : catalog::show_linked(cat, current_user()))
        std::cout << fmt::format("{} {} {}\n", iso8601(link.created), link.lfn, link.link_path);
    return 0;
}

int cmd_release(Ctx& ctx, const std::vector<std::string>& args) {
    if (args.size() != 1) usage_error("usage: release LFN | --here | --all");
    catalog::ReleaseSelector sel;
    if (args[0] == "--all") {
        sel.kind = catalog::ReleaseSelector::Kind::All;
    } else if (args[0] == "--here") {
        sel.kind = catalog::ReleaseSelector::Kind::Here;
        sel.value = cwd();
    } else {
        sel.kind = catalog::ReleaseSelector::Kind::Single;
        sel.value = args[0];
    }
    const auto& local = ctx.cfg.local_cluster();
    protocol::RemoteCatalog cat(local.gateway, ctx.need_token(), ctx.cfg.net_timeout_ms);
    auto outcome = catalog::release_files(cat, sel, current_user());
    for (const auto& w : outcome.warnings) std::cerr << fmt::format("warning: {}\n", w);
    std::cout << fmt::format("released {}\n", outcome.released);
    return 0;
}

int cmd_task(Ctx& ctx, const std::vector<std::string>& args) {
    if (args.empty()) usage_error("usage: task define|activate|run|list ...");
    transfer::TaskStore store(ctx.cfg.transfer.task_file);
    int64_t now = static_cast<int64_t>(ctx.clock->now());
    if (args[0] == "define") {
        transfer::TaskSpec spec;
        spec.streams = ctx.cfg.transfer.streams;
        std::vector<std::string> positional;
        for (size_t i = 1; i < args.size(); ++i) {
            if (args[i] == "--pattern" || args[i] == "--collection" || args[i] == "--streams") {
                if (i + 1 >= args.size()) usage_error(fmt::format("{} needs a value", args[i]));
                if (args[i] == "--pattern")
                    spec.pattern = args[i + 1];
                else if (args[i] == "--collection")
                    spec.collection = args[i + 1];
                else {
                    auto n = parse_i64(args[i + 1]);
                    if (!n || *n < 1) usage_error("--streams needs a positive integer");
                    spec.streams = static_cast<int>(*n);
                }
                ++i;
            } else {
                positional.push_back(args[i]);
            }
        }
        if (positional.size() != 2) usage_error("usage: task define FROM:LOC TO:[LOC] [options]");
        std::tie(spec.from_site, spec.from_location) = parse_site_loc(positional[0]);
        std::tie(spec.to_site, spec.to_location) = parse_site_loc(positional[1]);
        auto task = store.define(spec, ctx.cfg, now);
        std::cout << fmt::format("task {} described\n", task.id);
        return 0;
    }
    if (args[0] == "activate") {
        if (args.size() != 2) usage_error("usage: task activate ID");
        auto id = parse_i64(args[1]);
        if (!id) usage_error("task id must be an integer");
        auto task = store.activate(*id, now);
        std::cout << fmt::format("task {} activated\n", task.id);
        return 0;
    }
    if (args[0] == "run") {
        auto outcomes =
            transfer::run_activated_tasks(store, ctx.cfg, ctx.need_token(), *ctx.clock, ctx.log);
        for (const auto& o : outcomes)
            std::cout << fmt::format("task {} {} {}\n", o.id, transfer::to_string(o.state),
                                     o.detail);
        std::cout << fmt::format("ran {} tasks\n", outcomes.size());
        for (const auto& o : outcomes)
            if (o.state != transfer::TaskState::Done) return 3;
        return 0;
    }
    if (args[0] == "list") {
        for (const auto& t : store.all())
            std::cout << fmt::format("task {} {} {}:{} -> {}:{} bytes={}\n", t.id,
                                     transfer::to_string(t.state), t.from_site, t.from_location,
                                     t.to_site,
                                     t.to_location.empty() ? t.from_location : t.to_location,
                                     t.bytes_moved);
        return 0;
    }
    usage_error(fmt::format("unknown task subcommand '{}'", args[0]));
}

int serve_gateway(Ctx& ctx, const gateway::GatewayOptions& opts) {
    auto clock = ctx.opts.clock_pin ? make_manual_clock(*ctx.opts.clock_pin)
                                    : make_realtime_clock();
    gateway::GatewayServer server(opts, clock);
    server.start();
    std::cout << fmt::format("{} gateway listening on {}\n", opts.name, server.endpoint())
              << std::flush;
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
    return 0;
}

int cmd_gateway(Ctx& ctx, const std::vector<std::string>& args) {
    if (args.size() != 1) usage_error("usage: gateway CLUSTER");
    const auto& desc = ctx.cfg.cluster_or_throw(args[0]);
    if (desc.root.empty())
        usage_error(fmt::format("cluster.{}.root is not configured", desc.name));
    gateway::GatewayOptions opts;
    opts.name = desc.name;
    opts.host_label = desc.host_label;
    auto [host, port] = net::parse_endpoint(desc.gateway);
    opts.bind_host = host;
    opts.port = port;
    opts.slots = desc.max_run;
    opts.relative_power = desc.relative_power;
    opts.storage_root = desc.root;
    opts.state_dir = desc.state.empty() ? desc.root + ".state" : desc.state;
    opts.tier = catalog::Tier::Site;
    opts.central_gateway = ctx.cfg.central_gateway;
    opts.subscription = ctx.cfg.subscription;
    return serve_gateway(ctx, opts);
}

int cmd_central(Ctx& ctx) {
    if (ctx.cfg.central_gateway.empty()) usage_error("central.gateway is not configured");
    gateway::GatewayOptions opts;
    opts.name = "central";
    auto [host, port] = net::parse_endpoint(ctx.cfg.central_gateway);
    opts.bind_host = host;
    opts.port = port;
    opts.tier = catalog::Tier::Central;
    if (!ctx.cfg.central_state.empty()) opts.state_dir = ctx.cfg.central_state;
    return serve_gateway(ctx, opts);
}

int cmd_spider(Ctx& ctx, const std::vector<std::string>& args) {
    if (args.empty()) usage_error("usage: spider CLUSTER [ROOT...]");
    auto broker = ctx.make_broker();
    std::vector<std::string> cmd{"spider"};
    cmd.insert(cmd.end(), args.begin() + 1, args.end());
    std::cout << broker.run_remote(args[0], join(cmd, ' '));
    return 0;
}

int cmd_catalog(Ctx& ctx, const std::vector<std::string>& args) {
    if (args.empty()) usage_error("usage: catalog sync [CLUSTER] | catalog lookup LFN");
    if (args[0] == "sync") {
        std::string cluster = args.size() > 1 ? args[1] : ctx.cfg.local_site;
        auto broker = ctx.make_broker();
        std::cout << broker.run_remote(cluster, "replicate");
        return 0;
    }
    if (args[0] == "lookup") {
        if (args.size() != 2) usage_error("usage: catalog lookup LFN");
        auto broker = ctx.make_broker();
        auto sites = broker.replica_sites(args[1]);
        if (sites.empty()) {
            std::cerr << fmt::format("{} is in no catalog\n", args[1]);
            return 2;
        }
        for (const auto& s : sites) std::cout << fmt::format("{} {}\n", args[1], s);
        return 0;
    }
    usage_error(fmt::format("unknown catalog subcommand '{}'", args[0]));
}

// gping-s / gsub-p style alias: "<verb>-<cluster>" with the cluster list
// taken from the configuration, so adding a cluster needs no new code.
std::optional<std::pair<std::string, std::string>> split_alias(
    const std::string& verb, const config::Configuration& cfg) {
    static const std::vector<std::string> aliasable{"ping", "run", "sub", "jobs", "spider"};
    for (const auto& base : aliasable) {
        if (verb.size() > base.size() + 1 && starts_with(verb, base) &&
            verb[base.size()] == '-') {
            std::string cluster = verb.substr(base.size() + 1);
            if (cfg.find_cluster(cluster) != nullptr) return std::make_pair(base, cluster);
        }
    }
    return std::nullopt;
}

}  // namespace

const char* usage_text() { return kUsage; }

int dispatch(const std::vector<std::string>& args, const GlobalOptions& opts) {
    if (args.empty()) {
        std::cerr << kUsage;
        return 1;
    }
    try {
        std::string system_path =
            !opts.config_path.empty() ? opts.config_path : config::default_system_path();
        std::string rc_path = !opts.rc_path.empty() ? opts.rc_path : config::default_user_path();
        auto cfg = config::load_config(system_path, rc_path);
        auto clock = opts.clock_pin ? make_manual_clock(*opts.clock_pin) : make_realtime_clock();
        logs::LogWriter log(cfg.log_root, clock);
        Ctx ctx{std::move(cfg), clock, std::move(log), opts};

        // the commands log records the invocation before anything can fail
        ctx.log.command(args);

        std::string verb = args[0];
        std::vector<std::string> rest(args.begin() + 1, args.end());
        if (auto alias = split_alias(verb, ctx.cfg)) {
            verb = alias->first;
            rest.insert(rest.begin(), alias->second);
        }

        if (verb == "proxw") return cmd_proxw(ctx);
        if (verb == "ping") {
            if (rest.size() > 1) usage_error("usage: ping [CLUSTER]");
            return cmd_ping(ctx, rest.empty() ? std::nullopt
                                              : std::optional<std::string>(rest[0]));
        }
        if (verb == "run") return cmd_run(ctx, rest);
        if (verb == "sub") return cmd_sub(ctx, rest);
        if (verb == "sub-data") return cmd_sub_data(ctx, rest);
        if (verb == "jobs") return cmd_jobs(ctx, rest);
        if (verb == "stat") return cmd_stat(ctx, rest);
        if (verb == "get") return cmd_get(ctx, rest);
        if (verb == "copy") return cmd_copy(ctx, rest);
        if (verb == "link") return cmd_link(ctx, rest);
        if (verb == "linked") return cmd_linked(ctx);
        if (verb == "release") return cmd_release(ctx, rest);
        if (verb == "task") return cmd_task(ctx, rest);
        if (verb == "gateway") return cmd_gateway(ctx, rest);
        if (verb == "central") return cmd_central(ctx);
        if (verb == "spider") return cmd_spider(ctx, rest);
        if (verb == "catalog") return cmd_catalog(ctx, rest);
        std::cerr << fmt::format("gridlet: unknown command '{}'\n", verb) << kUsage;
        return 1;
    } catch (const Error& e) {
        std::cerr << fmt::format("gridlet: {}\n", e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << fmt::format("gridlet: {}\n", e.what());
        return 1;
    }
}

}  // namespace gridlet::cli
