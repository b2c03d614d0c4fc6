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

#include "gridlet/gateway.hpp"

#include <fcntl.h>
#include <fmt/format.h>
#include <string.h>
#include <sys/socket.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <set>

#include "gridlet/config.hpp"
#include "gridlet/errors.hpp"
#include "gridlet/protocol.hpp"

namespace fs = std::filesystem;

namespace gridlet::gateway {

namespace {

constexpr int64_t kChunkBytes = 4 << 20;       // fixed transfer chunk size
constexpr int64_t kMaxSubmitBytes = 16 << 20;  // script / RUN payload cap
constexpr int64_t kMaxGetBytes = 64 << 20;
constexpr double kDefaultNominal = 60.0;

int proto_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::AuthExpired:
        case ErrorKind::AuthRejected: return 401;
        case ErrorKind::PathEscape: return 403;
        case ErrorKind::NoMatch:
        case ErrorKind::UnknownJob:
        case ErrorKind::FileUnknown: return 404;
        case ErrorKind::NotDone: return 409;
        case ErrorKind::GatewayDown:
        case ErrorKind::PeerUnreachable: return 502;
        default: return 400;
    }
}

}  // namespace

std::string to_string(JobState s) {
    switch (s) {
        case JobState::Wait: return "wait";
        case JobState::Run: return "run";
        case JobState::Done: return "done";
        case JobState::Unknown: return "unknown";
    }
    return "unknown";
}

double parse_nominal_seconds(const std::string& script) {
    for (const auto& line : split(script, '\n')) {
        auto t = trim(line);
        if (!starts_with(t, "#GRIDLET")) continue;
        for (const auto& tok : split_ws(t.substr(8))) {
            if (starts_with(tok, "nominal=")) {
                auto v = parse_f64(tok.substr(8));
                if (v && *v >= 0) return *v;
            }
        }
    }
    return kDefaultNominal;
}

std::string interpret_script_output(const std::string& script) {
    std::string out;
    for (const auto& line : split(script, '\n')) {
        auto t = trim(line);
        if (starts_with(t, "echo ")) {
            out += t.substr(5);
            out.push_back('\n');
        } else if (t == "echo") {
            out.push_back('\n');
        }
    }
    return out;
}

SimQueue::SimQueue(int64_t slots, Rational relative_power)
    : slots_(slots), power_(relative_power) {
    if (slots_ < 1) slots_ = 1;
}

double SimQueue::service_seconds(double nominal) const {
    return nominal * static_cast<double>(power_.den) / static_cast<double>(power_.num);
}

void SimQueue::admit(double now) {
    while (static_cast<int64_t>(running_.size()) < slots_ && !waiting_.empty()) {
        SimJob job = std::move(waiting_.front());
        waiting_.pop_front();
        job.started_at = now;
        running_.push_back(std::move(job));
    }
}

std::string SimQueue::submit(const std::string& gateway_name, const std::string& script,
                             double now) {
    sync_to(now);
    SimJob job;
    job.id = fmt::format("{}/{}", gateway_name, ++seq_);
    job.script = script;
    job.nominal_seconds = parse_nominal_seconds(script);
    job.submitted_at = now;
    ++submitted_;
    waiting_.push_back(std::move(job));
    admit(now_);
    // a zero-demand job admitted right now completes right now
    sync_to(now_);
    return fmt::format("{}/{}", gateway_name, seq_);
}

std::vector<std::string> SimQueue::sync_to(double now) {
    std::vector<std::string> completed;
    if (now > now_) now_ = now;
    for (;;) {
        // earliest finisher; ties resolve to the earliest admitted (FIFO)
        size_t idx = running_.size();
        double next_finish = 0;
        for (size_t i = 0; i < running_.size(); ++i) {
            double finish = running_[i].started_at + service_seconds(running_[i].nominal_seconds);
            if (idx == running_.size() || finish < next_finish) {
                idx = i;
                next_finish = finish;
            }
        }
        if (idx == running_.size() || next_finish > now_) break;
        SimJob job = std::move(running_[idx]);
        running_.erase(running_.begin() + static_cast<long>(idx));
        job.finished_at = next_finish;
        job.output = interpret_script_output(job.script);
        completed.push_back(job.id);
        done_.emplace(job.id, std::move(job));
        admit(next_finish);
    }
    admit(now_);
    return completed;
}

JobState SimQueue::state_of(const std::string& job_id) const {
    for (const auto& j : running_)
        if (j.id == job_id) return JobState::Run;
    for (const auto& j : waiting_)
        if (j.id == job_id) return JobState::Wait;
    if (done_.count(job_id)) return JobState::Done;
    return JobState::Unknown;
}

const SimJob* SimQueue::done_job(const std::string& job_id) const {
    auto it = done_.find(job_id);
    return it == done_.end() ? nullptr : &it->second;
}

std::string SimQueue::qstat_text(const std::string& param) const {
    bool want_run = true, want_wait = true;
    if (param == "-r")
        want_wait = false;
    else if (param == "-w" || param == "-i")
        want_run = false;
    else if (!param.empty())
        throw std::invalid_argument(fmt::format("qstat: unsupported parameter '{}'", param));
    std::string out = "JOBID\tST\tSUBMITTED\n";
    if (want_run)
        for (const auto& j : running_)
            out += fmt::format("{}\tR\t{}\n", j.id, iso8601(static_cast<int64_t>(j.submitted_at)));
    if (want_wait)
        for (const auto& j : waiting_)
            out += fmt::format("{}\tW\t{}\n", j.id, iso8601(static_cast<int64_t>(j.submitted_at)));
    return out;
}

FileStore::FileStore(std::string root) : root_(std::move(root)) {
    while (!root_.empty() && root_.back() == '/') root_.pop_back();
}

std::string FileStore::realize(const std::string& site_path) const {
    if (root_.empty()) throw Error(ErrorKind::NoMatch, "gateway has no storage root");
    auto norm = normalize_site_path(site_path);
    if (!norm) throw Error(ErrorKind::PathEscape, fmt::format("bad path '{}'", site_path));
    if (*norm == "/") return root_;
    return root_ + *norm;
}

std::vector<FileStore::Entry> FileStore::list(const std::string& site_path) const {
    std::string real = realize(site_path);
    std::error_code ec;
    auto st = fs::symlink_status(real, ec);
    if (ec || !fs::exists(st))
        throw Error(ErrorKind::NoMatch, fmt::format("no such path {}", site_path));
    std::vector<Entry> out;
    if (fs::is_regular_file(st)) {
        out.push_back({fs::path(real).filename().string(),
                       static_cast<int64_t>(fs::file_size(real, ec))});
        return out;
    }
    if (!fs::is_directory(st))
        throw Error(ErrorKind::NoMatch, fmt::format("no such path {}", site_path));
    for (const auto& entry : fs::directory_iterator(real, ec)) {
        std::error_code sec;
        if (!fs::is_regular_file(entry.symlink_status(sec)) || sec) continue;
        out.push_back({entry.path().filename().string(),
                       static_cast<int64_t>(entry.file_size(sec))});
    }
    std::sort(out.begin(), out.end(),
              [](const Entry& a, const Entry& b) { return a.name < b.name; });
    return out;
}

std::string FileStore::read_range(const std::string& site_path, int64_t offset,
                                  int64_t count) const {
    std::string real = realize(site_path);
    int fd = ::open(real.c_str(), O_RDONLY | O_CLOEXEC);
    if (fd < 0) throw Error(ErrorKind::NoMatch, fmt::format("no such path {}", site_path));
    std::string out;
    out.resize(static_cast<size_t>(std::max<int64_t>(count, 0)));
    size_t got = 0;
    while (got < out.size()) {
        ssize_t n = ::pread(fd, out.data() + got, out.size() - got,
                            static_cast<off_t>(offset + static_cast<int64_t>(got)));
        if (n < 0) {
            ::close(fd);
            throw Error(ErrorKind::NoMatch, fmt::format("read error on {}", site_path));
        }
        if (n == 0) break;  // past EOF: short read
        got += static_cast<size_t>(n);
    }
    ::close(fd);
    out.resize(got);
    return out;
}

void FileStore::write_range(const std::string& site_path, int64_t offset, std::string_view data) {
    std::string real = realize(site_path);
    std::error_code ec;
    fs::create_directories(fs::path(real).parent_path(), ec);
    int fd = ::open(real.c_str(), O_WRONLY | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0)
        throw Error(ErrorKind::NoMatch,
                    fmt::format("cannot open {}: {}", site_path, strerror(errno)));
    size_t put = 0;
    while (put < data.size()) {
        ssize_t n = ::pwrite(fd, data.data() + put, data.size() - put,
                             static_cast<off_t>(offset + static_cast<int64_t>(put)));
        if (n < 0) {
            ::close(fd);
            throw Error(ErrorKind::NoMatch,
                        fmt::format("write error on {}: {}", site_path, strerror(errno)));
        }
        put += static_cast<size_t>(n);
    }
    ::close(fd);
}

int64_t FileStore::file_size(const std::string& site_path) const {
    std::string real = realize(site_path);
    struct stat st {};
    if (::stat(real.c_str(), &st) != 0 || !S_ISREG(st.st_mode))
        throw Error(ErrorKind::NoMatch, fmt::format("no such file {}", site_path));
    return static_cast<int64_t>(st.st_size);
}

struct GatewayServer::Session {
    bool authed = false;
    config::AuthToken token;
};

GatewayServer::GatewayServer(GatewayOptions opts, ClockPtr clock)
    : opts_(std::move(opts)),
      clock_(std::move(clock)),
      queue_(opts_.slots, opts_.relative_power),
      catalog_(opts_.state_dir.empty()
                   ? catalog::Instance(opts_.tier,
                                       opts_.tier == catalog::Tier::Central ? "" : opts_.name)
                   : catalog::Instance::load(
                         opts_.tier, opts_.tier == catalog::Tier::Central ? "" : opts_.name,
                         opts_.state_dir + "/catalog", opts_.state_dir + "/links")),
      store_(opts_.storage_root) {}

GatewayServer::~GatewayServer() { stop(); }

std::string GatewayServer::endpoint() const {
    return fmt::format("{}:{}", opts_.bind_host, port_);
}

void GatewayServer::start() {
    listener_ = net::Listener::bind(opts_.bind_host, opts_.port);
    port_ = listener_.port();
    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void GatewayServer::stop() {
    if (!running_.exchange(false)) return;
    listener_.shutdown();
    if (accept_thread_.joinable()) accept_thread_.join();
    {
        // wake up sessions blocked in read_line()
        std::lock_guard lk(sessions_mu_);
        for (int fd : session_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    reap_sessions(/*all=*/true);
}

void GatewayServer::reap_sessions(bool all) {
    std::vector<std::thread> to_join;
    {
        std::lock_guard lk(sessions_mu_);
        auto it = sessions_.begin();
        while (it != sessions_.end()) {
            if (all || finished_sessions_.count(it->get_id())) {
                finished_sessions_.erase(it->get_id());
                to_join.push_back(std::move(*it));
                it = sessions_.erase(it);
            } else {
                ++it;
            }
        }
    }
    for (auto& t : to_join)
        if (t.joinable()) t.join();
}

void GatewayServer::accept_loop() {
    while (running_) {
        auto conn = listener_.accept();
        if (!conn) break;
        reap_sessions(/*all=*/false);
        std::lock_guard lk(sessions_mu_);
        session_fds_.insert(conn->fd());
        sessions_.emplace_back(
            [this](net::Conn c) { serve_session(std::move(c)); }, std::move(*conn));
    }
}

void GatewayServer::serve_session(net::Conn conn) {
    Session session;
    try {
        for (;;) {
            auto line = conn.read_line();
            if (!line) break;  // client went away
            if (!handle_request(session, conn, *line)) break;
        }
    } catch (const std::exception&) {
        // torn connection; nothing to answer to
    }
    std::lock_guard lk(sessions_mu_);
    session_fds_.erase(conn.fd());
    finished_sessions_.insert(std::this_thread::get_id());
}

std::vector<std::string> GatewayServer::step(double seconds) {
    clock_->advance(seconds);
    std::lock_guard lk(state_mu_);
    return queue_.sync_to(clock_->now());
}

GatewayServer::QueueStats GatewayServer::queue_stats() {
    std::lock_guard lk(state_mu_);
    queue_.sync_to(clock_->now());
    return {queue_.running_count(), queue_.waiting_count(), queue_.done_count(),
            queue_.submitted_count()};
}

catalog::Instance GatewayServer::catalog_snapshot() {
    std::lock_guard lk(state_mu_);
    return catalog_;
}

void GatewayServer::persist_catalog() {
    if (opts_.state_dir.empty()) return;
    catalog_.save(opts_.state_dir + "/catalog", opts_.state_dir + "/links");
}

bool GatewayServer::handle_request(Session& s, net::Conn& conn, const std::string& line) {
    auto reply_err = [&](int code, const std::string& msg) {
        conn.write_line(fmt::format("ERR {} {}", code, msg));
        return true;
    };
    auto tokens = split_ws(line);
    if (tokens.empty()) return reply_err(400, "empty request");
    const std::string& verb = tokens[0];

    try {
        if (verb == "AUTH") {
            if (tokens.size() != 2) return reply_err(400, "usage: AUTH <token>");
            auto token = config::parse_token(tokens[1]);
            if (!token) return reply_err(401, "bad token");
            if (!token->valid_at(clock_->now())) return reply_err(401, "token expired");
            s.authed = true;
            s.token = *token;
            conn.write_line("OK");
            return true;
        }
        if (!s.authed) return reply_err(401, "auth required");
        if (!s.token.valid_at(clock_->now())) return reply_err(401, "token expired");

        if (verb == "PING") {
            conn.write_line(fmt::format("OK {}", opts_.name));
            return true;
        }
        if (verb == "QSTAT") {
            std::lock_guard lk(state_mu_);
            queue_.sync_to(clock_->now());
            conn.write_line(fmt::format("OK run={} wait={}", queue_.running_count(),
                                        queue_.waiting_count()));
            return true;
        }
        if (verb == "SUBMIT" || verb == "RUN") {
            if (tokens.size() != 2) return reply_err(400, "usage: <verb> <len>");
            auto len = parse_i64(tokens[1]);
            if (!len || *len < 0) return reply_err(400, "bad length");
            if (*len > kMaxSubmitBytes) {
                // cannot safely skip an arbitrarily large body; answer and drop
                reply_err(400, "payload too large");
                return false;
            }
            std::string body = conn.read_exact(static_cast<size_t>(*len));
            if (verb == "SUBMIT") {
                if (body.empty()) return reply_err(400, "empty script");
                std::lock_guard lk(state_mu_);
                std::string id = queue_.submit(opts_.name, body, clock_->now());
                conn.write_line(fmt::format("OK job={}", id));
            } else {
                std::string out = run_command(body, s.token.token);
                conn.write_line(fmt::format("OK {}", out.size()));
                conn.write_all(out);
            }
            return true;
        }
        if (verb == "STATUS") {
            if (tokens.size() != 2) return reply_err(400, "usage: STATUS <job-id>");
            std::lock_guard lk(state_mu_);
            queue_.sync_to(clock_->now());
            conn.write_line(fmt::format("OK state={}", to_string(queue_.state_of(tokens[1]))));
            return true;
        }
        if (verb == "FETCH") {
            if (tokens.size() != 2) return reply_err(400, "usage: FETCH <job-id>");
            std::lock_guard lk(state_mu_);
            queue_.sync_to(clock_->now());
            switch (queue_.state_of(tokens[1])) {
                case JobState::Done: {
                    const SimJob* job = queue_.done_job(tokens[1]);
                    conn.write_line(fmt::format("OK {}", job->output.size()));
                    conn.write_all(job->output);
                    return true;
                }
                case JobState::Unknown:
                    return reply_err(404, "no such job");
                default:
                    return reply_err(409, "not done");
            }
        }
        if (verb == "LIST") {
            if (tokens.size() != 2) return reply_err(400, "usage: LIST <path>");
            auto entries = store_.list(tokens[1]);
            std::string out = fmt::format("OK {}\n", entries.size());
            for (const auto& e : entries) out += fmt::format("{}\t{}\n", e.name, e.size);
            conn.write_all(out);
            return true;
        }
        if (verb == "GET") {
            if (tokens.size() != 4) return reply_err(400, "usage: GET <path> <offset> <count>");
            auto offset = parse_i64(tokens[2]);
            auto count = parse_i64(tokens[3]);
            if (!offset || !count || *offset < 0 || *count < 0 || *count > kMaxGetBytes)
                return reply_err(400, "bad range");
            std::string data = store_.read_range(tokens[1], *offset, *count);
            conn.write_line(fmt::format("OK {}", data.size()));
            conn.write_all(data);
            return true;
        }
        if (verb == "PUT") {
            if (tokens.size() != 4) return reply_err(400, "usage: PUT <path> <offset> <len>");
            auto offset = parse_i64(tokens[2]);
            auto len = parse_i64(tokens[3]);
            if (!offset || !len || *offset < 0 || *len < 0 || *len > kMaxGetBytes)
                return reply_err(400, "bad range");
            std::string data = conn.read_exact(static_cast<size_t>(*len));
            store_.write_range(tokens[1], *offset, data);
            conn.write_line("OK");
            return true;
        }
        if (verb == "PULL") {
            if (tokens.size() != 5)
                return reply_err(400, "usage: PULL <src-gateway> <src-path> <dst-path> <streams>");
            auto streams = parse_i64(tokens[4]);
            if (!streams || *streams < 1 || *streams > 64) return reply_err(400, "bad streams");
            int64_t bytes = pull_file(tokens[1], tokens[2], tokens[3],
                                      static_cast<int>(*streams), s.token.token);
            conn.write_line(fmt::format("OK {}", bytes));
            return true;
        }
        if (verb == "CAT-LOOKUP") {
            if (tokens.size() != 2) return reply_err(400, "usage: CAT-LOOKUP <lfn>");
            std::lock_guard lk(state_mu_);
            auto recs = catalog_.lookup(tokens[1]);
            std::string out = fmt::format("OK {}\n", recs.size());
            for (const auto& r : recs) out += r.to_line() + "\n";
            conn.write_all(out);
            return true;
        }
        if (verb == "CAT-REGISTER") {
            auto rec = catalog::FileRecord::from_line(line.substr(verb.size()));
            if (!rec) return reply_err(400, "bad record");
            std::lock_guard lk(state_mu_);
            catalog_.register_file(*rec);
            persist_catalog();
            conn.write_line("OK");
            return true;
        }
        if (verb == "CAT-SYNC") {
            if (tokens.size() != 2) return reply_err(400, "usage: CAT-SYNC <watermark>");
            auto wm = parse_i64(tokens[1]);
            if (!wm) return reply_err(400, "bad watermark");
            std::lock_guard lk(state_mu_);
            auto recs = catalog_.records_since(*wm);
            catalog_.raise_watermark(*wm);
            persist_catalog();
            std::string out = fmt::format("OK {}\n", recs.size());
            for (const auto& r : recs) out += r.to_line() + "\n";
            conn.write_all(out);
            return true;
        }
        if (verb == "CAT-LINK") {
            auto link = catalog::LinkRecord::from_line(line.substr(verb.size()));
            if (!link) return reply_err(400, "bad link record");
            std::lock_guard lk(state_mu_);
            catalog_.add_link(*link);
            persist_catalog();
            conn.write_line("OK");
            return true;
        }
        if (verb == "CAT-LINKED") {
            if (tokens.size() != 2) return reply_err(400, "usage: CAT-LINKED <user>");
            std::lock_guard lk(state_mu_);
            auto links = catalog_.links_for(tokens[1]);
            std::string out = fmt::format("OK {}\n", links.size());
            for (const auto& l : links) out += l.to_line() + "\n";
            conn.write_all(out);
            return true;
        }
        if (verb == "CAT-RELEASE") {
            if (tokens.size() != 4)
                return reply_err(400, "usage: CAT-RELEASE <lfn> <user> <link-path>");
            std::lock_guard lk(state_mu_);
            bool removed = catalog_.remove_link(tokens[1], tokens[2], tokens[3]);
            persist_catalog();
            conn.write_line(fmt::format("OK {}", removed ? 1 : 0));
            return true;
        }
        return reply_err(400, fmt::format("unknown command {}", verb));
    } catch (const Error& e) {
        return reply_err(proto_code(e.kind()), e.what());
    } catch (const std::invalid_argument& e) {
        return reply_err(400, e.what());
    } catch (const std::exception& e) {
        return reply_err(400, e.what());
    }
}

std::string GatewayServer::run_command(const std::string& command, const std::string& token) {
    auto t = trim(command);
    if (starts_with(t, "echo ")) return t.substr(5) + "\n";
    if (t == "echo") return "\n";
    if (starts_with(t, "sleep")) {
        auto args = split_ws(t);
        double n = args.size() > 1 ? parse_f64(args[1]).value_or(0) : 0;
        if (n < 0) n = 0;
        if (clock_->mode() == Clock::Mode::Manual) {
            clock_->advance(n);
            std::lock_guard lk(state_mu_);
            queue_.sync_to(clock_->now());
        } else {
            std::this_thread::sleep_for(
                std::chrono::duration<double>(std::min(n, 60.0)));
        }
        return "";
    }
    if (t == "qstat" || starts_with(t, "qstat ")) {
        std::string param = trim(t.substr(5));
        std::lock_guard lk(state_mu_);
        queue_.sync_to(clock_->now());
        return queue_.qstat_text(param);  // throws invalid_argument on bad param
    }
    if (t == "spider" || starts_with(t, "spider ")) {
        std::vector<std::string> roots = split_ws(t);
        roots.erase(roots.begin());
        if (roots.empty()) roots = opts_.scan_roots;
        std::lock_guard lk(state_mu_);
        auto report = catalog::spider_scan(
            catalog_, opts_.name, roots, static_cast<int64_t>(clock_->now()), opts_.host_label,
            [this](const std::string& p) { return store_.realize(p); });
        persist_catalog();
        std::string out = fmt::format("spider added={} updated={} removed={} errors={}\n",
                                      report.added, report.updated, report.removed,
                                      report.errors.size());
        for (const auto& e : report.errors) out += fmt::format("error {}\n", e);
        return out;
    }
    if (t == "replicate") {
        if (opts_.central_gateway.empty())
            throw Error(ErrorKind::PeerUnreachable, "no central catalog configured");
        protocol::RemoteCatalog central(opts_.central_gateway, token, opts_.io_timeout_ms);
        std::lock_guard lk(state_mu_);
        auto report = catalog::replicate(catalog_, central, opts_.subscription,
                                         static_cast<int64_t>(clock_->now()));
        persist_catalog();
        return fmt::format("replicate pulled={} pushed={}\n", report.pulled, report.pushed);
    }
    throw std::invalid_argument(fmt::format("unsupported command '{}'", split_ws(t).empty()
                                                ? t
                                                : split_ws(t)[0]));
}

int64_t GatewayServer::pull_file(const std::string& src_gateway, const std::string& src_path,
                                 const std::string& dst_path, int streams,
                                 const std::string& token) {
    // validate the destination before touching the network
    store_.realize(dst_path);
    std::string base = fs::path(src_path).filename().string();

    auto connect_src = [&] {
        auto [host, port] = net::parse_endpoint(src_gateway);
        protocol::GatewayClient c(host, port, opts_.io_timeout_ms);
        c.auth(token);
        return c;
    };

    int64_t size = -1;
    try {
        auto probe = connect_src();
        auto entries = probe.list(src_path);
        if (entries.size() != 1 || entries[0].name != base)
            throw Error(ErrorKind::PeerUnreachable,
                        fmt::format("source {} does not name a file", src_path));
        size = entries[0].size;
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::GatewayDown || e.kind() == ErrorKind::NoMatch ||
            e.kind() == ErrorKind::AuthRejected || e.kind() == ErrorKind::AuthExpired)
            throw Error(ErrorKind::PeerUnreachable,
                        fmt::format("pull source unreachable: {}", e.what()));
        throw;
    }

    if (size == 0) {
        store_.write_range(dst_path, 0, "");
        return 0;
    }

    int64_t chunks = (size + kChunkBytes - 1) / kChunkBytes;
    int workers = static_cast<int>(std::min<int64_t>(streams, chunks));
    std::atomic<int64_t> next_chunk{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex err_mu;

    auto worker = [&] {
        try {
            auto client = connect_src();
            for (;;) {
                int64_t i = next_chunk.fetch_add(1);
                if (i >= chunks || failed.load()) break;
                int64_t off = i * kChunkBytes;
                int64_t cnt = std::min(kChunkBytes, size - off);
                std::string data = client.get(src_path, off, cnt);
                if (static_cast<int64_t>(data.size()) != cnt)
                    throw Error(ErrorKind::PeerUnreachable, "short chunk from source");
                store_.write_range(dst_path, off, data);
            }
        } catch (const std::exception& e) {
            failed.store(true);
            std::lock_guard lk(err_mu);
            if (first_error.empty()) first_error = e.what();
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    if (failed.load() || store_.file_size(dst_path) != size) {
        std::error_code ec;
        fs::remove(store_.realize(dst_path), ec);  // no partial files left behind
        throw Error(ErrorKind::PeerUnreachable,
                    fmt::format("pull failed: {}", first_error.empty() ? "size mismatch"
                                                                       : first_error));
    }
    return size;
}

}  // namespace gridlet::gateway
