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

#include "gridlet/config.hpp"

#include <fmt/format.h>
#include <stdlib.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "gridlet/errors.hpp"

namespace fs = std::filesystem;

namespace gridlet::config {

const ClusterDescriptor* Configuration::find_cluster(const std::string& name) const {
    for (const auto& c : clusters)
        if (c.name == name) return &c;
    return nullptr;
}

const ClusterDescriptor& Configuration::cluster_or_throw(const std::string& name) const {
    const auto* c = find_cluster(name);
    if (c == nullptr)
        throw Error(ErrorKind::UnknownSite, fmt::format("cluster '{}' is not configured", name));
    return *c;
}

std::vector<std::string> Configuration::cluster_names() const {
    std::vector<std::string> out;
    for (const auto& c : clusters) out.push_back(c.name);
    return out;
}

namespace {

struct KeyValue {
    std::string key;
    std::string value;
    int line_no;
    bool from_user;
};

[[noreturn]] void parse_fail(bool from_user, int line_no, const std::string& why) {
    throw Error(ErrorKind::ParseError, fmt::format("{} config line {}: {}",
                                                   from_user ? "user" : "system", line_no, why));
}

std::vector<KeyValue> tokenize(const std::string& text, bool from_user) {
    std::vector<KeyValue> out;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos || eq == 0)
            parse_fail(from_user, line_no, "expected key=value");
        out.push_back({trim(t.substr(0, eq)), trim(t.substr(eq + 1)), line_no, from_user});
    }
    return out;
}

std::string expand_home(const std::string& path) {
    if (starts_with(path, "~/")) {
        const char* home = getenv("HOME");
        if (home != nullptr) return std::string(home) + path.substr(1);
    }
    return path;
}

std::string want_abs_path(const KeyValue& kv) {
    std::string p = expand_home(kv.value);
    if (p.empty() || p[0] != '/')
        parse_fail(kv.from_user, kv.line_no,
                   fmt::format("{}: path must be absolute, got '{}'", kv.key, kv.value));
    return p;
}

int64_t want_i64(const KeyValue& kv, int64_t min_v) {
    auto v = parse_i64(kv.value);
    if (!v || *v < min_v)
        parse_fail(kv.from_user, kv.line_no, fmt::format("{}: bad integer '{}'", kv.key, kv.value));
    return *v;
}

double want_f64(const KeyValue& kv) {
    auto v = parse_f64(kv.value);
    if (!v) parse_fail(kv.from_user, kv.line_no, fmt::format("{}: bad number '{}'", kv.key, kv.value));
    return *v;
}

struct Builder {
    Configuration cfg;
    std::vector<std::string> roster;              // from clusters= key
    std::vector<std::string> declaration_order;   // first appearance of cluster.<n>.*
    std::map<std::string, ClusterDescriptor> by_name;
    bool roster_set = false;

    void apply(const KeyValue& kv) {
        const std::string& k = kv.key;
        if (k == "clusters") {
            roster.clear();
            for (const auto& n : split(kv.value, ','))
                if (!trim(n).empty()) roster.push_back(trim(n));
            if (roster.empty()) parse_fail(kv.from_user, kv.line_no, "empty cluster roster");
            roster_set = true;
        } else if (starts_with(k, "cluster.")) {
            auto parts = split(k, '.');
            if (parts.size() != 3 || parts[1].empty())
                parse_fail(kv.from_user, kv.line_no, fmt::format("bad cluster key '{}'", k));
            const std::string& name = parts[1];
            const std::string& field = parts[2];
            if (!by_name.count(name)) {
                by_name[name].name = name;
                declaration_order.push_back(name);
            }
            ClusterDescriptor& c = by_name[name];
            if (field == "gateway")
                c.gateway = kv.value;
            else if (field == "power") {
                try {
                    c.relative_power = Rational::from_decimal(kv.value);
                } catch (const std::exception&) {
                    parse_fail(kv.from_user, kv.line_no,
                               fmt::format("{}: bad power '{}'", k, kv.value));
                }
                if (c.relative_power.num <= 0)
                    parse_fail(kv.from_user, kv.line_no, fmt::format("{}: power must be > 0", k));
            } else if (field == "max_run")
                c.max_run = want_i64(kv, 1);
            else if (field == "root")
                c.root = want_abs_path(kv);
            else if (field == "state")
                c.state = want_abs_path(kv);
            else if (field == "host")
                c.host_label = kv.value;
            else
                parse_fail(kv.from_user, kv.line_no, fmt::format("unknown cluster field '{}'", field));
        } else if (k == "local.site")
            cfg.local_site = kv.value;
        else if (k == "central.gateway")
            cfg.central_gateway = kv.value;
        else if (k == "central.state")
            cfg.central_state = want_abs_path(kv);
        else if (k == "transfer.streams")
            cfg.transfer.streams = static_cast<int>(want_i64(kv, 1));
        else if (k == "transfer.base_rate") {
            cfg.transfer.base_rate = want_f64(kv);
            if (cfg.transfer.base_rate <= 0)
                parse_fail(kv.from_user, kv.line_no, "transfer.base_rate must be > 0");
        } else if (k == "transfer.diurnal_factor") {
            cfg.transfer.diurnal_factor = want_f64(kv);
            if (cfg.transfer.diurnal_factor < 1.0)
                parse_fail(kv.from_user, kv.line_no, "transfer.diurnal_factor must be >= 1");
        } else if (k == "transfer.period") {
            cfg.transfer.period = want_f64(kv);
            if (cfg.transfer.period <= 0)
                parse_fail(kv.from_user, kv.line_no, "transfer.period must be > 0");
        } else if (k == "transfer.phase")
            cfg.transfer.phase = want_f64(kv);
        else if (k == "transfer.task_file")
            cfg.transfer.task_file = want_abs_path(kv);
        else if (k == "sync.kinds") {
            cfg.subscription.kinds.clear();
            for (const auto& s : split(kv.value, ',')) {
                if (trim(s).empty()) continue;
                auto kind = catalog::parse_kind(trim(s));
                if (!kind)
                    parse_fail(kv.from_user, kv.line_no, fmt::format("bad file kind '{}'", s));
                cfg.subscription.kinds.push_back(*kind);
            }
        } else if (k == "sync.collections") {
            cfg.subscription.collections.clear();
            for (const auto& s : split(kv.value, ','))
                if (!trim(s).empty()) cfg.subscription.collections.push_back(trim(s));
        } else if (k == "sync.sites") {
            cfg.subscription.sites.clear();
            for (const auto& s : split(kv.value, ','))
                if (!trim(s).empty()) cfg.subscription.sites.push_back(trim(s));
        } else if (k == "log.root")
            cfg.log_root = want_abs_path(kv);
        else if (k == "token.file")
            cfg.token_file = want_abs_path(kv);
        else if (k == "token.lifetime")
            cfg.token_lifetime = want_i64(kv, 1);
        else if (k == "net.timeout_ms")
            cfg.net_timeout_ms = static_cast<int>(want_i64(kv, 1));
        else
            parse_fail(kv.from_user, kv.line_no, fmt::format("unknown key '{}'", k));
    }

    Configuration finish() {
        const auto& names = roster_set ? roster : declaration_order;
        if (names.empty())
            throw Error(ErrorKind::ParseError, "configuration defines no clusters");
        int order = 0;
        for (const auto& name : names) {
            auto it = by_name.find(name);
            if (it == by_name.end())
                throw Error(ErrorKind::ParseError,
                            fmt::format("cluster '{}' in roster has no cluster.{}.* keys", name,
                                        name));
            if (it->second.gateway.empty())
                throw Error(ErrorKind::ParseError,
                            fmt::format("cluster '{}' has no gateway", name));
            ClusterDescriptor c = it->second;
            c.order = order++;
            cfg.clusters.push_back(std::move(c));
        }
        if (cfg.local_site.empty()) cfg.local_site = cfg.clusters.front().name;
        if (cfg.find_cluster(cfg.local_site) == nullptr)
            throw Error(ErrorKind::ParseError,
                        fmt::format("local.site '{}' is not a configured cluster", cfg.local_site));
        std::string home = getenv("HOME") ? getenv("HOME") : "/tmp";
        if (cfg.log_root.empty()) cfg.log_root = home + "/.gridlet";
        if (cfg.token_file.empty()) cfg.token_file = home + "/.gridlet/token";
        if (cfg.transfer.task_file.empty()) cfg.transfer.task_file = cfg.log_root + "/tasks";
        return std::move(cfg);
    }
};

}  // namespace

Configuration parse_config(const std::string& system_text, const std::string& user_text) {
    Builder b;
    for (const auto& kv : tokenize(system_text, false)) b.apply(kv);
    // User keys override field-by-field; a user `clusters=` roster replaces
    // the system roster wholesale.
    for (const auto& kv : tokenize(user_text, true)) b.apply(kv);
    return b.finish();
}

Configuration load_config(const std::string& system_path, const std::string& user_path) {
    std::ifstream sys(system_path, std::ios::binary);
    if (!sys)
        throw Error(ErrorKind::MissingSystemConfig,
                    fmt::format("cannot read system config {}", system_path));
    std::stringstream sys_buf;
    sys_buf << sys.rdbuf();

    std::string user_text;
    if (!user_path.empty()) {
        std::ifstream user(user_path, std::ios::binary);
        if (user) {
            std::stringstream user_buf;
            user_buf << user.rdbuf();
            user_text = user_buf.str();
        }
    }
    return parse_config(sys_buf.str(), user_text);
}

std::string default_system_path() {
    const char* env = getenv("GRIDLET_CONFIG");
    if (env != nullptr && env[0] != '\0') return env;
    return "/etc/gridlet.conf";
}

std::string default_user_path() {
    const char* env = getenv("GRIDLET_RC");
    if (env != nullptr && env[0] != '\0') return env;
    const char* home = getenv("HOME");
    if (home != nullptr) return std::string(home) + "/.gridletrc";
    return "";
}

std::optional<AuthToken> parse_token(const std::string& token) {
    auto parts = split(token, '.');
    if (parts.size() != 4 || parts[0] != "g1") return std::nullopt;
    auto issued = parse_i64(parts[1]);
    auto lifetime = parse_i64(parts[2]);
    if (!issued || !lifetime || *lifetime <= 0 || parts[3].empty()) return std::nullopt;
    return AuthToken{token, *issued, *lifetime};
}

AuthToken issue_token(const std::string& token_file, const Clock& clock,
                      int64_t lifetime_seconds) {
    AuthToken t;
    t.issued_at = static_cast<int64_t>(clock.now());
    t.lifetime_seconds = lifetime_seconds;
    t.token = fmt::format("g1.{}.{}.{}", t.issued_at, t.lifetime_seconds, random_hex16());
    std::error_code ec;
    fs::create_directories(fs::path(token_file).parent_path(), ec);
    std::string tmp = token_file + ".tmp";
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    f << t.token << "\n";
    f.close();
    if (!f)
        throw Error(ErrorKind::TokenFileUnwritable,
                    fmt::format("cannot write token file {}", token_file));
    fs::rename(tmp, token_file, ec);
    if (ec)
        throw Error(ErrorKind::TokenFileUnwritable,
                    fmt::format("cannot replace token file {}: {}", token_file, ec.message()));
    return t;
}

std::string load_token(const std::string& token_file) {
    std::ifstream f(token_file, std::ios::binary);
    if (!f) return "";
    std::string line;
    std::getline(f, line);
    return trim(line);
}

}  // namespace gridlet::config
