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

#include "gridlet/protocol.hpp"

#include <fmt/format.h>

#include "gridlet/errors.hpp"
#include "gridlet/util.hpp"

namespace gridlet::protocol {

namespace {

ErrorKind kind_for(int code, const std::string& msg) {
    switch (code) {
        case 401:
            return msg.find("expired") != std::string::npos ? ErrorKind::AuthExpired
                                                            : ErrorKind::AuthRejected;
        case 403: return ErrorKind::PathEscape;
        case 404: return ErrorKind::NoMatch;
        case 409: return ErrorKind::NotDone;
        case 502: return ErrorKind::PeerUnreachable;
        default: return ErrorKind::UsageError;
    }
}

}  // namespace

GatewayClient::GatewayClient(const std::string& host, uint16_t port, int timeout_ms)
    : conn_(net::Conn::connect(host, port, timeout_ms)) {}

GatewayClient::GatewayClient(const std::string& endpoint, int timeout_ms)
    : conn_([&] {
          auto [host, port] = net::parse_endpoint(endpoint);
          return net::Conn::connect(host, port, timeout_ms);
      }()) {}

std::string GatewayClient::read_reply() {
    auto reply = conn_.read_line();
    if (!reply) throw Error(ErrorKind::GatewayDown, "gateway closed the connection");
    if (*reply == "OK" || starts_with(*reply, "OK "))
        return reply->size() > 3 ? reply->substr(3) : "";
    if (starts_with(*reply, "ERR ")) {
        auto rest = reply->substr(4);
        auto sp = rest.find(' ');
        auto code = parse_i64(sp == std::string::npos ? rest : rest.substr(0, sp));
        std::string msg = sp == std::string::npos ? "" : rest.substr(sp + 1);
        throw Error(kind_for(code.value_or(0), msg),
                    fmt::format("gateway error {}: {}", code.value_or(0), msg));
    }
    throw Error(ErrorKind::GatewayDown, fmt::format("malformed gateway reply '{}'", *reply));
}

std::string GatewayClient::exchange(const std::string& line) {
    conn_.write_line(line);
    return read_reply();
}

std::string GatewayClient::exchange_body(const std::string& line, const std::string& body) {
    std::string msg = line;
    msg.push_back('\n');
    msg += body;
    conn_.write_all(msg);
    return read_reply();
}

std::string GatewayClient::read_payload(const std::string& ok_args) {
    auto len = parse_i64(ok_args);
    if (!len || *len < 0)
        throw Error(ErrorKind::GatewayDown, fmt::format("bad payload length '{}'", ok_args));
    return conn_.read_exact(static_cast<size_t>(*len));
}

void GatewayClient::auth(const std::string& token) { exchange("AUTH " + token); }

std::string GatewayClient::ping() { return exchange("PING"); }

std::pair<int64_t, int64_t> GatewayClient::qstat() {
    auto reply = exchange("QSTAT");  // "run=<r> wait=<w>"
    int64_t r = -1, w = -1;
    for (const auto& tok : split_ws(reply)) {
        if (starts_with(tok, "run=")) r = parse_i64(tok.substr(4)).value_or(-1);
        if (starts_with(tok, "wait=")) w = parse_i64(tok.substr(5)).value_or(-1);
    }
    if (r < 0 || w < 0)
        throw Error(ErrorKind::GatewayDown, fmt::format("bad QSTAT reply '{}'", reply));
    return {r, w};
}

std::string GatewayClient::submit(const std::string& script) {
    auto reply = exchange_body(fmt::format("SUBMIT {}", script.size()), script);
    if (!starts_with(reply, "job="))
        throw Error(ErrorKind::SubmitRejected, fmt::format("bad SUBMIT reply '{}'", reply));
    return reply.substr(4);
}

std::string GatewayClient::job_state(const std::string& job_id) {
    auto reply = exchange("STATUS " + job_id);
    if (!starts_with(reply, "state="))
        throw Error(ErrorKind::GatewayDown, fmt::format("bad STATUS reply '{}'", reply));
    return reply.substr(6);
}

std::string GatewayClient::fetch(const std::string& job_id) {
    try {
        return read_payload(exchange("FETCH " + job_id));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::NoMatch)
            throw Error(ErrorKind::UnknownJob, e.what());
        throw;
    }
}

std::string GatewayClient::run(const std::string& command) {
    return read_payload(exchange_body(fmt::format("RUN {}", command.size()), command));
}

std::vector<FileEntry> GatewayClient::list(const std::string& path) {
    auto n = parse_i64(exchange("LIST " + path));
    if (!n || *n < 0) throw Error(ErrorKind::GatewayDown, "bad LIST reply");
    std::vector<FileEntry> out;
    for (int64_t i = 0; i < *n; ++i) {
        auto line = conn_.read_line();
        if (!line) throw Error(ErrorKind::GatewayDown, "LIST truncated");
        auto tab = line->rfind('\t');
        if (tab == std::string::npos) throw Error(ErrorKind::GatewayDown, "bad LIST row");
        FileEntry e;
        e.name = line->substr(0, tab);
        e.size = parse_i64(line->substr(tab + 1)).value_or(-1);
        if (e.size < 0) throw Error(ErrorKind::GatewayDown, "bad LIST size");
        out.push_back(std::move(e));
    }
    return out;
}

std::string GatewayClient::get(const std::string& path, int64_t offset, int64_t count) {
    return read_payload(exchange(fmt::format("GET {} {} {}", path, offset, count)));
}

void GatewayClient::put(const std::string& path, int64_t offset, const std::string& data) {
    exchange_body(fmt::format("PUT {} {} {}", path, offset, data.size()), data);
}

int64_t GatewayClient::pull(const std::string& src_gateway, const std::string& src_path,
                            const std::string& dst_path, int streams) {
    auto reply =
        exchange(fmt::format("PULL {} {} {} {}", src_gateway, src_path, dst_path, streams));
    auto bytes = parse_i64(trim(reply));
    if (!bytes || *bytes < 0) throw Error(ErrorKind::GatewayDown, "bad PULL reply");
    return *bytes;
}

std::vector<catalog::FileRecord> GatewayClient::cat_lookup(const std::string& lfn) {
    auto n = parse_i64(exchange("CAT-LOOKUP " + lfn));
    if (!n || *n < 0) throw Error(ErrorKind::GatewayDown, "bad CAT-LOOKUP reply");
    std::vector<catalog::FileRecord> out;
    for (int64_t i = 0; i < *n; ++i) {
        auto line = conn_.read_line();
        if (!line) throw Error(ErrorKind::GatewayDown, "CAT-LOOKUP truncated");
        auto rec = catalog::FileRecord::from_line(*line);
        if (!rec) throw Error(ErrorKind::GatewayDown, "bad record line");
        out.push_back(std::move(*rec));
    }
    return out;
}

void GatewayClient::cat_register(const catalog::FileRecord& rec) {
    exchange("CAT-REGISTER " + rec.to_line());
}

std::vector<catalog::FileRecord> GatewayClient::cat_sync(int64_t watermark) {
    auto n = parse_i64(exchange(fmt::format("CAT-SYNC {}", watermark)));
    if (!n || *n < 0) throw Error(ErrorKind::GatewayDown, "bad CAT-SYNC reply");
    std::vector<catalog::FileRecord> out;
    for (int64_t i = 0; i < *n; ++i) {
        auto line = conn_.read_line();
        if (!line) throw Error(ErrorKind::GatewayDown, "CAT-SYNC truncated");
        auto rec = catalog::FileRecord::from_line(*line);
        if (!rec) throw Error(ErrorKind::GatewayDown, "bad record line");
        out.push_back(std::move(*rec));
    }
    return out;
}

void GatewayClient::cat_link(const catalog::LinkRecord& link) {
    exchange("CAT-LINK " + link.to_line());
}

std::vector<catalog::LinkRecord> GatewayClient::cat_linked(const std::string& user) {
    auto n = parse_i64(exchange("CAT-LINKED " + user));
    if (!n || *n < 0) throw Error(ErrorKind::GatewayDown, "bad CAT-LINKED reply");
    std::vector<catalog::LinkRecord> out;
    for (int64_t i = 0; i < *n; ++i) {
        auto line = conn_.read_line();
        if (!line) throw Error(ErrorKind::GatewayDown, "CAT-LINKED truncated");
        auto link = catalog::LinkRecord::from_line(*line);
        if (!link) throw Error(ErrorKind::GatewayDown, "bad link line");
        out.push_back(std::move(*link));
    }
    return out;
}

bool GatewayClient::cat_release(const std::string& lfn, const std::string& user,
                                const std::string& link_path) {
    auto reply = exchange(fmt::format("CAT-RELEASE {} {} {}", lfn, user, link_path));
    return parse_i64(trim(reply)).value_or(0) > 0;
}

RemoteCatalog::RemoteCatalog(const std::string& endpoint, const std::string& token,
                             int timeout_ms)
    : client_(endpoint, timeout_ms) {
    client_.auth(token);
}

std::vector<catalog::FileRecord> RemoteCatalog::records_since(int64_t watermark) {
    return client_.cat_sync(watermark);
}

std::vector<catalog::FileRecord> RemoteCatalog::lookup(const std::string& lfn) {
    return client_.cat_lookup(lfn);
}

void RemoteCatalog::upsert(const catalog::FileRecord& rec) { client_.cat_register(rec); }

std::vector<catalog::FileRecord> RemoteCatalog::all_records() { return client_.cat_sync(-1); }

void RemoteCatalog::add_link(const catalog::LinkRecord& link) { client_.cat_link(link); }

std::vector<catalog::LinkRecord> RemoteCatalog::links_for(const std::string& user) {
    return client_.cat_linked(user);
}

bool RemoteCatalog::remove_link(const std::string& lfn, const std::string& user,
                                const std::string& link_path) {
    return client_.cat_release(lfn, user, link_path);
}

}  // namespace gridlet::protocol
