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

#include "gridlet/catalog.hpp"
#include "gridlet/net.hpp"

namespace gridlet::protocol {

struct FileEntry {
    std::string name;
    int64_t size = 0;
};

/// Client end of the gateway wire protocol. One instance wraps one
/// connection; methods are synchronous request/reply. Gateway-side errors
/// surface as gridlet::Error with the matching kind (401 -> auth, 404 ->
/// not found, 409 -> not done, 502 -> peer unreachable, ...).
class GatewayClient {
public:
    GatewayClient(const std::string& host, uint16_t port, int timeout_ms);
    explicit GatewayClient(const std::string& endpoint, int timeout_ms);

    void auth(const std::string& token);

    std::string ping();  // replies with the site name
    std::pair<int64_t, int64_t> qstat();  // (running, waiting)
    std::string submit(const std::string& script);  // job id
    std::string job_state(const std::string& job_id);
    std::string fetch(const std::string& job_id);
    std::string run(const std::string& command);

    std::vector<FileEntry> list(const std::string& path);
    std::string get(const std::string& path, int64_t offset, int64_t count);
    void put(const std::string& path, int64_t offset, const std::string& data);
    int64_t pull(const std::string& src_gateway, const std::string& src_path,
                 const std::string& dst_path, int streams);

    std::vector<catalog::FileRecord> cat_lookup(const std::string& lfn);
    void cat_register(const catalog::FileRecord& rec);
    std::vector<catalog::FileRecord> cat_sync(int64_t watermark);
    void cat_link(const catalog::LinkRecord& link);
    std::vector<catalog::LinkRecord> cat_linked(const std::string& user);
    bool cat_release(const std::string& lfn, const std::string& user,
                     const std::string& link_path);

private:
    /// Sends one request line and reads the single reply line; returns the
    /// text after "OK" (possibly empty) or throws on "ERR <code> <msg>".
    std::string exchange(const std::string& line);
    std::string exchange_body(const std::string& line, const std::string& body);
    std::string read_reply();
    std::string read_payload(const std::string& ok_args);

    net::Conn conn_;
};

/// Catalog access over the wire. Implements both the replication peer and
/// the link-command surface against one endpoint.
class RemoteCatalog : public catalog::CentralPeer, public catalog::LinkCatalog {
public:
    RemoteCatalog(const std::string& endpoint, const std::string& token, int timeout_ms);

    std::vector<catalog::FileRecord> records_since(int64_t watermark) override;
    std::vector<catalog::FileRecord> lookup(const std::string& lfn) override;
    void upsert(const catalog::FileRecord& rec) override;

    std::vector<catalog::FileRecord> all_records() override;
    void add_link(const catalog::LinkRecord& link) override;
    std::vector<catalog::LinkRecord> links_for(const std::string& user) override;
    bool remove_link(const std::string& lfn, const std::string& user,
                     const std::string& link_path) override;

    GatewayClient& client() { return client_; }

private:
    GatewayClient client_;
};

}  // namespace gridlet::protocol
