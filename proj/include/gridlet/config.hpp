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

#include "gridlet/catalog.hpp"
#include "gridlet/clock.hpp"
#include "gridlet/util.hpp"

namespace gridlet::config {

/// One computing cluster as seen from the client. `name` doubles as the
/// catalog site name and the job-id gateway prefix.
struct ClusterDescriptor {
    std::string name;
    std::string gateway;  // host:port
    Rational relative_power{1, 1};
    int64_t max_run = 1;
    int order = 0;  // position in the configuration
    std::string root;   // storage root backing the site-logical paths
    std::string state;  // state directory (catalog store, job sequence)
    std::string host_label = "localhost";
};

struct TransferDefaults {
    int streams = 5;
    double base_rate = 7e6;  // bytes/second ceiling
    double diurnal_factor = 2.0;
    double period = 86400.0;
    double phase = 0.0;
    std::string task_file;
};

struct Configuration {
    std::vector<ClusterDescriptor> clusters;  // in configuration order
    std::string local_site;                   // defaults to the first cluster
    std::string central_gateway;              // host:port of the central catalog
    std::string central_state;
    TransferDefaults transfer;
    catalog::Subscription subscription;
    std::string log_root;
    std::string token_file;
    int64_t token_lifetime = 604800;
    int net_timeout_ms = 2000;

    const ClusterDescriptor* find_cluster(const std::string& name) const;
    const ClusterDescriptor& cluster_or_throw(const std::string& name) const;
    const ClusterDescriptor& local_cluster() const { return cluster_or_throw(local_site); }
    std::vector<std::string> cluster_names() const;
};

/// Loads the system config and applies the per-user override field-by-field.
/// The override may also replace the cluster roster wholesale through its own
/// `clusters=` key. Missing user file is fine; missing system file is not.
Configuration load_config(const std::string& system_path, const std::string& user_path);

/// Same merge, from raw config text (pure; used by tests).
Configuration parse_config(const std::string& system_text, const std::string& user_text);

/// Resolution order: --config flag, $GRIDLET_CONFIG, /etc/gridlet.conf.
std::string default_system_path();
/// Resolution order: $GRIDLET_RC, $HOME/.gridletrc.
std::string default_user_path();

// ---- auth tokens ----

/// Self-describing bearer token: "g1.<issued_at>.<lifetime>.<hex>". Gateways
/// accept any token that parses and has not expired yet.
struct AuthToken {
    std::string token;
    int64_t issued_at = 0;
    int64_t lifetime_seconds = 604800;

    bool valid_at(double now) const { return now < double(issued_at) + double(lifetime_seconds); }
};

std::optional<AuthToken> parse_token(const std::string& token);

/// Mints a fresh token and persists it replace-by-rename, so a concurrent
/// reader never observes a torn token file.
AuthToken issue_token(const std::string& token_file, const Clock& clock,
                      int64_t lifetime_seconds = 604800);

/// Reads the persisted token; empty string when absent.
std::string load_token(const std::string& token_file);

}  // namespace gridlet::config
