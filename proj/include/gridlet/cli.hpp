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

#include <optional>
#include <string>
#include <vector>

namespace gridlet::cli {

struct GlobalOptions {
    std::string config_path;         // overrides GRIDLET_CONFIG
    std::string rc_path;             // overrides GRIDLET_RC
    std::optional<double> clock_pin; // test-only: pin virtual time
};

/// Maps a subcommand invocation onto module operations. Exit codes:
/// 0 success, 1 usage/config, 2 not found (NoMatch, NotLocallyAvailable,
/// unknown job/task), 3 gateway/network, 4 auth.
int dispatch(const std::vector<std::string>& args, const GlobalOptions& opts);

const char* usage_text();

}  // namespace gridlet::cli
