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

#include <CLI11.hpp>

#include <string>
#include <vector>

#include "gridlet/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"gridlet - multi-cluster job and data fabric"};
    app.usage(gridlet::cli::usage_text());

    gridlet::cli::GlobalOptions opts;
    double clock_pin = 0;
    app.add_option("--config", opts.config_path, "system configuration file");
    app.add_option("--rc", opts.rc_path, "per-user override file");
    auto* clock_opt =
        app.add_option("--clock", clock_pin, "pin virtual time (seconds since epoch; test only)");
    app.allow_extras();

    CLI11_PARSE(app, argc, argv);
    if (clock_opt->count() > 0) opts.clock_pin = clock_pin;

    return gridlet::cli::dispatch(app.remaining(), opts);
}
