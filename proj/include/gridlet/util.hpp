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
#include <string_view>
#include <vector>

namespace gridlet {

/// "YYYY-MM-DDThh:mm:ssZ" from whole seconds since the epoch (UTC).
std::string iso8601(int64_t epoch_seconds);
std::optional<int64_t> parse_iso8601(std::string_view s);

/// Shell-style match with `*` and `?` only; no character classes.
/// An empty pattern matches everything.
bool glob_match(std::string_view pattern, std::string_view name);

std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_ws(std::string_view s);
std::string join(const std::vector<std::string>& parts, char sep);

bool starts_with(std::string_view s, std::string_view prefix);
std::string trim(std::string_view s);

std::optional<int64_t> parse_i64(std::string_view s);
std::optional<double> parse_f64(std::string_view s);

/// 16 hex chars from a properly seeded generator.
std::string random_hex16();

/// Exact signed rational with a positive denominator; used for the broker's
/// load index so argmin and tie comparisons never suffer FP rounding.
struct Rational {
    int64_t num = 0;
    int64_t den = 1;

    Rational() = default;
    Rational(int64_t n, int64_t d);

    static Rational from_decimal(std::string_view text);  // "2", "1.5", "-0.25"

    double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const;

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num == b.num && a.den == b.den;
    }
    friend bool operator<(const Rational& a, const Rational& b) {
        return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
    }
};

/// a / b for rationals, b > 0 required.
Rational rat_div(const Rational& a, const Rational& b);

/// Normalizes a site-logical path: must be absolute, "." and ".." are
/// rejected, duplicate slashes collapse. Returns nullopt when invalid.
std::optional<std::string> normalize_site_path(std::string_view path);

/// Joins a site path and a file name ("/data" + "f" -> "/data/f").
std::string join_site_path(std::string_view dir, std::string_view name);

}  // namespace gridlet
