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

#include <stdexcept>
#include <string>

namespace gridlet {

/// Error classes. Each maps to one documented CLI exit code:
/// usage/config errors -> 1, not-found/bad-state -> 2, gateway/network -> 3,
/// auth -> 4.
enum class ErrorKind {
    // usage / configuration (exit 1)
    UsageError,
    ParseError,
    MissingSystemConfig,
    BadField,
    // not found / bad state (exit 2)
    InvalidRecord,
    NotLocallyAvailable,
    NoMatch,
    UnknownSite,
    UnknownTask,
    UnknownJob,
    FileUnknown,
    NotDone,
    BadState,
    MismatchedCluster,
    UnreadableRoot,
    PathEscape,
    // gateway / network (exit 3)
    GatewayDown,
    PeerUnreachable,
    NoClusterAvailable,
    SubmitRejected,
    PartialFailure,
    BindFailed,
    TokenFileUnwritable,
    LogUnwritable,
    // auth (exit 4)
    AuthExpired,
    AuthRejected,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

    int exit_code() const {
        switch (kind_) {
            case ErrorKind::UsageError:
            case ErrorKind::ParseError:
            case ErrorKind::MissingSystemConfig:
            case ErrorKind::BadField:
                return 1;
            case ErrorKind::InvalidRecord:
            case ErrorKind::NotLocallyAvailable:
            case ErrorKind::NoMatch:
            case ErrorKind::UnknownSite:
            case ErrorKind::UnknownTask:
            case ErrorKind::UnknownJob:
            case ErrorKind::FileUnknown:
            case ErrorKind::NotDone:
            case ErrorKind::BadState:
            case ErrorKind::MismatchedCluster:
            case ErrorKind::UnreadableRoot:
            case ErrorKind::PathEscape:
                return 2;
            case ErrorKind::GatewayDown:
            case ErrorKind::PeerUnreachable:
            case ErrorKind::NoClusterAvailable:
            case ErrorKind::SubmitRejected:
            case ErrorKind::PartialFailure:
            case ErrorKind::BindFailed:
            case ErrorKind::TokenFileUnwritable:
            case ErrorKind::LogUnwritable:
                return 3;
            case ErrorKind::AuthExpired:
            case ErrorKind::AuthRejected:
                return 4;
        }
        return 1;
    }

private:
    ErrorKind kind_;
};

}  // namespace gridlet
