// SPDX-License-Identifier: Apache-2.0
//
// risofdm: link-level simulation of RIS-aided OFDM links
// Copyright (C) 2026 The risofdm authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace risofdm
{

enum class ErrorKind
{
    invalid_scenario,
    invalid_argument,
    degenerate_geometry,
    scenario_infeasible,
    contract,
    undefined_metric,
    unmeasurable,
    numerical,
    io,
    parse
};

inline std::string_view to_string(ErrorKind kind)
{
    switch (kind)
    {
    case ErrorKind::invalid_scenario:
        return "invalid_scenario";
    case ErrorKind::invalid_argument:
        return "invalid_argument";
    case ErrorKind::degenerate_geometry:
        return "degenerate_geometry";
    case ErrorKind::scenario_infeasible:
        return "scenario_infeasible";
    case ErrorKind::contract:
        return "contract";
    case ErrorKind::undefined_metric:
        return "undefined_metric";
    case ErrorKind::unmeasurable:
        return "unmeasurable";
    case ErrorKind::numerical:
        return "numerical";
    case ErrorKind::io:
        return "io";
    case ErrorKind::parse:
        return "parse";
    }
    return "unknown";
}

// All library failures are reported through this type; kind() lets callers
// (and the CLI's machine-readable error line) tell them apart.
class Error : public std::runtime_error
{
  public:
    Error(ErrorKind kind, const std::string &message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string &message)
{
    if (!condition)
        throw Error(kind, message);
}

} // namespace risofdm
