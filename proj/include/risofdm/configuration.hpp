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

#include "error.hpp"
#include "scene.hpp"
#include "text.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <fstream>
#include <string>
#include <vector>

namespace risofdm
{

/// Wraps a phase into [-pi, pi).
inline double wrap_phase(double x)
{
    double r = x - 2.0 * kPi * std::floor((x + kPi) / (2.0 * kPi));
    if (r >= kPi)
        r -= 2.0 * kPi;
    if (r < -kPi)
        r = -kPi;
    return r;
}

/// Phase configuration of the surface, one row per transmission block.
struct RisConfiguration
{
    Eigen::MatrixXd thetas; ///< U x N
    bool time_invariant = false;

    std::size_t n_blocks() const { return static_cast<std::size_t>(thetas.rows()); }
    std::size_t n_reflectors() const { return static_cast<std::size_t>(thetas.cols()); }

    /// Unit-modulus weights e^{j theta} of one block.
    Eigen::VectorXcd omega(std::size_t block) const
    {
        const auto row = thetas.row(static_cast<Eigen::Index>(block));
        Eigen::VectorXcd w(row.size());
        for (Eigen::Index n = 0; n < row.size(); ++n)
            w(n) = std::polar(1.0, row(n));
        return w;
    }

    static RisConfiguration constant(std::size_t blocks, const Eigen::VectorXd &row)
    {
        RisConfiguration c;
        c.thetas = row.transpose().replicate(static_cast<Eigen::Index>(blocks), 1);
        c.time_invariant = true;
        return c;
    }
};

// Layout: header "block,reflector,theta_radians", one line per entry.
inline void write_config_csv(const RisConfiguration &config, const std::string &path)
{
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::io, "cannot open '" + path + "' for writing");
    out << "block,reflector,theta_radians\n";
    for (Eigen::Index u = 0; u < config.thetas.rows(); ++u)
        for (Eigen::Index n = 0; n < config.thetas.cols(); ++n)
            out << u << ',' << n << ',' << text::format_double(config.thetas(u, n)) << '\n';
    require(static_cast<bool>(out), ErrorKind::io, "write to '" + path + "' failed");
}

inline RisConfiguration read_config_csv(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::io, "cannot open '" + path + "'");
    std::string line;
    require(static_cast<bool>(std::getline(in, line)) && text::trim(line) == "block,reflector,theta_radians", ErrorKind::parse,
            "unexpected configuration CSV header in '" + path + "'");
    struct Entry
    {
        Eigen::Index u, n;
        double theta;
    };
    std::vector<Entry> entries;
    Eigen::Index rows = 0, cols = 0;
    while (std::getline(in, line))
    {
        const auto t = text::trim(line);
        if (t.empty())
            continue;
        const auto f = text::split(t, ',');
        require(f.size() == 3, ErrorKind::parse, "configuration CSV row needs 3 fields in '" + path + "'");
        Entry e{static_cast<Eigen::Index>(text::parse_int(f[0])), static_cast<Eigen::Index>(text::parse_int(f[1])), text::parse_double(f[2])};
        require(e.u >= 0 && e.n >= 0, ErrorKind::parse, "negative index in '" + path + "'");
        rows = std::max(rows, e.u + 1);
        cols = std::max(cols, e.n + 1);
        entries.push_back(e);
    }
    RisConfiguration config;
    config.thetas = Eigen::MatrixXd::Zero(rows, cols);
    for (const auto &e : entries)
        config.thetas(e.u, e.n) = e.theta;
    config.time_invariant = rows > 0;
    for (Eigen::Index u = 1; u < rows; ++u)
        config.time_invariant = config.time_invariant && config.thetas.row(u) == config.thetas.row(0);
    return config;
}

} // namespace risofdm
