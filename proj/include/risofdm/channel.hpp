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

// Tap-domain synthesis of the direct channel and of the per-reflector
// composite channel, plus their DFT views.
//
// Block indices in this API are zero-based (block = 0 .. U-1); the Doppler
// phasor of block b uses the one-based transmission index u = b + 1.

#pragma once

#include "error.hpp"
#include "scene.hpp"
#include "text.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace risofdm
{

inline double sinc(double x)
{
    if (x == 0.0)
        return 1.0;
    const double px = kPi * x;
    return std::sin(px) / px;
}

/// Immutable tap-domain realisation of one frame.
struct ChannelRealization
{
    std::size_t n_taps = 0;        ///< M
    std::size_t n_subcarriers = 0; ///< K
    double eta_s = 0.0;
    double block_duration_s = 0.0;
    Eigen::MatrixXcd direct;                 ///< U x M, row b holds the direct taps of block b
    std::vector<Eigen::MatrixXcd> composite; ///< U entries of N x M

    std::size_t n_blocks() const { return composite.size(); }
    std::size_t n_reflectors() const { return composite.empty() ? 0 : static_cast<std::size_t>(composite.front().rows()); }

    /// h_u + V_u^T omega (length M).
    Eigen::VectorXcd combined_taps(std::size_t block, const Eigen::VectorXcd &omega) const
    {
        return direct.row(static_cast<Eigen::Index>(block)).transpose() + composite[block].transpose() * omega;
    }

    void validate() const
    {
        require(n_taps >= 1 && n_taps <= n_subcarriers, ErrorKind::contract, "channel needs 1 <= M <= K");
        require(!composite.empty(), ErrorKind::contract, "channel has no blocks");
        require(direct.rows() == static_cast<Eigen::Index>(composite.size()) && direct.cols() == static_cast<Eigen::Index>(n_taps),
                ErrorKind::contract, "direct tap matrix has the wrong shape");
        for (const auto &v : composite)
            require(v.cols() == static_cast<Eigen::Index>(n_taps) && v.rows() == composite.front().rows(), ErrorKind::contract,
                    "composite matrices disagree in shape");
    }
};

/// Causality reference: earliest direct path, or earliest cascade if the
/// direct link is blocked.
inline double delay_reference(const PathSet &paths)
{
    if (!paths.direct.empty())
    {
        double eta = std::numeric_limits<double>::infinity();
        for (const auto &p : paths.direct)
            eta = std::min(eta, p.delay_s);
        return eta;
    }
    require(!paths.ap_ris.empty() && !paths.ris_ue.empty(), ErrorKind::invalid_argument, "path set is empty");
    double min_a = std::numeric_limits<double>::infinity();
    double min_b = std::numeric_limits<double>::infinity();
    for (const auto &p : paths.ap_ris)
        min_a = std::min(min_a, p.delay_s);
    for (const auto &p : paths.ris_ue)
        min_b = std::min(min_b, p.delay_s);
    return min_a + min_b;
}

/// Tap count covering the delay span, the largest RIS phase delay 1/(2 f_c)
/// and `guard` sidelobe taps.
inline std::size_t n_taps(const PathSet &paths, double bandwidth_hz, double eta, double carrier_hz, std::size_t guard,
                          std::size_t n_subcarriers)
{
    double max_delay = -std::numeric_limits<double>::infinity();
    for (const auto &p : paths.direct)
        max_delay = std::max(max_delay, p.delay_s);
    if (!paths.ap_ris.empty() && !paths.ris_ue.empty())
    {
        double max_a = 0.0;
        double max_b = 0.0;
        for (const auto &p : paths.ap_ris)
            max_a = std::max(max_a, p.delay_s);
        for (const auto &p : paths.ris_ue)
            max_b = std::max(max_b, p.delay_s);
        max_delay = std::max(max_delay, max_a + max_b);
    }
    require(std::isfinite(max_delay), ErrorKind::invalid_argument, "path set is empty");
    const double span = bandwidth_hz * (max_delay + 0.5 / carrier_hz - eta);
    const auto core = static_cast<std::size_t>(std::max(1.0, std::ceil(span)));
    const std::size_t m = core + guard;
    require(m <= n_subcarriers, ErrorKind::scenario_infeasible,
            "channel needs " + std::to_string(m) + " taps but only " + std::to_string(n_subcarriers) + " subcarriers exist");
    return m;
}

inline std::size_t n_taps(const PathSet &paths, const Scenario &scenario, double eta)
{
    return n_taps(paths, scenario.bandwidth_hz, eta, scenario.carrier_hz, scenario.guard_taps, scenario.n_subcarriers);
}

/// Direct taps of transmission block `u` (one-based), including the
/// per-block Doppler phasor.
inline Eigen::VectorXcd direct_taps(const PathSet &paths, const Scenario &scenario, double eta, std::size_t m_taps, std::size_t u)
{
    Eigen::VectorXcd h = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(m_taps));
    const double t = static_cast<double>(u) * scenario.block_duration_s;
    for (const auto &p : paths.direct)
    {
        const double amp = std::sqrt(p.gain);
        const cdouble phasor = std::polar(1.0, -2.0 * kPi * (scenario.carrier_hz * p.delay_s - p.doppler_hz * t));
        for (std::size_t m = 0; m < m_taps; ++m)
            h(static_cast<Eigen::Index>(m)) += amp * sinc(static_cast<double>(m) + scenario.bandwidth_hz * (eta - p.delay_s)) * phasor;
    }
    return h;
}

/// Direct taps of the stationary model (no Doppler term at all).
inline Eigen::VectorXcd direct_taps_stationary(const PathSet &paths, const Scenario &scenario, double eta, std::size_t m_taps)
{
    Eigen::VectorXcd h = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(m_taps));
    for (const auto &p : paths.direct)
    {
        const double amp = std::sqrt(p.gain);
        const cdouble phasor = std::polar(1.0, -2.0 * kPi * (scenario.carrier_hz * p.delay_s));
        for (std::size_t m = 0; m < m_taps; ++m)
            h(static_cast<Eigen::Index>(m)) += amp * sinc(static_cast<double>(m) + scenario.bandwidth_hz * (eta - p.delay_s)) * phasor;
    }
    return h;
}

namespace detail
{

template <typename PhaseFn>
Eigen::MatrixXcd composite_kernel(const PathSet &paths, const Scenario &scenario, double eta, std::size_t m_taps, PhaseFn phase_of)
{
    const double lambda = wavelength(scenario);
    const Eigen::Matrix3Xd psi = element_offsets(scenario.grid);
    const auto n = static_cast<Eigen::Index>(scenario.grid.size());

    std::vector<Eigen::VectorXcd> s_a;
    std::vector<Eigen::VectorXcd> s_b;
    for (const auto &a : paths.ap_ris)
        s_a.push_back(array_response(psi, a.angles, lambda));
    for (const auto &b : paths.ris_ue)
        s_b.push_back(array_response(psi, b.angles, lambda));

    Eigen::MatrixXcd v = Eigen::MatrixXcd::Zero(n, static_cast<Eigen::Index>(m_taps));
    Eigen::VectorXcd pulse(static_cast<Eigen::Index>(m_taps));
    for (std::size_t l = 0; l < paths.ap_ris.size(); ++l)
    {
        const auto &a = paths.ap_ris[l];
        for (std::size_t k = 0; k < paths.ris_ue.size(); ++k)
        {
            const auto &b = paths.ris_ue[k];
            const double amp = std::sqrt(a.gain * b.gain);
            const cdouble phasor = std::polar(1.0, phase_of(a, b));
            for (std::size_t m = 0; m < m_taps; ++m)
                pulse(static_cast<Eigen::Index>(m)) =
                    amp * sinc(static_cast<double>(m) + scenario.bandwidth_hz * (eta - a.delay_s - b.delay_s)) * phasor;
            const Eigen::VectorXcd steering = s_a[l].cwiseProduct(s_b[k]);
            v.noalias() += steering * pulse.transpose();
        }
    }
    return v;
}

} // namespace detail

/// Composite matrix V_u of block `u` (one-based): row n holds the taps
/// reflected by element n before its phase weight is applied.
inline Eigen::MatrixXcd composite_matrix(const PathSet &paths, const Scenario &scenario, double eta, std::size_t m_taps, std::size_t u)
{
    const double t = static_cast<double>(u) * scenario.block_duration_s;
    const double fc = scenario.carrier_hz;
    return detail::composite_kernel(paths, scenario, eta, m_taps, [&](const ApRisPath &a, const RisUePath &b) {
        return -2.0 * kPi * (fc * (a.delay_s + b.delay_s) - b.doppler_hz * t);
    });
}

inline Eigen::MatrixXcd composite_matrix_stationary(const PathSet &paths, const Scenario &scenario, double eta, std::size_t m_taps)
{
    const double fc = scenario.carrier_hz;
    return detail::composite_kernel(paths, scenario, eta, m_taps, [&](const ApRisPath &a, const RisUePath &b) {
        return -2.0 * kPi * (fc * (a.delay_s + b.delay_s));
    });
}

/// Frame of U blocks with Doppler phasors advancing per block.
inline ChannelRealization synthesize(const PathSet &paths, const Scenario &scenario)
{
    scenario.validate();
    paths.validate();
    ChannelRealization chan;
    chan.eta_s = delay_reference(paths);
    chan.n_taps = n_taps(paths, scenario, chan.eta_s);
    chan.n_subcarriers = scenario.n_subcarriers;
    chan.block_duration_s = scenario.block_duration_s;
    const auto u_count = static_cast<Eigen::Index>(scenario.n_blocks);
    chan.direct.resize(u_count, static_cast<Eigen::Index>(chan.n_taps));
    for (std::size_t b = 0; b < scenario.n_blocks; ++b)
    {
        chan.direct.row(static_cast<Eigen::Index>(b)) = direct_taps(paths, scenario, chan.eta_s, chan.n_taps, b + 1).transpose();
        chan.composite.push_back(composite_matrix(paths, scenario, chan.eta_s, chan.n_taps, b + 1));
    }
    return chan;
}

/// Single-block realisation of the stationary model.
inline ChannelRealization synthesize_stationary(const PathSet &paths, const Scenario &scenario)
{
    scenario.validate();
    paths.validate();
    ChannelRealization chan;
    chan.eta_s = delay_reference(paths);
    chan.n_taps = n_taps(paths, scenario, chan.eta_s);
    chan.n_subcarriers = scenario.n_subcarriers;
    chan.block_duration_s = scenario.block_duration_s;
    chan.direct.resize(1, static_cast<Eigen::Index>(chan.n_taps));
    chan.direct.row(0) = direct_taps_stationary(paths, scenario, chan.eta_s, chan.n_taps).transpose();
    chan.composite.push_back(composite_matrix_stationary(paths, scenario, chan.eta_s, chan.n_taps));
    return chan;
}

// ---------------------------------------------------------------- frequency

/// M x K matrix with entries e^{+j 2 pi i j / K} (row j = tap, column i =
/// subcarrier), so that x^T T gives f_i^H x for every i.
inline Eigen::MatrixXcd dft_conjugate_rows(std::size_t m_taps, std::size_t k)
{
    Eigen::MatrixXcd t(static_cast<Eigen::Index>(m_taps), static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < m_taps; ++j)
        for (std::size_t i = 0; i < k; ++i)
            t(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
                std::polar(1.0, 2.0 * kPi * static_cast<double>((i * j) % k) / static_cast<double>(k));
    return t;
}

/// f_i^H x for a tap vector implicitly zero-padded to K entries.
inline cdouble freq_response(const Eigen::VectorXcd &x, std::size_t i, std::size_t k)
{
    require(i < k, ErrorKind::invalid_argument, "subcarrier index out of range");
    require(static_cast<std::size_t>(x.size()) <= k, ErrorKind::invalid_argument, "tap vector longer than K");
    cdouble acc = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j)
        acc += std::polar(1.0, 2.0 * kPi * static_cast<double>((i * static_cast<std::size_t>(j)) % k) / static_cast<double>(k)) * x(j);
    return acc;
}

/// All K responses of a zero-padded tap vector.
inline Eigen::VectorXcd spectrum(const Eigen::VectorXcd &x, std::size_t k)
{
    require(static_cast<std::size_t>(x.size()) <= k, ErrorKind::invalid_argument, "tap vector longer than K");
    return (x.transpose() * dft_conjugate_rows(static_cast<std::size_t>(x.size()), k)).transpose();
}

/// Frequency-domain view of one block: direct response (K) and per-reflector
/// composite responses (N x K).
struct BlockSpectrum
{
    Eigen::VectorXcd direct;
    Eigen::MatrixXcd composite;

    Eigen::VectorXcd combined(const Eigen::VectorXcd &omega) const { return direct + composite.transpose() * omega; }
};

inline BlockSpectrum block_spectrum(const ChannelRealization &chan, std::size_t block)
{
    const Eigen::MatrixXcd t = dft_conjugate_rows(chan.n_taps, chan.n_subcarriers);
    BlockSpectrum s;
    s.direct = (chan.direct.row(static_cast<Eigen::Index>(block)) * t).transpose();
    s.composite = chan.composite[block] * t;
    return s;
}

// --------------------------------------------------------------------- CSV

// Layout: '#' metadata lines (key=value), then the header
// "block,tap,reflector,re,im". Direct taps use reflector = -1.
inline void write_channel_csv(const ChannelRealization &chan, const std::string &path)
{
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::io, "cannot open '" + path + "' for writing");
    out << "# n_subcarriers=" << chan.n_subcarriers << "\n";
    out << "# eta_s=" << text::format_double(chan.eta_s) << "\n";
    out << "# block_duration_s=" << text::format_double(chan.block_duration_s) << "\n";
    out << "block,tap,reflector,re,im\n";
    for (std::size_t b = 0; b < chan.n_blocks(); ++b)
    {
        for (std::size_t m = 0; m < chan.n_taps; ++m)
        {
            const cdouble h = chan.direct(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(m));
            out << b << ',' << m << ",-1," << text::format_double(h.real()) << ',' << text::format_double(h.imag()) << '\n';
        }
        const auto &v = chan.composite[b];
        for (Eigen::Index n = 0; n < v.rows(); ++n)
            for (std::size_t m = 0; m < chan.n_taps; ++m)
            {
                const cdouble x = v(n, static_cast<Eigen::Index>(m));
                out << b << ',' << m << ',' << n << ',' << text::format_double(x.real()) << ',' << text::format_double(x.imag()) << '\n';
            }
    }
    require(static_cast<bool>(out), ErrorKind::io, "write to '" + path + "' failed");
}

inline ChannelRealization read_channel_csv(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::io, "cannot open '" + path + "'");
    std::map<std::string, std::string> meta;
    struct Entry
    {
        std::size_t block, tap;
        long reflector;
        cdouble value;
    };
    std::vector<Entry> entries;
    std::string line;
    bool header_seen = false;
    std::size_t max_block = 0, max_tap = 0;
    long max_reflector = -1;
    while (std::getline(in, line))
    {
        const auto t = text::trim(line);
        if (t.empty())
            continue;
        if (t.front() == '#')
        {
            const auto body = text::trim(t.substr(1));
            const auto eq = body.find('=');
            if (eq != std::string_view::npos)
                meta[std::string(text::trim(body.substr(0, eq)))] = std::string(text::trim(body.substr(eq + 1)));
            continue;
        }
        if (!header_seen)
        {
            require(t == "block,tap,reflector,re,im", ErrorKind::parse, "unexpected channel CSV header in '" + path + "'");
            header_seen = true;
            continue;
        }
        const auto f = text::split(t, ',');
        require(f.size() == 5, ErrorKind::parse, "channel CSV row needs 5 fields in '" + path + "'");
        Entry e{static_cast<std::size_t>(text::parse_int(f[0])), static_cast<std::size_t>(text::parse_int(f[1])),
                static_cast<long>(text::parse_int(f[2])), {text::parse_double(f[3]), text::parse_double(f[4])}};
        max_block = std::max(max_block, e.block);
        max_tap = std::max(max_tap, e.tap);
        max_reflector = std::max(max_reflector, e.reflector);
        entries.push_back(e);
    }
    require(header_seen && !entries.empty(), ErrorKind::parse, "channel CSV '" + path + "' holds no taps");
    require(meta.count("n_subcarriers") && meta.count("eta_s") && meta.count("block_duration_s"), ErrorKind::parse,
            "channel CSV '" + path + "' lacks metadata");

    ChannelRealization chan;
    chan.n_subcarriers = static_cast<std::size_t>(text::parse_int(meta["n_subcarriers"]));
    chan.eta_s = text::parse_double(meta["eta_s"]);
    chan.block_duration_s = text::parse_double(meta["block_duration_s"]);
    chan.n_taps = max_tap + 1;
    const auto u = static_cast<Eigen::Index>(max_block + 1);
    const auto n = static_cast<Eigen::Index>(max_reflector + 1);
    chan.direct = Eigen::MatrixXcd::Zero(u, static_cast<Eigen::Index>(chan.n_taps));
    chan.composite.assign(static_cast<std::size_t>(u), Eigen::MatrixXcd::Zero(n, static_cast<Eigen::Index>(chan.n_taps)));
    for (const auto &e : entries)
    {
        if (e.reflector < 0)
            chan.direct(static_cast<Eigen::Index>(e.block), static_cast<Eigen::Index>(e.tap)) = e.value;
        else
            chan.composite[e.block](e.reflector, static_cast<Eigen::Index>(e.tap)) = e.value;
    }
    chan.validate();
    return chan;
}

} // namespace risofdm
